#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "handopt/env.hpp"
#include "handopt/learning.hpp"
#include "handopt/parallel.hpp"

namespace handopt::eval {

struct EvalConfig {
  int grid_intervals = 10;  // K
  double max_force = 1.0;   // F_max, N
  int episodes = 64;        // n per grid point
};

void validate(const EvalConfig& config);

/// F_k = k * F_max / K for k = 0..K.
std::vector<double> force_grid(int intervals, double max_force);

/// Trapezoidal integral of `rates` over `forces`, divided by the grid span.
double trapezoid_auc(std::span<const double> forces, std::span<const double> rates);

/// Fraction of `n` episodes that end in success with disturbance magnitude
/// `force`. Episode e uses seed derive_seed(seed, e).
double success_rate(const learning::Controller& policy, const env::Simulator& sim,
                    const env::ObjectSpec& instance, double force, int n,
                    std::uint64_t seed, const WorkerPool& pool);

struct InstanceCurve {
  std::vector<double> forces;
  std::vector<double> success_rates;
  double auc = 0.0;
};

/// Success rate over the force grid and its normalized area. Grid point k
/// draws episodes from derive_seed(seed, one_hot_index, k).
InstanceCurve auc_metric(const learning::Controller& policy,
                         const env::Simulator& sim, const env::ObjectSpec& instance,
                         const EvalConfig& config, std::uint64_t seed,
                         const WorkerPool& pool);

struct EvalReport {
  std::map<int, InstanceCurve> per_instance;  // keyed by one-hot index
  double aggregate_auc = 0.0;
  int n_episodes_per_point = 0;
  std::uint64_t seed = 0;
};

EvalReport evaluate_design(const learning::Controller& policy,
                           const env::Simulator& sim,
                           std::span<const env::ObjectSpec> instances,
                           const EvalConfig& config, std::uint64_t seed,
                           const WorkerPool& pool);

/// Spearman rank correlation with average ranks for ties; nullopt when either
/// sequence is constant or the lengths differ or are below 2.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

}  // namespace handopt::eval
