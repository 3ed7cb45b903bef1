#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "handopt/env.hpp"
#include "handopt/parallel.hpp"

namespace handopt::learning {

struct PolicyArch {
  int obs_dim = env::kObsDim;
  int hidden = 32;
  int action_dim = env::kActionDim;
  std::string activation = "tanh";

  std::size_t param_count() const {
    return static_cast<std::size_t>(obs_dim * hidden + hidden +
                                    hidden * action_dim + action_dim);
  }
  friend bool operator==(const PolicyArch&, const PolicyArch&) = default;
};

/// Two-layer tanh MLP, one policy for every object instance (the one-hot id is
/// part of the observation). Flat layout: W1 (hidden x obs, row-major), b1,
/// W2 (action x hidden, row-major), b2.
struct PolicyParams {
  PolicyArch arch;
  std::vector<double> params;

  static PolicyParams zeros();
  /// Every parameter ~ U[-range, range].
  static PolicyParams random(std::uint64_t seed, double range = 0.1);

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

/// Throws InvalidConfig unless the architecture is the supported tanh MLP and
/// the parameter count matches it.
void validate(const PolicyParams& policy);

env::Action act(std::span<const double> params, const env::Observation& obs);
inline env::Action act(const PolicyParams& p, const env::Observation& obs) {
  return act(p.params, obs);
}

/// Any deterministic action source; scripted controllers use this directly.
using Controller = std::function<env::Action(const env::Observation&)>;
Controller as_controller(const PolicyParams& policy);

struct RolloutResult {
  double discounted_return = 0.0;
  bool success = false;
  int steps = 0;
};

using StepObserver =
    std::function<void(int t, const env::SimState& state, double reward)>;

/// One episode; stops at the horizon or as soon as the success predicate
/// holds. The return sums gamma^t times the reward of transition t.
RolloutResult rollout(const Controller& controller, const env::Simulator& sim,
                      const env::EpisodeConfig& config, double gamma,
                      const StepObserver& observer = {});
RolloutResult rollout(std::span<const double> params, const env::Simulator& sim,
                      const env::EpisodeConfig& config, double gamma);

/// Object instances, environment parameters and discount shared by every
/// design during training and return estimation. Episode i uses instance
/// i mod |instances|.
struct TaskSet {
  env::EnvParams env;
  std::vector<env::ObjectSpec> instances;
  double gamma = 0.99;

  env::EpisodeConfig episode(std::size_t index, double force,
                             std::uint64_t seed) const;
};

/// Returns of episodes [first, first + count) under seed `seed`.
std::vector<double> episode_returns(std::span<const double> params,
                                    const env::Simulator& sim, const TaskSet& task,
                                    std::size_t first, std::size_t count,
                                    double force, std::uint64_t seed,
                                    const WorkerPool& pool);

/// Mean discounted return over `n_episodes` episodes with goals and force
/// directions drawn per episode and magnitude fixed at `force`.
double estimate_return(const PolicyParams& policy, const env::Simulator& sim,
                       const TaskSet& task, int n_episodes, double force,
                       std::uint64_t seed, const WorkerPool& pool);

struct TrainReport {
  int generations_used = 0;
  std::vector<double> best_return_curve;  // best-so-far after each generation
  bool converged = false;
  double final_expected_return = 0.0;
  double initial_return = 0.0;  // fitness of the starting point
};

/// First generation whose best-so-far reaches `threshold` (0 if the starting
/// point already does), or nullopt.
std::optional<int> generations_to_threshold(const TrainReport& report,
                                            double threshold);

struct EsOptions {
  int budget = 500;         // generations
  int window = 20;          // W
  double min_gain = 0.01;   // delta, relative to |best|
  int population = 32;      // lambda, even (antithetic pairs)
  int elite = 8;            // mu
  double sigma = 0.05;
  std::optional<double> stop_at;  // stop once best-so-far reaches this
};

void validate(const EsOptions& opts);

/// Maps a batch of parameter vectors to fitness values, one per vector.
using BatchFitness =
    std::function<std::vector<double>(const std::vector<std::vector<double>>&)>;

struct EsResult {
  std::vector<double> params;  // best-so-far
  TrainReport report;
};

/// (mu, lambda) evolution strategy with antithetic sampling. Each generation
/// evaluates the current mean plus lambda perturbations of it, then moves the
/// mean to the fitness-weighted recombination of the top mu perturbations.
/// Stops when the best-so-far gains less than delta over `window`
/// generations, when `stop_at` is reached, or at the budget.
EsResult evolution_strategy(const BatchFitness& fitness, std::vector<double> init,
                            const EsOptions& opts, std::uint64_t seed);

struct TrainingConfig {
  EsOptions es;
  int episodes = 8;         // episodes per fitness evaluation
  double init_range = 0.1;  // fresh init ~ U[-init_range, init_range]
  /// Seed of the fixed fitness episode set; unset derives it from the
  /// training seed. Sharing it lets warm starts see the same tasks.
  std::optional<std::uint64_t> episode_seed;
};

struct TrainOutcome {
  PolicyParams policy;
  TrainReport report;
};

/// Trains a policy for one design, warm-started from `init` when given.
/// Fitness is the mean return over a fixed episode set without disturbance.
TrainOutcome train(const env::Simulator& sim, const TaskSet& task,
                   const PolicyParams* init, const TrainingConfig& config,
                   std::uint64_t seed, const WorkerPool& pool);

}  // namespace handopt::learning
