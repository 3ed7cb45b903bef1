#include "handopt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace handopt::eval {

void validate(const EvalConfig& c) {
  if (c.grid_intervals < 1) throw InvalidConfig("grid intervals K must be >= 1");
  if (!(c.max_force > 0.0) || !std::isfinite(c.max_force)) {
    throw InvalidConfig("F_max must be positive");
  }
  if (c.episodes < 1) throw InvalidConfig("episodes per grid point must be >= 1");
}

std::vector<double> force_grid(int intervals, double max_force) {
  if (intervals < 1) throw InvalidConfig("grid intervals K must be >= 1");
  std::vector<double> grid(static_cast<std::size_t>(intervals) + 1);
  for (int k = 0; k <= intervals; ++k) grid[k] = k * max_force / intervals;
  return grid;
}

double trapezoid_auc(std::span<const double> forces, std::span<const double> rates) {
  if (forces.size() != rates.size() || forces.size() < 2) {
    throw InvalidConfig("trapezoid needs matching grids of at least two points");
  }
  if (!(forces.back() > forces.front())) throw InvalidConfig("force grid must be increasing");
  // Summing the same widths for the span makes a constant curve exact.
  double area = 0.0;
  double span = 0.0;
  for (std::size_t k = 1; k < forces.size(); ++k) {
    const double width = forces[k] - forces[k - 1];
    area += 0.5 * (rates[k - 1] + rates[k]) * width;
    span += width;
  }
  return area / span;
}

double success_rate(const learning::Controller& policy, const env::Simulator& sim,
                    const env::ObjectSpec& instance, double force, int n,
                    std::uint64_t seed, const WorkerPool& pool) {
  if (n < 1) throw InvalidConfig("success_rate needs n >= 1");
  if (!(force >= 0.0)) throw InvalidConfig("force magnitude must be >= 0");
  std::vector<char> ok(static_cast<std::size_t>(n), 0);
  pool.parallel_for(ok.size(), [&](std::size_t e) {
    const auto cfg = env::make_episode(sim.params(), instance, force,
                                       derive_seed(seed, e));
    ok[e] = learning::rollout(policy, sim, cfg, 1.0).success ? 1 : 0;
  });
  const int hits = static_cast<int>(std::count(ok.begin(), ok.end(), 1));
  return static_cast<double>(hits) / n;
}

InstanceCurve auc_metric(const learning::Controller& policy,
                         const env::Simulator& sim, const env::ObjectSpec& instance,
                         const EvalConfig& config, std::uint64_t seed,
                         const WorkerPool& pool) {
  validate(config);
  InstanceCurve curve;
  curve.forces = force_grid(config.grid_intervals, config.max_force);
  const std::size_t points = curve.forces.size();
  const std::size_t n = static_cast<std::size_t>(config.episodes);

  // Flatten (k, episode) so every cell can run on any worker.
  std::vector<char> ok(points * n, 0);
  pool.parallel_for(ok.size(), [&](std::size_t job) {
    const std::size_t k = job / n;
    const std::size_t e = job % n;
    const std::uint64_t cell = derive_seed(
        seed, static_cast<std::uint64_t>(instance.one_hot_index), k);
    const auto cfg = env::make_episode(sim.params(), instance, curve.forces[k],
                                       derive_seed(cell, e));
    ok[job] = learning::rollout(policy, sim, cfg, 1.0).success ? 1 : 0;
  });
  curve.success_rates.resize(points);
  for (std::size_t k = 0; k < points; ++k) {
    const auto first = ok.begin() + static_cast<std::ptrdiff_t>(k * n);
    const auto hits = std::count(first, first + static_cast<std::ptrdiff_t>(n), 1);
    curve.success_rates[k] = static_cast<double>(hits) / config.episodes;
  }
  curve.auc = trapezoid_auc(curve.forces, curve.success_rates);
  return curve;
}

EvalReport evaluate_design(const learning::Controller& policy,
                           const env::Simulator& sim,
                           std::span<const env::ObjectSpec> instances,
                           const EvalConfig& config, std::uint64_t seed,
                           const WorkerPool& pool) {
  if (instances.empty()) throw InvalidConfig("evaluation needs at least one instance");
  EvalReport report;
  report.n_episodes_per_point = config.episodes;
  report.seed = seed;
  for (const auto& inst : instances) {
    report.per_instance[inst.one_hot_index] =
        auc_metric(policy, sim, inst, config, seed, pool);
  }
  // Duplicate instances collapse into one map entry.
  double sum = 0.0;
  for (const auto& [_, c] : report.per_instance) sum += c.auc;
  report.aggregate_auc = sum / static_cast<double>(report.per_instance.size());
  return report;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace handopt::eval
