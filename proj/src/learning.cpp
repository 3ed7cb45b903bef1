#include "handopt/learning.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace handopt::learning {

PolicyParams PolicyParams::zeros() {
  PolicyParams p;
  p.params.assign(p.arch.param_count(), 0.0);
  return p;
}

PolicyParams PolicyParams::random(std::uint64_t seed, double range) {
  PolicyParams p;
  Rng rng(seed);
  p.params.resize(p.arch.param_count());
  for (auto& v : p.params) v = rng.uniform(-range, range);
  return p;
}

void validate(const PolicyParams& policy) {
  const PolicyArch expected;
  if (!(policy.arch == expected)) {
    throw InvalidConfig("unsupported policy architecture");
  }
  if (policy.params.size() != expected.param_count()) {
    throw InvalidConfig("policy has " + std::to_string(policy.params.size()) +
                        " parameters, expected " +
                        std::to_string(expected.param_count()));
  }
}

env::Action act(std::span<const double> params, const env::Observation& obs) {
  constexpr int kIn = env::kObsDim;
  constexpr int kHidden = 32;
  constexpr int kOut = env::kActionDim;
  const double* w1 = params.data();
  const double* b1 = w1 + kIn * kHidden;
  const double* w2 = b1 + kHidden;
  const double* b2 = w2 + kHidden * kOut;

  std::array<double, kHidden> h;
  for (int i = 0; i < kHidden; ++i) {
    double s = b1[i];
    const double* row = w1 + i * kIn;
    for (int j = 0; j < kIn; ++j) s += row[j] * obs[j];
    h[i] = std::tanh(s);
  }
  env::Action a;
  for (int i = 0; i < kOut; ++i) {
    double s = b2[i];
    const double* row = w2 + i * kHidden;
    for (int j = 0; j < kHidden; ++j) s += row[j] * h[j];
    a[i] = std::tanh(s);
  }
  return a;
}

Controller as_controller(const PolicyParams& policy) {
  return [params = policy.params](const env::Observation& obs) {
    return act(params, obs);
  };
}

namespace {

template <typename Policy>
RolloutResult run_episode(const Policy& policy, const env::Simulator& sim,
                          const env::EpisodeConfig& config, double gamma,
                          const StepObserver* observer) {
  const auto& params = sim.params();
  const auto& crit = params.success;
  RolloutResult res;
  env::SimState state = sim.reset(config);
  double discount = 1.0;
  for (int t = 0; t < config.horizon; ++t) {
    const env::Action a = policy(sim.observe(state, config));
    state = sim.step(state, a, config);
    const double r = env::reward(state, a, config, params);
    res.discounted_return += discount * r;
    discount *= gamma;
    res.steps = t + 1;
    if (observer && *observer) (*observer)(t, state, r);
    if (env::is_success(state, config, crit.tol_pos, crit.tol_ang, crit.hold_steps)) {
      res.success = true;
      break;
    }
  }
  return res;
}

}  // namespace

RolloutResult rollout(const Controller& controller, const env::Simulator& sim,
                      const env::EpisodeConfig& config, double gamma,
                      const StepObserver& observer) {
  return run_episode(controller, sim, config, gamma, &observer);
}

RolloutResult rollout(std::span<const double> params, const env::Simulator& sim,
                      const env::EpisodeConfig& config, double gamma) {
  auto policy = [params](const env::Observation& obs) { return act(params, obs); };
  return run_episode(policy, sim, config, gamma, nullptr);
}

env::EpisodeConfig TaskSet::episode(std::size_t index, double force,
                                    std::uint64_t seed) const {
  if (instances.empty()) throw InvalidConfig("task has no object instances");
  return env::make_episode(env, instances[index % instances.size()], force,
                           derive_seed(seed, index));
}

std::vector<double> episode_returns(std::span<const double> params,
                                    const env::Simulator& sim, const TaskSet& task,
                                    std::size_t first, std::size_t count,
                                    double force, std::uint64_t seed,
                                    const WorkerPool& pool) {
  std::vector<double> out(count);
  pool.parallel_for(count, [&](std::size_t i) {
    const auto cfg = task.episode(first + i, force, seed);
    out[i] = rollout(params, sim, cfg, task.gamma).discounted_return;
  });
  return out;
}

double estimate_return(const PolicyParams& policy, const env::Simulator& sim,
                       const TaskSet& task, int n_episodes, double force,
                       std::uint64_t seed, const WorkerPool& pool) {
  if (n_episodes < 1) throw InvalidConfig("estimate_return needs n_episodes >= 1");
  const auto r = episode_returns(policy.params, sim, task, 0,
                                 static_cast<std::size_t>(n_episodes), force,
                                 seed, pool);
  return std::accumulate(r.begin(), r.end(), 0.0) / n_episodes;
}

std::optional<int> generations_to_threshold(const TrainReport& report,
                                            double threshold) {
  if (report.initial_return >= threshold) return 0;
  for (std::size_t g = 0; g < report.best_return_curve.size(); ++g) {
    if (report.best_return_curve[g] >= threshold) return static_cast<int>(g + 1);
  }
  return std::nullopt;
}

void validate(const EsOptions& o) {
  if (o.budget < 1) throw InvalidConfig("training budget must be >= 1");
  if (o.window < 1) throw InvalidConfig("convergence window must be >= 1");
  if (o.population < 2 || o.population % 2 != 0) {
    throw InvalidConfig("population must be a positive even number");
  }
  if (o.elite < 1 || o.elite >= o.population) {
    throw InvalidConfig("elite count must be in [1, population)");
  }
  if (!(o.sigma > 0.0)) throw InvalidConfig("sigma must be positive");
  if (!(o.min_gain >= 0.0)) throw InvalidConfig("min_gain must be >= 0");
}

EsResult evolution_strategy(const BatchFitness& fitness, std::vector<double> init,
                            const EsOptions& opts, std::uint64_t seed) {
  validate(opts);
  const std::size_t dim = init.size();
  const int pairs = opts.population / 2;

  std::vector<double> mean = std::move(init);
  EsResult result;
  auto& rep = result.report;
  double best = -std::numeric_limits<double>::infinity();

  auto best_at = [&](int g) {
    return g == 0 ? rep.initial_return : rep.best_return_curve[g - 1];
  };

  for (int gen = 1; gen <= opts.budget; ++gen) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(gen)));
    // batch[0] is the current mean, then antithetic pairs.
    std::vector<std::vector<double>> batch(1 + opts.population);
    batch[0] = mean;
    for (int p = 0; p < pairs; ++p) {
      auto& plus = batch[1 + 2 * p];
      auto& minus = batch[2 + 2 * p];
      plus.resize(dim);
      minus.resize(dim);
      for (std::size_t i = 0; i < dim; ++i) {
        const double e = opts.sigma * rng.normal();
        plus[i] = mean[i] + e;
        minus[i] = mean[i] - e;
      }
    }
    const auto fit = fitness(batch);
    if (fit.size() != batch.size()) {
      throw InvalidConfig("fitness returned the wrong number of values");
    }
    if (gen == 1) {
      rep.initial_return = fit[0];
      best = fit[0];
      result.params = batch[0];
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (fit[i] > best) {
        best = fit[i];
        result.params = batch[i];
      }
    }
    rep.best_return_curve.push_back(best);
    rep.generations_used = gen;

    // Recombine the top mu perturbations, weighted by fitness above the
    // first rejected one.
    std::vector<int> order(opts.population);
    std::iota(order.begin(), order.end(), 1);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fit[a] > fit[b]; });
    const double cutoff = fit[order[opts.elite]];
    std::vector<double> weights(opts.elite);
    double wsum = 0.0;
    for (int k = 0; k < opts.elite; ++k) {
      weights[k] = fit[order[k]] - cutoff;
      wsum += weights[k];
    }
    if (!(wsum > 0.0) || !std::isfinite(wsum)) {
      std::fill(weights.begin(), weights.end(), 1.0);
      wsum = opts.elite;
    }
    std::vector<double> next(dim, 0.0);
    for (int k = 0; k < opts.elite; ++k) {
      const double w = weights[k] / wsum;
      const auto& x = batch[order[k]];
      for (std::size_t i = 0; i < dim; ++i) next[i] += w * x[i];
    }
    mean = std::move(next);

    if (opts.stop_at && best >= *opts.stop_at) break;
    if (gen >= opts.window) {
      const double delta = std::max(opts.min_gain * std::abs(best), 1e-9);
      if (best - best_at(gen - opts.window) < delta) {
        rep.converged = true;
        break;
      }
    }
  }
  rep.final_expected_return = best;
  return result;
}

TrainOutcome train(const env::Simulator& sim, const TaskSet& task,
                   const PolicyParams* init, const TrainingConfig& config,
                   std::uint64_t seed, const WorkerPool& pool) {
  if (config.episodes < 1) throw InvalidConfig("training episodes must be >= 1");
  PolicyParams start;
  if (init) {
    validate(*init);
    start = *init;
  } else {
    start = PolicyParams::random(derive_seed(seed, 0x1417), config.init_range);
  }

  const std::uint64_t episode_seed =
      config.episode_seed ? *config.episode_seed : derive_seed(seed, 0xF17);
  const std::size_t n_eps = static_cast<std::size_t>(config.episodes);
  std::vector<env::EpisodeConfig> episodes;
  episodes.reserve(n_eps);
  for (std::size_t e = 0; e < n_eps; ++e) {
    episodes.push_back(task.episode(e, 0.0, episode_seed));
  }

  const BatchFitness fitness = [&](const std::vector<std::vector<double>>& batch) {
    std::vector<double> returns(batch.size() * n_eps);
    pool.parallel_for(returns.size(), [&](std::size_t job) {
      const std::size_t c = job / n_eps;
      const std::size_t e = job % n_eps;
      returns[job] = rollout(batch[c], sim, episodes[e], task.gamma).discounted_return;
    });
    std::vector<double> out(batch.size());
    for (std::size_t c = 0; c < batch.size(); ++c) {
      double s = 0.0;
      for (std::size_t e = 0; e < n_eps; ++e) s += returns[c * n_eps + e];
      out[c] = s / static_cast<double>(n_eps);
    }
    return out;
  };

  auto es = evolution_strategy(fitness, start.params, config.es,
                               derive_seed(seed, 0xE5));
  TrainOutcome out;
  out.policy.params = std::move(es.params);
  out.report = std::move(es.report);
  return out;
}

}  // namespace handopt::learning
