#include "handopt/evolution.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace handopt::evo {

void Pool::add(PoolEntry entry) {
  if (find(entry.id)) throw InvalidConfig("duplicate pool id " + entry.id);
  entries_.push_back(std::move(entry));
}

const PoolEntry* Pool::find(const std::string& id) const {
  for (const auto& e : entries_) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

double Pool::best_return() const {
  if (entries_.empty()) throw EmptyPool("pool is empty");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& e : entries_) best = std::max(best, e.expected_return);
  return best;
}

void validate(const EvolutionConfig& c) {
  c.bounds.validate();
  if (!(c.xi > 0.0)) throw InvalidConfig("xi must be positive");
  if (!(c.epsilon >= 0.0)) throw InvalidConfig("epsilon must be >= 0");
  if (c.iterations < 0) throw InvalidConfig("iterations must be >= 0");
  if (c.seeds.size() < 2) throw InvalidConfig("need at least two seed designs");
  if (c.q && std::isnan(*c.q)) throw InvalidConfig("q must not be NaN");
}

double default_threshold(const std::vector<double>& seed_returns) {
  if (seed_returns.empty()) throw EmptyPool("no seed returns");
  const double mean = std::accumulate(seed_returns.begin(), seed_returns.end(), 0.0) /
                      static_cast<double>(seed_returns.size());
  return mean - 0.4 * std::abs(mean);
}

std::string seed_id(std::size_t index) { return fmt::format("seed-{:02d}", index); }

std::string stone_id(int iteration, int stone) {
  return fmt::format("it{:04d}-st{:02d}", iteration, stone);
}

std::string_view Event::type_name(Type t) {
  switch (t) {
    case Type::kCandidateProposed: return "candidate_proposed";
    case Type::kStoneTrained: return "stone_trained";
    case Type::kStoneAdmitted: return "stone_admitted";
    case Type::kStoneRejected: return "stone_rejected";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Backends

SimulationBackend::SimulationBackend(SimulationSetup setup, const WorkerPool& pool)
    : setup_(std::move(setup)), pool_(pool) {
  setup_.bounds.validate();
  if (setup_.task.instances.empty()) throw InvalidConfig("no training instances");
  if (setup_.return_episodes < 1) throw InvalidConfig("return_episodes must be >= 1");
  eval::validate(setup_.eval);
}

env::Simulator SimulationBackend::simulator(const design::DesignParams& theta) const {
  return env::Simulator(env::build_hand(theta, setup_.bounds, setup_.task.env.physics.finger_radius),
                        setup_.task.env);
}

learning::TrainOutcome SimulationBackend::train(const design::DesignParams& theta,
                                                const learning::PolicyParams* init,
                                                std::uint64_t seed) {
  const auto sim = simulator(theta);
  return learning::train(sim, setup_.task, init, setup_.training, seed, pool_);
}

double SimulationBackend::expected_return(const design::DesignParams& theta,
                                          const learning::PolicyParams& policy) {
  const auto sim = simulator(theta);
  return learning::estimate_return(policy, sim, setup_.task, setup_.return_episodes,
                                   0.0, setup_.return_seed, pool_);
}

std::optional<double> SimulationBackend::evaluate_auc(
    const design::DesignParams& theta, const learning::PolicyParams& policy) {
  if (!setup_.compute_auc) return std::nullopt;
  const auto sim = simulator(theta);
  return eval::evaluate_design(learning::as_controller(policy), sim,
                               setup_.task.instances, setup_.eval, setup_.eval_seed,
                               pool_)
      .aggregate_auc;
}

AnalyticBackend::AnalyticBackend(design::DesignParams optimum,
                                 design::DesignBounds bounds, double peak)
    : optimum_(optimum), bounds_(std::move(bounds)), peak_(peak) {
  bounds_.validate();
}

double AnalyticBackend::value(const design::DesignParams& theta) const {
  const auto a = theta.to_vector();
  const auto b = optimum_.to_vector();
  const auto span = bounds_.span();
  double s = 0.0;
  for (std::size_t i = 0; i < design::kDesignDim; ++i) {
    const double d = (a[i] - b[i]) / span[i];
    s += d * d;
  }
  return peak_ - s;
}

learning::TrainOutcome AnalyticBackend::train(const design::DesignParams& theta,
                                              const learning::PolicyParams* init,
                                              std::uint64_t) {
  learning::TrainOutcome out;
  out.policy = init ? *init : learning::PolicyParams::zeros();
  const double v = value(theta);
  out.report.generations_used = 1;
  out.report.best_return_curve = {v};
  out.report.converged = true;
  out.report.final_expected_return = v;
  out.report.initial_return = v;
  return out;
}

double AnalyticBackend::expected_return(const design::DesignParams& theta,
                                        const learning::PolicyParams&) {
  return value(theta);
}

// ---------------------------------------------------------------------------
// Algorithm

namespace {

void emit(EventSink* sink, const Event& e) {
  if (sink) sink->on_event(e);
}

}  // namespace

Pool init_pool(const EvolutionConfig& config, DesignBackend& backend,
               EventSink* sink) {
  validate(config);
  for (std::size_t i = 0; i < config.seeds.size(); ++i) {
    if (!config.bounds.contains(config.seeds[i])) {
      throw SeedOutOfBounds("seed design " + std::to_string(i) +
                            " lies outside the design bounds");
    }
  }
  Pool pool;
  for (std::size_t i = 0; i < config.seeds.size(); ++i) {
    PoolEntry e;
    e.id = seed_id(i);
    e.theta = config.seeds[i];
    auto trained = backend.train(e.theta, nullptr, derive_seed(config.seed, 0, i));
    e.policy = std::move(trained.policy);
    e.train_report = std::move(trained.report);
    e.expected_return = backend.expected_return(e.theta, e.policy);
    e.auc = backend.evaluate_auc(e.theta, e.policy);
    if (sink) sink->on_entry(e);
    pool.add(std::move(e));
  }
  return pool;
}

Candidate propose_candidate(const Pool& pool, const design::DesignBounds& bounds,
                            Rng& rng) {
  const std::size_t n = pool.size();
  if (n < 2) throw PoolTooSmall("need at least two pool entries to propose");
  const std::size_t i = rng.index(n);
  std::size_t j = rng.index(n - 1);
  if (j >= i) ++j;
  const auto& a = pool.entries()[i];
  const auto& b = pool.entries()[j];
  Candidate c;
  c.theta = design::crossover(a.theta, b.theta, rng);
  c.theta = design::mutate(c.theta, bounds, rng);
  c.theta = design::clamp(c.theta, bounds);
  c.parent_ids = {a.id, b.id};
  return c;
}

const PoolEntry& nearest_source(const Pool& pool, const design::DesignParams& theta,
                                const design::DesignBounds& bounds) {
  if (pool.empty()) throw EmptyPool("pool is empty");
  const PoolEntry* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& e : pool.entries()) {
    const double d = design::normalized_distance(e.theta, theta, bounds);
    if (d < best_d || (d == best_d && best && e.id < best->id)) {
      best = &e;
      best_d = d;
    }
  }
  return *best;
}

std::vector<Stone> transfer_policy(const PoolEntry& source,
                                   const design::DesignParams& target,
                                   const EvolutionConfig& config, double q,
                                   int iteration, DesignBackend& backend,
                                   EventSink* sink) {
  const double d0 = design::normalized_distance(source.theta, target, config.bounds);
  std::vector<Stone> stones;
  if (d0 <= config.epsilon || d0 == 0.0) return stones;

  const int count = static_cast<int>(std::ceil(d0 / config.xi - 1e-12));
  design::DesignParams current = source.theta;
  const learning::PolicyParams* warm = &source.policy;
  int k = 0;
  while (!(current == target)) {
    current = design::interp_step(current, target, config.xi, config.bounds);
    Stone s;
    s.id = stone_id(iteration, k);
    s.theta = current;
    auto trained = backend.train(current, warm,
                                 derive_seed(config.seed, static_cast<std::uint64_t>(iteration),
                                             static_cast<std::uint64_t>(k) + 1));
    s.policy = std::move(trained.policy);
    s.report = std::move(trained.report);
    s.expected_return = backend.expected_return(current, s.policy);
    s.admitted = s.expected_return > q;

    Event e;
    e.type = Event::Type::kStoneTrained;
    e.iteration = iteration;
    e.id = s.id;
    e.theta = s.theta;
    e.source_id = source.id;
    e.expected_return = s.expected_return;
    e.stone_index = k;
    e.stone_count = count;
    emit(sink, e);

    stones.push_back(std::move(s));
    warm = &stones.back().policy;
    ++k;
    // Guard against a runaway walk; the step arithmetic bounds it by `count`.
    if (k > count + 1) throw InvalidConfig("interpolation failed to reach the target");
  }
  return stones;
}

RunResult co_optimize(const EvolutionConfig& config, DesignBackend& backend,
                      EventSink* sink) {
  RunResult result;
  result.pool = init_pool(config, backend, sink);
  Pool& pool = result.pool;

  std::vector<double> seed_returns;
  for (const auto& e : pool.entries()) seed_returns.push_back(e.expected_return);
  result.q = config.q ? *config.q : default_threshold(seed_returns);
  result.best_return_history.push_back(pool.best_return());

  for (int it = 1; it <= config.iterations; ++it) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(it)));
    const auto cand = propose_candidate(pool, config.bounds, rng);
    const PoolEntry& source = nearest_source(pool, cand.theta, config.bounds);
    const double dist = design::normalized_distance(source.theta, cand.theta, config.bounds);

    Event proposed;
    proposed.type = Event::Type::kCandidateProposed;
    proposed.iteration = it;
    proposed.id = fmt::format("it{:04d}", it);
    proposed.theta = cand.theta;
    proposed.parent_ids = cand.parent_ids;
    proposed.source_id = source.id;
    proposed.distance = dist;
    emit(sink, proposed);

    // Copy: admissions below may reallocate the pool's storage.
    const PoolEntry src = source;
    auto stones = transfer_policy(src, cand.theta, config, result.q, it, backend, sink);
    for (auto& s : stones) {
      Event e;
      e.type = s.admitted ? Event::Type::kStoneAdmitted : Event::Type::kStoneRejected;
      e.iteration = it;
      e.id = s.id;
      e.theta = s.theta;
      e.source_id = src.id;
      e.expected_return = s.expected_return;
      e.q = result.q;
      emit(sink, e);
      if (!s.admitted) continue;

      PoolEntry entry;
      entry.id = s.id;
      entry.theta = s.theta;
      entry.policy = std::move(s.policy);
      entry.expected_return = s.expected_return;
      entry.auc = backend.evaluate_auc(entry.theta, entry.policy);
      entry.lineage = {cand.parent_ids, src.id, it};
      entry.train_report = std::move(s.report);
      if (sink) sink->on_entry(entry);
      pool.add(std::move(entry));
    }
    result.best_return_history.push_back(pool.best_return());
  }
  return result;
}

}  // namespace handopt::evo
