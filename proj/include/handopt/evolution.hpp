#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "handopt/design_space.hpp"
#include "handopt/evaluation.hpp"
#include "handopt/learning.hpp"

namespace handopt::evo {

struct Lineage {
  std::vector<std::string> parent_ids;  // 0 for seeds, 2 for candidates
  std::optional<std::string> source_id;
  int iteration = 0;  // 0 for seeds

  friend bool operator==(const Lineage&, const Lineage&) = default;
};

struct PoolEntry {
  std::string id;
  design::DesignParams theta;
  learning::PolicyParams policy;
  double expected_return = 0.0;
  std::optional<double> auc;
  Lineage lineage;
  learning::TrainReport train_report;

  bool is_seed() const { return lineage.iteration == 0; }
};

/// The elite pool. Entries are kept in admission order and never evicted.
class Pool {
 public:
  const std::vector<PoolEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Throws InvalidConfig on a duplicate id.
  void add(PoolEntry entry);
  const PoolEntry* find(const std::string& id) const;
  /// Highest expected return; throws EmptyPool.
  double best_return() const;

 private:
  std::vector<PoolEntry> entries_;
};

struct EvolutionConfig {
  design::DesignBounds bounds = design::DesignBounds::table_defaults();
  std::optional<double> q;  // unset: derived from the seed returns
  double xi = 0.1;          // interpolation step, normalized units
  double epsilon = 1e-6;    // skip transfer when the source is this close
  int iterations = 10;      // N
  std::vector<design::DesignParams> seeds = {design::dash_v3(), design::dash_v5()};
  std::uint64_t seed = 0;
};

/// Throws InvalidConfig on xi <= 0, epsilon < 0, iterations < 0, fewer than
/// two seeds or invalid bounds.
void validate(const EvolutionConfig& config);

/// Default reward threshold: the mean seed return lowered by 40% of its
/// magnitude, i.e. 60% of the mean for positive returns.
double default_threshold(const std::vector<double>& seed_returns);

/// Training and scoring of a single design. Implementations must be
/// deterministic in their arguments.
class DesignBackend {
 public:
  virtual ~DesignBackend() = default;

  /// Trains from `init`, or from a fresh initialization when null.
  virtual learning::TrainOutcome train(const design::DesignParams& theta,
                                       const learning::PolicyParams* init,
                                       std::uint64_t seed) = 0;
  virtual double expected_return(const design::DesignParams& theta,
                                 const learning::PolicyParams& policy) = 0;
  /// Robustness score for admitted designs, if the backend supports it.
  virtual std::optional<double> evaluate_auc(const design::DesignParams& theta,
                                             const learning::PolicyParams& policy) {
    (void)theta;
    (void)policy;
    return std::nullopt;
  }
};

/// Everything the simulator-backed trainer needs.
struct SimulationSetup {
  learning::TaskSet task;
  learning::TrainingConfig training;
  design::DesignBounds bounds = design::DesignBounds::table_defaults();
  int return_episodes = 32;  // episodes per expected_return estimate
  std::uint64_t return_seed = 0;
  eval::EvalConfig eval;
  bool compute_auc = true;
  std::uint64_t eval_seed = 0;
};

class SimulationBackend : public DesignBackend {
 public:
  SimulationBackend(SimulationSetup setup, const WorkerPool& pool);

  learning::TrainOutcome train(const design::DesignParams& theta,
                               const learning::PolicyParams* init,
                               std::uint64_t seed) override;
  double expected_return(const design::DesignParams& theta,
                         const learning::PolicyParams& policy) override;
  std::optional<double> evaluate_auc(const design::DesignParams& theta,
                                     const learning::PolicyParams& policy) override;

  env::Simulator simulator(const design::DesignParams& theta) const;
  const SimulationSetup& setup() const { return setup_; }

 private:
  SimulationSetup setup_;
  const WorkerPool& pool_;
};

/// Closed-form stand-in: f(theta) = peak - sum_i ((theta_i - optimum_i) /
/// span_i)^2. Training returns a zero policy and reports f(theta).
class AnalyticBackend : public DesignBackend {
 public:
  AnalyticBackend(design::DesignParams optimum, design::DesignBounds bounds,
                  double peak = 1.0);

  double value(const design::DesignParams& theta) const;

  learning::TrainOutcome train(const design::DesignParams& theta,
                               const learning::PolicyParams* init,
                               std::uint64_t seed) override;
  double expected_return(const design::DesignParams& theta,
                         const learning::PolicyParams& policy) override;

 private:
  design::DesignParams optimum_;
  design::DesignBounds bounds_;
  double peak_;
};

struct Event {
  enum class Type { kCandidateProposed, kStoneTrained, kStoneAdmitted, kStoneRejected };
  Type type = Type::kCandidateProposed;
  int iteration = 0;
  std::string id;  // candidate or stone id
  design::DesignParams theta;
  std::vector<std::string> parent_ids;
  std::optional<std::string> source_id;
  std::optional<double> distance;         // candidate: to its source
  std::optional<double> expected_return;  // stones
  std::optional<double> q;                // admission decisions
  std::optional<int> stone_index;
  std::optional<int> stone_count;

  static std::string_view type_name(Type t);
};

/// Receives pool admissions and log events in order.
class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void on_entry(const PoolEntry& entry) = 0;
  virtual void on_event(const Event& event) = 0;
};

/// Collects everything in memory.
class RecordingSink : public EventSink {
 public:
  void on_entry(const PoolEntry& entry) override { entries.push_back(entry); }
  void on_event(const Event& event) override { events.push_back(event); }

  std::vector<PoolEntry> entries;
  std::vector<Event> events;
};

/// Trains every seed from scratch and admits it unconditionally. Throws
/// SeedOutOfBounds if a seed lies outside the bounds.
Pool init_pool(const EvolutionConfig& config, DesignBackend& backend,
               EventSink* sink = nullptr);

struct Candidate {
  design::DesignParams theta;
  std::vector<std::string> parent_ids;
};

/// Two distinct entries drawn uniformly, then crossover, mutate, clamp.
/// Throws PoolTooSmall below two entries.
Candidate propose_candidate(const Pool& pool, const design::DesignBounds& bounds,
                            Rng& rng);

/// Closest entry in normalized distance, ties to the smallest id. Throws
/// EmptyPool.
const PoolEntry& nearest_source(const Pool& pool, const design::DesignParams& theta,
                                const design::DesignBounds& bounds);

struct Stone {
  std::string id;
  design::DesignParams theta;
  learning::PolicyParams policy;
  learning::TrainReport report;
  double expected_return = 0.0;
  bool admitted = false;
};

/// Walks from the source toward `target` in steps of xi, training each
/// stepping stone warm-started from the previous one. Stones are judged
/// against `q` but every stone is trained. Returns an empty list when the
/// source is within epsilon of the target. Does not modify the pool.
std::vector<Stone> transfer_policy(const PoolEntry& source,
                                   const design::DesignParams& target,
                                   const EvolutionConfig& config, double q,
                                   int iteration, DesignBackend& backend,
                                   EventSink* sink = nullptr);

struct RunResult {
  Pool pool;
  double q = 0.0;
  /// best_return() after initialization and after each iteration.
  std::vector<double> best_return_history;
};

/// The full loop: initialize, then N rounds of propose, nearest source and
/// transfer, admitting the stones that clear q. Entries reach the sink as
/// soon as they are admitted, so an exception leaves a consistent prefix.
RunResult co_optimize(const EvolutionConfig& config, DesignBackend& backend,
                      EventSink* sink = nullptr);

std::string seed_id(std::size_t index);
std::string stone_id(int iteration, int stone);

}  // namespace handopt::evo
