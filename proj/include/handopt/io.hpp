#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "handopt/evaluation.hpp"
#include "handopt/evolution.hpp"

namespace handopt::io {

using nlohmann::json;

inline constexpr int kDesignFormatVersion = 1;

/// The 14 named fields plus a `version` tag.
json to_json(const design::DesignParams& theta);
design::DesignParams design_from_json(const json& j);

json to_json(const learning::PolicyParams& policy);
learning::PolicyParams policy_from_json(const json& j);

json to_json(const learning::TrainReport& report);
learning::TrainReport train_report_from_json(const json& j);

json to_json(const evo::PoolEntry& entry);
evo::PoolEntry pool_entry_from_json(const json& j);

json to_json(const evo::Event& event);

/// Instance names are keyed by "shape@scale" in addition to the one-hot index.
json to_json(const eval::EvalReport& report);

/// Reads pool.jsonl. Throws ConfigError on unreadable or malformed files.
std::vector<evo::PoolEntry> load_pool(const std::filesystem::path& path);

/// Appends compact JSON lines and flushes after each one.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path);
  void write(const json& j);

 private:
  std::ofstream out_;
};

/// Streams admissions to pool.jsonl and events to log.jsonl.
class JsonlSink : public evo::EventSink {
 public:
  JsonlSink(const std::filesystem::path& pool_path,
            const std::filesystem::path& log_path);
  void on_entry(const evo::PoolEntry& entry) override;
  void on_event(const evo::Event& event) override;

 private:
  JsonlWriter pool_;
  JsonlWriter log_;
};

/// Shortest round-trip representation used in every CSV file.
std::string format_double(double v);

/// design_id,instance,F,success_rate rows.
void write_eval_curves_csv(std::ostream& out, const std::string& design_id,
                           const eval::EvalReport& report);
/// design_id,instance,auc rows.
void write_eval_summary_csv(std::ostream& out, const std::string& design_id,
                            const eval::EvalReport& report);

std::string instance_name(int one_hot_index);

/// Comma-joined field names, then one row per design in the same order.
std::string design_csv_header();
std::string design_csv_row(const design::DesignParams& theta);

}  // namespace handopt::io
