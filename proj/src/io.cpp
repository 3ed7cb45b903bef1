#include "handopt/io.hpp"

#include <fmt/format.h>

namespace handopt::io {

namespace {

template <typename T>
T get_field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace

json to_json(const design::DesignParams& theta) {
  json j = json::object();
  const auto v = theta.to_vector();
  const auto& names = design::field_names();
  for (std::size_t i = 0; i < design::kDesignDim; ++i) j[std::string(names[i])] = v[i];
  j["version"] = kDesignFormatVersion;
  return j;
}

design::DesignParams design_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("design must be a JSON object");
  const auto& names = design::field_names();
  design::DesignVector v{};
  for (std::size_t i = 0; i < design::kDesignDim; ++i) {
    v[i] = get_field<double>(j, std::string(names[i]).c_str());
  }
  std::size_t known = design::kDesignDim;
  if (j.contains("version")) {
    if (get_field<int>(j, "version") != kDesignFormatVersion) {
      throw ConfigError("unsupported design format version");
    }
    ++known;
  }
  if (j.size() != known) throw ConfigError("design has unknown fields");
  return design::DesignParams::from_vector(v);
}

json to_json(const learning::PolicyParams& policy) {
  return {{"arch",
           {{"obs_dim", policy.arch.obs_dim},
            {"hidden", policy.arch.hidden},
            {"action_dim", policy.arch.action_dim},
            {"activation", policy.arch.activation}}},
          {"params", policy.params}};
}

learning::PolicyParams policy_from_json(const json& j) {
  learning::PolicyParams p;
  const json arch = get_field<json>(j, "arch");
  p.arch.obs_dim = get_field<int>(arch, "obs_dim");
  p.arch.hidden = get_field<int>(arch, "hidden");
  p.arch.action_dim = get_field<int>(arch, "action_dim");
  p.arch.activation = get_field<std::string>(arch, "activation");
  p.params = get_field<std::vector<double>>(j, "params");
  try {
    learning::validate(p);
  } catch (const InvalidConfig& e) {
    throw ConfigError(e.what());
  }
  return p;
}

json to_json(const learning::TrainReport& r) {
  return {{"generations_used", r.generations_used},
          {"best_return_curve", r.best_return_curve},
          {"converged", r.converged},
          {"final_expected_return", r.final_expected_return},
          {"initial_return", r.initial_return}};
}

learning::TrainReport train_report_from_json(const json& j) {
  learning::TrainReport r;
  r.generations_used = get_field<int>(j, "generations_used");
  r.best_return_curve = get_field<std::vector<double>>(j, "best_return_curve");
  r.converged = get_field<bool>(j, "converged");
  r.final_expected_return = get_field<double>(j, "final_expected_return");
  r.initial_return = get_field<double>(j, "initial_return");
  return r;
}

json to_json(const evo::PoolEntry& e) {
  json lineage = {{"parent_ids", e.lineage.parent_ids},
                  {"source_id", nullptr},
                  {"iteration", e.lineage.iteration}};
  if (e.lineage.source_id) lineage["source_id"] = *e.lineage.source_id;
  json j = {{"id", e.id},
            {"theta", to_json(e.theta)},
            {"expected_return", e.expected_return},
            {"auc", nullptr},
            {"lineage", lineage},
            {"train_report", to_json(e.train_report)},
            {"policy", to_json(e.policy)}};
  if (e.auc) j["auc"] = *e.auc;
  return j;
}

evo::PoolEntry pool_entry_from_json(const json& j) {
  evo::PoolEntry e;
  e.id = get_field<std::string>(j, "id");
  e.theta = design_from_json(get_field<json>(j, "theta"));
  e.expected_return = get_field<double>(j, "expected_return");
  const json auc = get_field<json>(j, "auc");
  if (!auc.is_null()) e.auc = get_field<double>(j, "auc");
  const json lin = get_field<json>(j, "lineage");
  e.lineage.parent_ids = get_field<std::vector<std::string>>(lin, "parent_ids");
  const json src = get_field<json>(lin, "source_id");
  if (!src.is_null()) e.lineage.source_id = get_field<std::string>(lin, "source_id");
  e.lineage.iteration = get_field<int>(lin, "iteration");
  e.train_report = train_report_from_json(get_field<json>(j, "train_report"));
  e.policy = policy_from_json(get_field<json>(j, "policy"));
  return e;
}

json to_json(const evo::Event& e) {
  json j = {{"event", evo::Event::type_name(e.type)},
            {"iteration", e.iteration},
            {"id", e.id},
            {"theta", to_json(e.theta)}};
  if (!e.parent_ids.empty()) j["parent_ids"] = e.parent_ids;
  if (e.source_id) j["source_id"] = *e.source_id;
  if (e.distance) j["distance"] = *e.distance;
  if (e.expected_return) j["expected_return"] = *e.expected_return;
  if (e.q) j["q"] = *e.q;
  if (e.stone_index) j["stone_index"] = *e.stone_index;
  if (e.stone_count) j["stone_count"] = *e.stone_count;
  return j;
}

std::string instance_name(int one_hot_index) {
  if (one_hot_index < 0 || one_hot_index >= env::kNumInstances) {
    throw UnknownShape("instance index out of range");
  }
  const auto shape = env::kAllShapes[static_cast<std::size_t>(one_hot_index / 3)];
  const double scale = env::kScales[static_cast<std::size_t>(one_hot_index % 3)];
  return env::make_object(shape, scale).name();
}

json to_json(const eval::EvalReport& report) {
  json per = json::object();
  for (const auto& [idx, c] : report.per_instance) {
    per[instance_name(idx)] = {{"one_hot_index", idx},
                               {"forces", c.forces},
                               {"success_rates", c.success_rates},
                               {"auc", c.auc}};
  }
  return {{"per_instance", per},
          {"aggregate_auc", report.aggregate_auc},
          {"n_episodes_per_point", report.n_episodes_per_point},
          {"seed", report.seed}};
}

std::vector<evo::PoolEntry> load_pool(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read pool file " + path.string());
  std::vector<evo::PoolEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      entries.push_back(pool_entry_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
  }
  return entries;
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path)
    : out_(path, std::ios::out | std::ios::app | std::ios::binary) {
  if (!out_) throw ConfigError("cannot open " + path.string() + " for writing");
}

void JsonlWriter::write(const json& j) {
  out_ << j.dump() << '\n';
  out_.flush();
}

JsonlSink::JsonlSink(const std::filesystem::path& pool_path,
                     const std::filesystem::path& log_path)
    : pool_(pool_path), log_(log_path) {}

void JsonlSink::on_entry(const evo::PoolEntry& entry) { pool_.write(to_json(entry)); }

void JsonlSink::on_event(const evo::Event& event) { log_.write(to_json(event)); }

std::string format_double(double v) { return fmt::format("{}", v); }

void write_eval_curves_csv(std::ostream& out, const std::string& design_id,
                           const eval::EvalReport& report) {
  out << "design_id,instance,F,success_rate\n";
  for (const auto& [idx, c] : report.per_instance) {
    const auto name = instance_name(idx);
    for (std::size_t k = 0; k < c.forces.size(); ++k) {
      out << design_id << ',' << name << ',' << format_double(c.forces[k]) << ','
          << format_double(c.success_rates[k]) << '\n';
    }
  }
}

void write_eval_summary_csv(std::ostream& out, const std::string& design_id,
                            const eval::EvalReport& report) {
  out << "design_id,instance,auc\n";
  for (const auto& [idx, c] : report.per_instance) {
    out << design_id << ',' << instance_name(idx) << ',' << format_double(c.auc) << '\n';
  }
}

std::string design_csv_header() {
  std::string out;
  for (const auto& n : design::field_names()) {
    if (!out.empty()) out += ',';
    out += n;
  }
  return out;
}

std::string design_csv_row(const design::DesignParams& theta) {
  std::string out;
  for (const double v : theta.to_vector()) {
    if (!out.empty()) out += ',';
    out += format_double(v);
  }
  return out;
}

}  // namespace handopt::io
