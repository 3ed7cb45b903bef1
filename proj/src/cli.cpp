#include "handopt/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "handopt/config.hpp"
#include "handopt/io.hpp"

namespace handopt::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

struct ConfigArgs {
  std::optional<std::string> path;
  std::vector<std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", path, "JSON run configuration");
    app->add_option("--set", overrides, "Override a config key, e.g. training.budget=50")
        ->allow_extra_args(false);
  }

  // Explicit --config wins; otherwise a config.json next to `sibling` is used.
  cfg::RunConfig load(const std::optional<fs::path>& sibling = std::nullopt) const {
    std::optional<fs::path> p;
    if (path) {
      p = *path;
    } else if (sibling) {
      const auto candidate = sibling->parent_path() / "config.json";
      if (fs::exists(candidate)) p = candidate;
    }
    return cfg::load_config(p, overrides);
  }
};

std::vector<evo::PoolEntry> read_pool(const std::string& path) {
  if (!fs::exists(path)) throw UnknownReference("pool file " + path + " does not exist");
  return io::load_pool(path);
}

const evo::PoolEntry& find_entry(const std::vector<evo::PoolEntry>& pool,
                                 const std::string& id) {
  for (const auto& e : pool) {
    if (e.id == id) return e;
  }
  throw UnknownReference("no pool entry with id '" + id + "'");
}

std::vector<env::ObjectSpec> reference_instances(const cfg::RunConfig& c,
                                                 const std::string& spec) {
  try {
    return cfg::resolve_instances(c, spec);
  } catch (const UnknownShape& e) {
    throw UnknownReference(e.what());
  } catch (const UnknownScale& e) {
    throw UnknownReference(e.what());
  }
}

void write_summary(const fs::path& path, const std::vector<evo::PoolEntry>& pool) {
  std::ofstream out(path, std::ios::binary);
  out << "id,aggregate_auc,expected_return,iteration\n";
  for (const auto& e : pool) {
    out << e.id << ',' << (e.auc ? io::format_double(*e.auc) : std::string()) << ','
        << io::format_double(e.expected_return) << ',' << e.lineage.iteration << '\n';
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

// --- evolve ----------------------------------------------------------------

struct EvolveArgs {
  ConfigArgs config;
  std::optional<std::uint64_t> seed;
  std::optional<int> iters;
  std::optional<std::string> out_dir;
  std::optional<unsigned> workers;
};

int cmd_evolve(const EvolveArgs& a, std::ostream& out) {
  auto overrides = a.config.overrides;
  if (a.seed) overrides.push_back(fmt::format("seed={}", *a.seed));
  if (a.iters) overrides.push_back(fmt::format("evolution.iterations={}", *a.iters));
  if (a.out_dir) overrides.push_back("output_dir=" + json(*a.out_dir).dump());
  if (a.workers) overrides.push_back(fmt::format("workers={}", *a.workers));
  const auto c = cfg::load_config(
      a.config.path ? std::optional<fs::path>(*a.config.path) : std::nullopt, overrides);

  const fs::path dir = c.output_dir;
  fs::create_directories(dir);
  const fs::path pool_path = dir / "pool.jsonl";
  const fs::path log_path = dir / "log.jsonl";
  fs::remove(pool_path);
  fs::remove(log_path);
  write_text(dir / "config.json", cfg::to_json(c).dump(2) + "\n");

  const auto instances = cfg::resolve_instances(c, c.instances);
  WorkerPool workers(cfg::resolve_workers(c));
  evo::SimulationBackend backend(cfg::make_setup(c, instances), workers);

  std::optional<double> q;
  {
    io::JsonlSink sink(pool_path, log_path);
    try {
      q = evo::co_optimize(c.evolution, backend, &sink).q;
    } catch (const NumericalBlowup&) {
      // Keep the partial pool usable before reporting the failure.
      write_summary(dir / "summary.csv", io::load_pool(pool_path));
      throw;
    }
  }
  const auto pool = io::load_pool(pool_path);
  write_summary(dir / "summary.csv", pool);
  double best = pool.front().expected_return;
  for (const auto& e : pool) best = std::max(best, e.expected_return);
  out << fmt::format("pool: {} entries ({} seeds), q = {}, best expected return = {}\n",
                     pool.size(), c.evolution.seeds.size(), io::format_double(*q),
                     io::format_double(best));
  out << "wrote " << (dir / "summary.csv").string() << '\n';
  return kExitOk;
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  ConfigArgs config;
  std::string design = "v5";
  std::optional<std::string> design_file;
  std::optional<std::string> instances;
  std::optional<std::string> init;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const auto c = a.config.load();
  design::DesignParams theta;
  std::string name = a.design;
  if (a.design_file) {
    std::ifstream in(*a.design_file);
    if (!in) throw ConfigError("cannot read design file " + *a.design_file);
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("design file is not valid JSON");
    theta = io::design_from_json(j);
    name = fs::path(*a.design_file).stem().string();
  } else {
    theta = cfg::named_design(a.design);
  }
  if (!c.bounds.contains(theta)) throw OutOfBoundsDesign("design lies outside the bounds");

  std::optional<learning::PolicyParams> init;
  if (a.init) {
    std::ifstream in(*a.init);
    if (!in) throw ConfigError("cannot read policy file " + *a.init);
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("policy file is not valid JSON");
    init = io::policy_from_json(j.contains("policy") ? j.at("policy") : j);
  }

  const auto instances = reference_instances(c, a.instances.value_or(c.instances));
  WorkerPool workers(cfg::resolve_workers(c));
  evo::SimulationBackend backend(cfg::make_setup(c, instances), workers);
  const std::uint64_t seed = a.seed.value_or(c.seed);
  auto trained = backend.train(theta, init ? &*init : nullptr, seed);
  const double ret = backend.expected_return(theta, trained.policy);

  const fs::path path = a.out ? fs::path(*a.out) : fs::path(c.output_dir) / ("train_" + name + ".json");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const json doc = {{"theta", io::to_json(theta)},
                    {"expected_return", ret},
                    {"train_report", io::to_json(trained.report)},
                    {"policy", io::to_json(trained.policy)}};
  write_text(path, doc.dump() + "\n");
  out << fmt::format("generations {}, converged {}, expected return {}\n",
                     trained.report.generations_used, trained.report.converged,
                     io::format_double(ret));
  out << "wrote " << path.string() << '\n';
  return kExitOk;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  ConfigArgs config;
  std::string pool;
  std::string id;
  std::optional<std::string> instances;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto pool = read_pool(a.pool);
  const auto& entry = find_entry(pool, a.id);
  const auto c = a.config.load(fs::path(a.pool));
  const auto instances = reference_instances(c, a.instances.value_or(c.instances));
  WorkerPool workers(cfg::resolve_workers(c));
  const auto setup = cfg::make_setup(c, instances);
  evo::SimulationBackend backend(setup, workers);
  const auto sim = backend.simulator(entry.theta);
  const auto report =
      eval::evaluate_design(learning::as_controller(entry.policy), sim, instances,
                            c.eval, a.seed.value_or(setup.eval_seed), workers);

  const std::string prefix =
      a.out ? *a.out : (fs::path(a.pool).parent_path() / ("eval_" + a.id)).string();
  if (fs::path(prefix).has_parent_path()) fs::create_directories(fs::path(prefix).parent_path());
  {
    std::ofstream f(prefix + "_curves.csv", std::ios::binary);
    io::write_eval_curves_csv(f, entry.id, report);
  }
  {
    std::ofstream f(prefix + "_auc.csv", std::ios::binary);
    io::write_eval_summary_csv(f, entry.id, report);
  }
  json doc = io::to_json(report);
  doc["design_id"] = entry.id;
  write_text(prefix + ".json", doc.dump(2) + "\n");
  out << fmt::format("{}: aggregate AUC {} over {} instance(s)\n", entry.id,
                     io::format_double(report.aggregate_auc), report.per_instance.size());
  return kExitOk;
}

// --- rank ------------------------------------------------------------------

struct RankArgs {
  ConfigArgs config;
  std::string pool;
  std::optional<std::size_t> top;
};

int cmd_rank(const RankArgs& a, std::ostream& out) {
  auto pool = read_pool(a.pool);
  if (pool.empty()) throw EmptyPool("pool " + a.pool + " is empty");

  if (std::any_of(pool.begin(), pool.end(), [](const auto& e) { return !e.auc; })) {
    auto c = a.config.load(fs::path(a.pool));
    c.compute_auc = true;
    const auto instances = cfg::resolve_instances(c, c.instances);
    WorkerPool workers(cfg::resolve_workers(c));
    evo::SimulationBackend backend(cfg::make_setup(c, instances), workers);
    for (auto& e : pool) {
      if (!e.auc) e.auc = backend.evaluate_auc(e.theta, e.policy);
    }
  }
  std::stable_sort(pool.begin(), pool.end(), [](const auto& x, const auto& y) {
    if (*x.auc != *y.auc) return *x.auc > *y.auc;
    return x.id < y.id;
  });
  const std::size_t rows = std::min(pool.size(), a.top.value_or(pool.size()));
  out << "rank,id,aggregate_auc,expected_return,iteration\n";
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& e = pool[i];
    out << i + 1 << ',' << e.id << ',' << io::format_double(*e.auc) << ','
        << io::format_double(e.expected_return) << ',' << e.lineage.iteration << '\n';
  }
  return kExitOk;
}

// --- replay ----------------------------------------------------------------

struct ReplayArgs {
  ConfigArgs config;
  std::string pool;
  std::string id;
  std::string instance = "sphere@1.0";
  std::uint64_t seed = 0;
  double force = 0.0;
  std::string out = "trajectory.csv";
};

int cmd_replay(const ReplayArgs& a, std::ostream& out) {
  const auto pool = read_pool(a.pool);
  const auto& entry = find_entry(pool, a.id);
  const auto c = a.config.load(fs::path(a.pool));
  const auto instances = reference_instances(c, a.instance);
  if (instances.size() != 1) throw UnknownReference("replay needs exactly one instance");
  if (!(a.force >= 0.0)) throw ConfigError("--force must be >= 0");

  const env::Simulator sim(env::build_hand(entry.theta, c.bounds, c.env.physics.finger_radius),
                           c.env);
  const auto episode = env::make_episode(c.env, instances.front(), a.force, a.seed);
  const fs::path path = a.out;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  env::write_trajectory_header(f);
  const auto res = learning::rollout(
      learning::as_controller(entry.policy), sim, episode, c.gamma,
      [&](int t, const env::SimState& s, double r) { env::write_trajectory_row(f, t, s, r); });
  out << fmt::format("{} steps, success {}, return {}\n", res.steps, res.success,
                     io::format_double(res.discounted_return));
  return kExitOk;
}

// --- report ----------------------------------------------------------------

int cmd_report(const std::string& run_dir, std::ostream& out) {
  const fs::path dir = run_dir;
  const auto pool = read_pool((dir / "pool.jsonl").string());
  std::map<std::string, int> counts;
  if (std::ifstream log(dir / "log.jsonl"); log) {
    std::string line;
    while (std::getline(log, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("event")) throw ConfigError("malformed log line");
      ++counts[j.at("event").get<std::string>()];
    }
  }
  std::size_t seeds = 0;
  for (const auto& e : pool) seeds += e.is_seed() ? 1 : 0;
  out << fmt::format("run: {}\n", dir.string());
  out << fmt::format("pool entries: {} ({} seeds, {} evolved)\n", pool.size(), seeds,
                     pool.size() - seeds);
  for (const char* k : {"candidate_proposed", "stone_trained", "stone_admitted", "stone_rejected"}) {
    out << fmt::format("{}: {}\n", k, counts[k]);
  }
  const auto best = std::max_element(pool.begin(), pool.end(), [](const auto& x, const auto& y) {
    return x.expected_return < y.expected_return;
  });
  if (best != pool.end()) {
    out << fmt::format("best expected return: {} ({})\n",
                       io::format_double(best->expected_return), best->id);
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Design and policy co-optimization for planar soft hands"};
  app.require_subcommand(1);

  EvolveArgs evolve;
  auto* s_evolve = app.add_subcommand("evolve", "Run the co-optimization loop");
  evolve.config.attach(s_evolve);
  s_evolve->add_option("--seed", evolve.seed, "Master seed");
  s_evolve->add_option("--iters", evolve.iters, "Outer iterations N");
  s_evolve->add_option("--out", evolve.out_dir, "Output directory");
  s_evolve->add_option("--workers", evolve.workers, "Worker threads");

  TrainArgs train;
  auto* s_train = app.add_subcommand("train", "Train a policy for one design");
  train.config.attach(s_train);
  s_train->add_option("--design", train.design, "Reference design: v3, v5, v6, v7");
  s_train->add_option("--design-file", train.design_file, "Design JSON object");
  s_train->add_option("--instances", train.instances, "'all' or shape@scale list");
  s_train->add_option("--init", train.init, "Warm-start policy JSON");
  s_train->add_option("--seed", train.seed, "Training seed");
  s_train->add_option("--out", train.out, "Output JSON path");

  EvalArgs ev;
  auto* s_eval = app.add_subcommand("eval", "Disturbance AUC report for a pool entry");
  ev.config.attach(s_eval);
  s_eval->add_option("--pool", ev.pool, "pool.jsonl")->required();
  s_eval->add_option("--id", ev.id, "Design id")->required();
  s_eval->add_option("--instances", ev.instances, "'all' or shape@scale list");
  s_eval->add_option("--seed", ev.seed, "Evaluation seed");
  s_eval->add_option("--out", ev.out, "Output path prefix");

  RankArgs rank;
  auto* s_rank = app.add_subcommand("rank", "List designs by aggregate AUC");
  rank.config.attach(s_rank);
  s_rank->add_option("--pool", rank.pool, "pool.jsonl")->required();
  s_rank->add_option("--top", rank.top, "Print only the first N rows");

  ReplayArgs replay;
  auto* s_replay = app.add_subcommand("replay", "Dump one episode as a trajectory CSV");
  replay.config.attach(s_replay);
  s_replay->add_option("--pool", replay.pool, "pool.jsonl")->required();
  s_replay->add_option("--id", replay.id, "Design id")->required();
  s_replay->add_option("--instance", replay.instance, "shape@scale");
  s_replay->add_option("--seed", replay.seed, "Episode seed");
  s_replay->add_option("--force", replay.force, "Disturbance magnitude, N");
  s_replay->add_option("--out", replay.out, "Output CSV path");

  std::string run_dir;
  auto* s_report = app.add_subcommand("report", "Summarize a run directory");
  s_report->add_option("--run", run_dir, "Run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*s_evolve) return cmd_evolve(evolve, out);
    if (*s_train) return cmd_train(train, out);
    if (*s_eval) return cmd_eval(ev, out);
    if (*s_rank) return cmd_rank(rank, out);
    if (*s_replay) return cmd_replay(replay, out);
    if (*s_report) return cmd_report(run_dir, out);
  } catch (const NumericalBlowup& e) {
    err << "error: " << e.what() << '\n';
    return kExitBlowup;
  } catch (const UnknownReference& e) {
    err << "error: " << e.what() << '\n';
    return kExitReference;
  } catch (const EmptyPool& e) {
    err << "error: " << e.what() << '\n';
    return kExitReference;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace handopt::cli
