#include "handopt/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <type_traits>

#include "handopt/io.hpp"

namespace handopt::cfg {

namespace {

// Walks one JSON object, remembering which keys were read so that leftovers
// can be reported as unknown.
class Reader {
 public:
  Reader(const json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ && !j_->is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_ || !j_->contains(key)) return;
    const json& v = j_->at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError("expected a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError("expected an integer");
        if (std::is_unsigned_v<T> && !v.is_number_unsigned()) {
          throw ConfigError("expected a non-negative integer");
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("expected a string");
      }
      out = v.get<T>();
    } catch (const ConfigError& e) {
      throw ConfigError(where(key) + ": " + e.what());
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  void get_optional(const char* key, std::optional<double>& out) {
    seen_.insert(key);
    if (!j_ || !j_->contains(key)) return;
    const json& v = j_->at(key);
    if (v.is_null()) {
      out.reset();
    } else if (v.is_number()) {
      out = v.get<double>();
    } else {
      throw ConfigError(where(key) + ": expected a number or null");
    }
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    if (!j_ || !j_->contains(key)) return nullptr;
    return &j_->at(key);
  }

  Reader sub(const char* key) { return Reader(raw(key), where(key)); }

  void finish() const {
    if (!j_) return;
    for (const auto& [k, _] : j_->items()) {
      if (!seen_.count(k)) throw ConfigError("unknown key " + where(k.c_str()));
    }
  }

  std::string where(const char* key) const {
    return path_.empty() ? std::string(key) : path_ + "." + key;
  }
  std::string where() const { return path_.empty() ? "config" : path_; }

 private:
  const json* j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_design_fields(Reader r, design::DesignVector& v) {
  const auto& names = design::field_names();
  for (std::size_t i = 0; i < design::kDesignDim; ++i) {
    r.get(std::string(names[i]).c_str(), v[i]);
  }
  r.finish();
}

json design_fields(const design::DesignVector& v) {
  json j = io::to_json(design::DesignParams::from_vector(v));
  j.erase("version");
  return j;
}

design::DesignParams read_seed(const json& j, const std::string& where) {
  if (j.is_string()) {
    try {
      return named_design(j.get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  if (!j.is_object()) throw ConfigError(where + ": expected a design name or object");
  try {
    return io::design_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

template <typename Fn>
void wrap(Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

design::DesignParams named_design(std::string_view name) {
  if (name == "v3") return design::dash_v3();
  if (name == "v5") return design::dash_v5();
  if (name == "v6") return design::dash_v6();
  if (name == "v7") return design::dash_v7();
  throw ConfigError("unknown reference design '" + std::string(name) + "'");
}

RunConfig parse_config(const json& doc) {
  RunConfig c;
  Reader root(&doc, "");
  root.get("seed", c.seed);
  root.get("workers", c.workers);
  root.get("output_dir", c.output_dir);
  root.get("instances", c.instances);

  {
    Reader b = root.sub("bounds");
    b.get("mutation_fraction", c.mutation_fraction);
    c.bounds = design::DesignBounds::table_defaults(c.mutation_fraction);
    read_design_fields(b.sub("lower"), c.bounds.lower);
    read_design_fields(b.sub("upper"), c.bounds.upper);
    b.finish();
    const auto span = c.bounds.span();
    for (std::size_t i = 0; i < design::kDesignDim; ++i) {
      c.bounds.mutation_range[i] = c.mutation_fraction * span[i];
    }
    if (!(c.mutation_fraction >= 0.0)) {
      throw ConfigError("bounds.mutation_fraction must be >= 0");
    }
    wrap([&] { c.bounds.validate(); });
  }

  {
    Reader e = root.sub("evolution");
    e.get_optional("q", c.evolution.q);
    e.get("xi", c.evolution.xi);
    e.get("epsilon", c.evolution.epsilon);
    e.get("iterations", c.evolution.iterations);
    if (const json* seeds = e.raw("seeds")) {
      if (!seeds->is_array()) throw ConfigError("evolution.seeds must be a list");
      c.evolution.seeds.clear();
      for (std::size_t i = 0; i < seeds->size(); ++i) {
        c.evolution.seeds.push_back(
            read_seed((*seeds)[i], "evolution.seeds[" + std::to_string(i) + "]"));
      }
    }
    e.finish();
  }
  c.evolution.bounds = c.bounds;
  c.evolution.seed = c.seed;
  wrap([&] { evo::validate(c.evolution); });

  {
    Reader t = root.sub("training");
    t.get("budget", c.training.es.budget);
    t.get("window", c.training.es.window);
    t.get("min_gain", c.training.es.min_gain);
    t.get("population", c.training.es.population);
    t.get("elite", c.training.es.elite);
    t.get("sigma", c.training.es.sigma);
    t.get("episodes", c.training.episodes);
    t.get("init_range", c.training.init_range);
    t.get("gamma", c.gamma);
    t.get("return_episodes", c.return_episodes);
    t.finish();
    wrap([&] { learning::validate(c.training.es); });
    if (c.training.episodes < 1) throw ConfigError("training.episodes must be >= 1");
    if (c.return_episodes < 1) throw ConfigError("training.return_episodes must be >= 1");
    if (!(c.gamma > 0.0 && c.gamma <= 1.0)) throw ConfigError("training.gamma must be in (0, 1]");
    if (!(c.training.init_range >= 0.0)) throw ConfigError("training.init_range must be >= 0");
  }

  {
    Reader en = root.sub("env");
    en.get("dt", c.env.dt);
    en.get("horizon", c.env.horizon);
    en.get("goal_radius", c.env.goal_radius);
    en.get("tol_pos", c.env.success.tol_pos);
    en.get("tol_ang", c.env.success.tol_ang);
    en.get("hold_steps", c.env.success.hold_steps);
    {
      Reader p = en.sub("physics");
      auto& ph = c.env.physics;
      p.get("contact_stiffness", ph.contact_stiffness);
      p.get("friction", ph.friction);
      p.get("linear_damping", ph.linear_damping);
      p.get("angular_damping", ph.angular_damping);
      p.get("tangential_damping", ph.tangential_damping);
      p.get("max_joint_rate", ph.max_joint_rate);
      p.get("finger_radius", ph.finger_radius);
      p.get("sanity_bound", ph.sanity_bound);
      p.finish();
    }
    {
      Reader w = en.sub("reward");
      auto& rw = c.env.reward;
      w.get("position", rw.position);
      w.get("angle", rw.angle);
      w.get("contact", rw.contact);
      w.get("success", rw.success);
      w.get("max_position_error", rw.max_position_error);
      w.finish();
    }
    {
      Reader s = en.sub("sizes");
      auto& sz = c.env.sizes;
      s.get("sphere_radius", sz.sphere_radius);
      s.get("board_length", sz.board_length);
      s.get("board_width", sz.board_width);
      s.get("pen_length", sz.pen_length);
      s.get("pen_width", sz.pen_width);
      s.get("cross_bar_length", sz.cross_bar_length);
      s.get("cross_bar_width", sz.cross_bar_width);
      s.get("barbell_disc_radius", sz.barbell_disc_radius);
      s.get("barbell_bar_length", sz.barbell_bar_length);
      s.get("barbell_bar_width", sz.barbell_bar_width);
      s.get("ring_radius", sz.ring_radius);
      s.get("ring_thickness", sz.ring_thickness);
      s.finish();
    }
    en.finish();
    if (!(c.env.dt > 0.0)) throw ConfigError("env.dt must be positive");
    if (c.env.horizon < 1) throw ConfigError("env.horizon must be >= 1");
    if (!(c.env.goal_radius >= 0.0)) throw ConfigError("env.goal_radius must be >= 0");
    if (c.env.success.hold_steps < 1) throw ConfigError("env.hold_steps must be >= 1");
  }

  {
    Reader v = root.sub("evaluation");
    v.get("K", c.eval.grid_intervals);
    v.get("n", c.eval.episodes);
    v.get("F_max", c.eval.max_force);
    v.get("compute_auc", c.compute_auc);
    v.finish();
    wrap([&] { eval::validate(c.eval); });
  }

  root.finish();
  wrap([&] { (void)resolve_instances(c, c.instances); });
  return c;
}

json to_json(const RunConfig& c) {
  json seeds = json::array();
  for (const auto& s : c.evolution.seeds) seeds.push_back(io::to_json(s));
  const auto& ph = c.env.physics;
  const auto& rw = c.env.reward;
  const auto& sz = c.env.sizes;
  return {
      {"seed", c.seed},
      {"workers", c.workers},
      {"output_dir", c.output_dir},
      {"instances", c.instances},
      {"bounds",
       {{"lower", design_fields(c.bounds.lower)},
        {"upper", design_fields(c.bounds.upper)},
        {"mutation_fraction", c.mutation_fraction}}},
      {"evolution",
       {{"q", c.evolution.q ? json(*c.evolution.q) : json(nullptr)},
        {"xi", c.evolution.xi},
        {"epsilon", c.evolution.epsilon},
        {"iterations", c.evolution.iterations},
        {"seeds", seeds}}},
      {"training",
       {{"budget", c.training.es.budget},
        {"window", c.training.es.window},
        {"min_gain", c.training.es.min_gain},
        {"population", c.training.es.population},
        {"elite", c.training.es.elite},
        {"sigma", c.training.es.sigma},
        {"episodes", c.training.episodes},
        {"init_range", c.training.init_range},
        {"gamma", c.gamma},
        {"return_episodes", c.return_episodes}}},
      {"env",
       {{"dt", c.env.dt},
        {"horizon", c.env.horizon},
        {"goal_radius", c.env.goal_radius},
        {"tol_pos", c.env.success.tol_pos},
        {"tol_ang", c.env.success.tol_ang},
        {"hold_steps", c.env.success.hold_steps},
        {"physics",
         {{"contact_stiffness", ph.contact_stiffness},
          {"friction", ph.friction},
          {"linear_damping", ph.linear_damping},
          {"angular_damping", ph.angular_damping},
          {"tangential_damping", ph.tangential_damping},
          {"max_joint_rate", ph.max_joint_rate},
          {"finger_radius", ph.finger_radius},
          {"sanity_bound", ph.sanity_bound}}},
        {"reward",
         {{"position", rw.position},
          {"angle", rw.angle},
          {"contact", rw.contact},
          {"success", rw.success},
          {"max_position_error", rw.max_position_error}}},
        {"sizes",
         {{"sphere_radius", sz.sphere_radius},
          {"board_length", sz.board_length},
          {"board_width", sz.board_width},
          {"pen_length", sz.pen_length},
          {"pen_width", sz.pen_width},
          {"cross_bar_length", sz.cross_bar_length},
          {"cross_bar_width", sz.cross_bar_width},
          {"barbell_disc_radius", sz.barbell_disc_radius},
          {"barbell_bar_length", sz.barbell_bar_length},
          {"barbell_bar_width", sz.barbell_bar_width},
          {"ring_radius", sz.ring_radius},
          {"ring_thickness", sz.ring_thickness}}}}},
      {"evaluation",
       {{"K", c.eval.grid_intervals},
        {"n", c.eval.episodes},
        {"F_max", c.eval.max_force},
        {"compute_auc", c.compute_auc}}},
  };
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  if (!doc.is_object()) throw ConfigError("config root must be an object");
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' is malformed");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    json& child = (*node)[part];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) throw ConfigError("override path '" + key + "' is not an object");
    node = &child;
    start = dot + 1;
  }
}

RunConfig load_config(const std::optional<std::filesystem::path>& path,
                      const std::vector<std::string>& overrides) {
  json doc = json::object();
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot read config file " + path->string());
    doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("config file " + path->string() + " is not valid JSON");
    if (!doc.is_object()) throw ConfigError("config root must be an object");
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_config(doc);
}

unsigned resolve_workers(const RunConfig& c) {
  if (std::getenv("HANDOPT_WORKERS")) return default_worker_count();
  if (c.workers > 0) return c.workers;
  return default_worker_count();
}

std::vector<env::ObjectSpec> resolve_instances(const RunConfig& c, std::string_view spec) {
  return env::parse_instances(spec, c.env.sizes);
}

evo::SimulationSetup make_setup(const RunConfig& c,
                                const std::vector<env::ObjectSpec>& instances) {
  evo::SimulationSetup s;
  s.task.env = c.env;
  s.task.instances = instances;
  s.task.gamma = c.gamma;
  s.training = c.training;
  s.training.episode_seed = derive_seed(c.seed, 0xF17);
  s.bounds = c.bounds;
  s.return_episodes = c.return_episodes;
  s.return_seed = derive_seed(c.seed, 0x7e7);
  s.eval = c.eval;
  s.compute_auc = c.compute_auc;
  s.eval_seed = derive_seed(c.seed, 0xa0c);
  return s;
}

}  // namespace handopt::cfg
