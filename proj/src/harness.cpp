#include "driftprice/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "driftprice/errors.hpp"

namespace driftprice {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

namespace {

void check_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

double get_number(const Json& obj, const std::string& key, double fallback, const std::string& where) {
  if (!obj.contains(key) || obj[key].is_null()) return fallback;
  if (!obj[key].is_number()) throw ConfigError(where + "." + key + " must be a number");
  return obj[key].get<double>();
}

int get_int(const Json& obj, const std::string& key, int fallback, const std::string& where) {
  if (!obj.contains(key) || obj[key].is_null()) return fallback;
  if (!obj[key].is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  return obj[key].get<int>();
}

std::string get_string(const Json& obj, const std::string& key, const std::string& fallback,
                       const std::string& where) {
  if (!obj.contains(key) || obj[key].is_null()) return fallback;
  if (!obj[key].is_string()) throw ConfigError(where + "." + key + " must be a string");
  return obj[key].get<std::string>();
}

std::vector<double> get_vector(const Json& value, const std::string& where) {
  if (!value.is_array()) throw ConfigError(where + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : value) {
    if (!v.is_number()) throw ConfigError(where + " must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<int> get_int_vector(const Json& value, const std::string& where) {
  if (!value.is_array()) throw ConfigError(where + " must be an array of integers");
  std::vector<int> out;
  for (const auto& v : value) {
    if (!v.is_number_integer()) throw ConfigError(where + " must be an array of integers");
    out.push_back(v.get<int>());
  }
  return out;
}

const std::set<std::string> kLearnerKeys{"scheme", "schedule", "eta", "delta", "regularizer",
                                         "init", "feedback_scale", "constants"};
const std::set<std::string> kConstantKeys{"L", "L_r", "C_u", "C_1", "C_2", "p", "q",
                                          "C_r", "B_r", "B", "alpha", "B_v", "sigma_xi"};

ProblemConstants parse_constants(const Json& obj) {
  check_keys(obj, kConstantKeys, "learner.constants");
  ProblemConstants c;
  const std::string w = "learner.constants";
  c.L = get_number(obj, "L", c.L, w);
  c.L_r = get_number(obj, "L_r", c.L_r, w);
  c.C_u = get_number(obj, "C_u", c.C_u, w);
  c.C_1 = get_number(obj, "C_1", c.C_1, w);
  c.C_2 = get_number(obj, "C_2", c.C_2, w);
  c.p = get_number(obj, "p", c.p, w);
  c.q = get_number(obj, "q", c.q, w);
  c.C_r = get_number(obj, "C_r", c.C_r, w);
  c.B_r = get_number(obj, "B_r", c.B_r, w);
  c.B = get_number(obj, "B", c.B, w);
  c.alpha = get_number(obj, "alpha", c.alpha, w);
  c.B_v = get_number(obj, "B_v", c.B_v, w);
  c.sigma_xi = get_number(obj, "sigma_xi", c.sigma_xi, w);
  return c;
}

Json constants_json(const ProblemConstants& c) {
  return Json{{"L", c.L},     {"L_r", c.L_r}, {"C_u", c.C_u}, {"C_1", c.C_1},     {"C_2", c.C_2},
              {"p", c.p},     {"q", c.q},     {"C_r", c.C_r}, {"B_r", c.B_r},     {"B", c.B},
              {"alpha", c.alpha}, {"B_v", c.B_v}, {"sigma_xi", c.sigma_xi}};
}

// Merged learner document: base overlaid with overrides (constants merged by key).
Json merge_learner(const Json& base, const Json& overrides) {
  Json merged = base.is_null() ? Json::object() : base;
  check_keys(merged, kLearnerKeys, "learner");
  if (overrides.is_null()) return merged;
  check_keys(overrides, kLearnerKeys, "policy learner override");
  for (const auto& [key, value] : overrides.items()) {
    if (key == "constants" && merged.contains("constants") && value.is_object()) {
      for (const auto& [ck, cv] : value.items()) merged["constants"][ck] = cv;
    } else {
      merged[key] = value;
    }
  }
  return merged;
}

// Learner fields that do not depend on the environment; feedback_scale left at 1.
LearnerConfig parse_learner_static(const Json& doc) {
  check_keys(doc, kLearnerKeys, "learner");
  LearnerConfig cfg;
  cfg.scheme = parse_scheme(get_string(doc, "scheme", std::string(scheme_name(cfg.scheme)), "learner"));
  cfg.schedule = parse_schedule(get_string(doc, "schedule", "fixed", "learner"));
  cfg.eta = get_number(doc, "eta", cfg.eta, "learner");
  cfg.delta = get_number(doc, "delta", cfg.delta, "learner");
  cfg.regularizer.kind = parse_regularizer(get_string(doc, "regularizer", "euclidean", "learner"));
  if (doc.contains("init") && !doc["init"].is_null())
    cfg.init = PriceVector(get_vector(doc["init"], "learner.init"));
  if (doc.contains("constants")) cfg.constants = parse_constants(doc["constants"]);
  cfg.constants.validate();
  if (doc.contains("feedback_scale") && !doc["feedback_scale"].is_null()) {
    const auto& fs_value = doc["feedback_scale"];
    if (fs_value.is_number()) {
      cfg.feedback_scale = fs_value.get<double>();
      if (!(cfg.feedback_scale > 0.0)) throw ConfigError("learner.feedback_scale must be > 0");
    } else if (!(fs_value.is_string() && fs_value.get<std::string>() == "auto")) {
      throw ConfigError("learner.feedback_scale must be a positive number or \"auto\"");
    }
  }
  return cfg;
}

Json learner_json(const Json& doc) {
  const auto cfg = parse_learner_static(doc);
  Json out{{"scheme", std::string(scheme_name(cfg.scheme))},
           {"schedule", cfg.schedule == ScheduleMode::kFixed ? "fixed" : "corollary1"},
           {"eta", cfg.eta},
           {"delta", cfg.delta},
           {"regularizer", "euclidean"},
           {"init", cfg.init ? Json(cfg.init->vec()) : Json(nullptr)},
           {"constants", constants_json(cfg.constants)}};
  if (doc.contains("feedback_scale") && doc["feedback_scale"].is_string())
    out["feedback_scale"] = "auto";
  else
    out["feedback_scale"] = cfg.feedback_scale;
  return out;
}

std::string policy_kind_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kMirrorAscent: return "mirror_ascent";
    case PolicyKind::kRestarting: return "restarting";
    case PolicyKind::kMeta: return "meta";
    case PolicyKind::kDoublingMeta: return "doubling_meta";
    case PolicyKind::kRandom: return "random";
    case PolicyKind::kUcb1: return "ucb1";
    case PolicyKind::kSlidingWindowUcb: return "sw_ucb";
    case PolicyKind::kExp3: return "exp3";
    case PolicyKind::kOracle: return "oracle";
  }
  return "mirror_ascent";
}

PolicyKind parse_policy_kind(const std::string& name) {
  for (auto kind : {PolicyKind::kMirrorAscent, PolicyKind::kRestarting, PolicyKind::kMeta,
                    PolicyKind::kDoublingMeta, PolicyKind::kRandom, PolicyKind::kUcb1,
                    PolicyKind::kSlidingWindowUcb, PolicyKind::kExp3, PolicyKind::kOracle}) {
    if (policy_kind_name(kind) == name) return kind;
  }
  throw ConfigError("unknown policy type '" + name + "'");
}

DriftPatternSpec parse_pattern(const Json& value) {
  if (value.is_string()) return default_pattern_spec(parse_drift_pattern(value.get<std::string>()));
  check_keys(value, {"kind", "anchor", "amplitude", "period", "jump_every", "jump_size"},
             "environment.pattern");
  auto spec = default_pattern_spec(
      parse_drift_pattern(get_string(value, "kind", "none", "environment.pattern")));
  if (value.contains("anchor")) spec.anchor = PriceVector(get_vector(value["anchor"], "environment.pattern.anchor"));
  spec.amplitude = get_number(value, "amplitude", spec.amplitude, "environment.pattern");
  spec.period = get_number(value, "period", spec.period, "environment.pattern");
  spec.jump_every = get_int(value, "jump_every", spec.jump_every, "environment.pattern");
  spec.jump_size = get_number(value, "jump_size", spec.jump_size, "environment.pattern");
  if (!(spec.period > 0.0)) throw ConfigError("environment.pattern.period must be > 0");
  if (spec.jump_every < 0) throw ConfigError("environment.pattern.jump_every must be >= 0");
  return spec;
}

Json pattern_json(const DriftPatternSpec& p) {
  return Json{{"kind", std::string(drift_pattern_name(p.kind))},
              {"anchor", p.anchor.vec()},
              {"amplitude", p.amplitude},
              {"period", p.period},
              {"jump_every", p.jump_every},
              {"jump_size", p.jump_size}};
}

EnvironmentSpec parse_environment(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("environment must be a JSON object");
  EnvironmentSpec spec;
  const std::string kind = get_string(doc, "kind", "quadratic", "environment");
  const std::string w = "environment";
  if (kind == "quadratic") {
    check_keys(doc, {"kind", "noise_sigma", "pattern", "b", "b_path", "lower", "upper"}, w);
    spec.kind = EnvironmentKind::kQuadratic;
    if (doc.contains("pattern")) spec.pattern = parse_pattern(doc["pattern"]);
    if (doc.contains("b")) {
      spec.pattern = default_pattern_spec(DriftPattern::kNone);
      spec.pattern.anchor = PriceVector(get_vector(doc["b"], "environment.b"));
    }
    if (doc.contains("b_path")) {
      if (!doc["b_path"].is_array()) throw ConfigError("environment.b_path must be an array");
      std::vector<PriceVector> path;
      for (const auto& row : doc["b_path"]) path.emplace_back(get_vector(row, "environment.b_path"));
      spec.b_path = std::move(path);
    }
    if (doc.contains("lower")) spec.lower = get_vector(doc["lower"], "environment.lower");
    if (doc.contains("upper")) spec.upper = get_vector(doc["upper"], "environment.upper");
    BoxDomain(spec.lower, spec.upper);  // validates
    if (spec.pattern.anchor.size() != spec.lower.size())
      throw ConfigError("environment: b dimension differs from the box dimension");
  } else if (kind == "walk") {
    check_keys(doc, {"kind", "noise_sigma", "v", "d", "margin"}, w);
    spec.kind = EnvironmentKind::kWalk;
    spec.v = get_number(doc, "v", spec.v, w);
    const int d = get_int(doc, "d", static_cast<int>(spec.d), w);
    if (d < 1) throw ConfigError("environment.d must be >= 1");
    spec.d = static_cast<std::size_t>(d);
    spec.margin = get_number(doc, "margin", spec.margin, w);
    if (!(spec.v >= 0.0)) throw ConfigError("environment.v must be >= 0");
    if (!(spec.margin >= 0.0)) throw ConfigError("environment.margin must be >= 0");
  } else if (kind == "poisson") {
    check_keys(doc, {"kind", "model", "synthetic"}, w);
    spec.kind = EnvironmentKind::kPoisson;
    spec.model_path = get_string(doc, "model", "", w);
    if (doc.contains("synthetic")) {
      const auto& s = doc["synthetic"];
      check_keys(s, {"items", "periods", "seed"}, "environment.synthetic");
      spec.synthetic_items = get_int(s, "items", spec.synthetic_items, "environment.synthetic");
      spec.synthetic_periods = get_int(s, "periods", spec.synthetic_periods, "environment.synthetic");
      if (s.contains("seed")) {
        if (!s["seed"].is_number_unsigned()) throw ConfigError("environment.synthetic.seed must be a non-negative integer");
        spec.panel_seed = s["seed"].get<std::uint64_t>();
      }
      if (!spec.model_path.empty())
        throw ConfigError("environment: give either 'model' or 'synthetic', not both");
    }
  } else {
    throw ConfigError("unknown environment kind '" + kind + "' (expected quadratic | walk | poisson)");
  }
  if (spec.kind != EnvironmentKind::kPoisson) {
    spec.noise_sigma = get_number(doc, "noise_sigma", spec.noise_sigma, w);
    if (!(spec.noise_sigma >= 0.0)) throw ConfigError("environment.noise_sigma must be >= 0");
  }
  return spec;
}

Json environment_json(const EnvironmentSpec& s) {
  switch (s.kind) {
    case EnvironmentKind::kQuadratic: {
      Json out{{"kind", "quadratic"}, {"noise_sigma", s.noise_sigma}, {"lower", s.lower},
               {"upper", s.upper}};
      if (s.b_path) {
        Json rows = Json::array();
        for (const auto& b : *s.b_path) rows.push_back(b.vec());
        out["b_path"] = rows;
      } else {
        out["pattern"] = pattern_json(s.pattern);
      }
      return out;
    }
    case EnvironmentKind::kWalk:
      return Json{{"kind", "walk"}, {"noise_sigma", s.noise_sigma}, {"v", s.v},
                  {"d", s.d}, {"margin", s.margin}};
    case EnvironmentKind::kPoisson:
      if (!s.model_path.empty()) return Json{{"kind", "poisson"}, {"model", s.model_path}};
      return Json{{"kind", "poisson"},
                  {"synthetic",
                   {{"items", s.synthetic_items}, {"periods", s.synthetic_periods}, {"seed", s.panel_seed}}}};
  }
  return Json::object();
}

PolicySpec parse_policy(const Json& doc, std::size_t index) {
  const std::string w = "policies[" + std::to_string(index) + "]";
  if (doc.is_string()) return parse_policy(Json{{"type", doc}}, index);
  check_keys(doc, {"name", "type", "learner", "tau", "v_t", "mode", "taus", "epsilon", "grid",
                   "window", "gamma"},
             w);
  PolicySpec spec;
  if (!doc.contains("type")) throw ConfigError(w + " needs a 'type'");
  spec.kind = parse_policy_kind(get_string(doc, "type", "", w));
  spec.name = get_string(doc, "name", policy_kind_name(spec.kind), w);
  if (spec.name.empty() || spec.name.find_first_of("/\\,\n") != std::string::npos)
    throw ConfigError(w + ".name must be non-empty without '/', '\\' or ','");
  if (doc.contains("learner")) {
    check_keys(doc["learner"], kLearnerKeys, w + ".learner");
    spec.learner_overrides = doc["learner"];
  }
  if (doc.contains("tau")) {
    spec.tau = get_int(doc, "tau", 0, w);
    if (*spec.tau < 1) throw ConfigError(w + ".tau must be >= 1");
  }
  if (doc.contains("v_t")) spec.v_t = get_number(doc, "v_t", 0.0, w);
  if (spec.kind == PolicyKind::kRestarting && !spec.tau && !spec.v_t)
    throw ConfigError(w + ": restarting policy needs 'tau' or 'v_t'");
  const std::string mode = get_string(doc, "mode", "experiment", w);
  if (mode == "experiment") {
    spec.meta_mode = MetaMode::kExperiment;
  } else if (mode == "theorem2") {
    spec.meta_mode = MetaMode::kTheorem2;
  } else {
    throw ConfigError(w + ".mode must be experiment | theorem2");
  }
  if (doc.contains("taus")) {
    spec.taus = get_int_vector(doc["taus"], w + ".taus");
    for (int tau : spec.taus)
      if (tau < 1) throw ConfigError(w + ".taus entries must be >= 1");
  }
  spec.epsilon = get_number(doc, "epsilon", spec.epsilon, w);
  if ((spec.kind == PolicyKind::kMeta || spec.kind == PolicyKind::kDoublingMeta) &&
      spec.meta_mode == MetaMode::kExperiment && spec.taus.empty())
    throw ConfigError(w + ": experiment-mode meta policy needs 'taus'");
  if (spec.kind == PolicyKind::kDoublingMeta && spec.meta_mode == MetaMode::kTheorem2)
    throw ConfigError(w + ": doubling_meta supports experiment mode only");
  spec.grid = get_int(doc, "grid", spec.grid, w);
  if (doc.contains("window")) spec.window = get_int(doc, "window", 0, w);
  if (doc.contains("gamma")) spec.gamma = get_number(doc, "gamma", 0.0, w);
  return spec;
}

Json policy_json(const PolicySpec& p, int horizon) {
  Json out{{"name", p.name}, {"type", policy_kind_name(p.kind)}};
  if (!p.learner_overrides.empty()) out["learner"] = p.learner_overrides;
  switch (p.kind) {
    case PolicyKind::kRestarting:
      if (p.tau) out["tau"] = *p.tau;
      if (p.v_t) out["v_t"] = *p.v_t;
      break;
    case PolicyKind::kMeta:
    case PolicyKind::kDoublingMeta:
      out["mode"] = p.meta_mode == MetaMode::kExperiment ? "experiment" : "theorem2";
      if (p.meta_mode == MetaMode::kExperiment) {
        out["taus"] = p.taus;
        out["epsilon"] = p.epsilon;
      }
      break;
    case PolicyKind::kUcb1:
      out["grid"] = p.grid;
      break;
    case PolicyKind::kSlidingWindowUcb:
      out["grid"] = p.grid;
      out["window"] = p.window.value_or(default_sw_window(horizon));
      break;
    case PolicyKind::kExp3:
      out["grid"] = p.grid;
      if (p.gamma) out["gamma"] = *p.gamma;
      else out["gamma"] = "default";
      break;
    default:
      break;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

ExperimentConfig parse_experiment_config(const Json& doc) {
  check_keys(doc, {"environment", "policies", "learner", "horizon", "replications", "seed",
                   "regret_mode", "write_traces"},
             "config");
  ExperimentConfig cfg;
  cfg.raw = doc;
  if (!doc.contains("environment")) throw ConfigError("config needs an 'environment' block");
  cfg.environment = parse_environment(doc["environment"]);
  if (doc.contains("learner")) {
    cfg.learner = doc["learner"];
    parse_learner_static(cfg.learner);
  }
  if (!doc.contains("policies") || !doc["policies"].is_array() || doc["policies"].empty())
    throw ConfigError("config needs a non-empty 'policies' array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < doc["policies"].size(); ++i) {
    auto spec = parse_policy(doc["policies"][i], i);
    parse_learner_static(merge_learner(cfg.learner, spec.learner_overrides));
    if (!names.insert(spec.name).second)
      throw ConfigError("duplicate policy name '" + spec.name + "'");
    cfg.policies.push_back(std::move(spec));
  }
  const int default_horizon = cfg.environment.kind == EnvironmentKind::kPoisson ? 0 : 1000;
  cfg.horizon = get_int(doc, "horizon", default_horizon, "config");
  if (cfg.horizon < 0 || (cfg.horizon == 0 && cfg.environment.kind != EnvironmentKind::kPoisson))
    throw ConfigError("config.horizon must be >= 1");
  cfg.replications = get_int(doc, "replications", cfg.replications, "config");
  if (cfg.replications < 1) throw ConfigError("config.replications must be >= 1");
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw ConfigError("config.seed must be a non-negative integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  const std::string mode = get_string(doc, "regret_mode", "mean", "config");
  if (mode == "mean") {
    cfg.regret_mode = RegretMode::kMean;
  } else if (mode == "realized") {
    cfg.regret_mode = RegretMode::kRealized;
  } else {
    throw ConfigError("config.regret_mode must be mean | realized");
  }
  if (doc.contains("write_traces")) {
    if (!doc["write_traces"].is_boolean()) throw ConfigError("config.write_traces must be a boolean");
    cfg.write_traces = doc["write_traces"].get<bool>();
  }
  if (cfg.environment.kind == EnvironmentKind::kQuadratic && cfg.environment.b_path &&
      static_cast<int>(cfg.environment.b_path->size()) < cfg.horizon)
    throw ConfigError("environment.b_path is shorter than the horizon");
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_experiment_config(doc);
}

Json resolved_config_json(const ExperimentConfig& cfg) {
  Json out;
  out["environment"] = environment_json(cfg.environment);
  out["learner"] = learner_json(cfg.learner);
  out["policies"] = Json::array();
  for (const auto& p : cfg.policies) out["policies"].push_back(policy_json(p, cfg.horizon));
  out["horizon"] = cfg.horizon;
  out["replications"] = cfg.replications;
  out["seed"] = cfg.seed;
  out["regret_mode"] = cfg.regret_mode == RegretMode::kMean ? "mean" : "realized";
  out["write_traces"] = cfg.write_traces;
  return out;
}

LearnerConfig resolve_learner(const Json& base, const Json& overrides, const Environment& env) {
  const Json merged = merge_learner(base, overrides);
  auto cfg = parse_learner_static(merged);
  if (merged.contains("feedback_scale") && merged["feedback_scale"].is_string())
    cfg.feedback_scale = env.revenue_scale();
  if (cfg.init && cfg.init->size() != env.dim())
    throw ConfigError("learner.init dimension differs from the environment dimension");
  return cfg;
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

DemandModel demand_model_for(const EnvironmentSpec& spec) {
  if (!spec.model_path.empty()) {
    std::ifstream in(spec.model_path);
    if (!in) throw ConfigError("cannot open demand model '" + spec.model_path + "'");
    return read_model_csv(in);
  }
  auto rng = make_stream(spec.panel_seed, StreamTag::kPanel);
  const auto synth = gen_synthetic_panel(spec.synthetic_items, spec.synthetic_periods, rng);
  return fit_demand(synth.panel);
}

EnvironmentBundle make_environment(const EnvironmentSpec& spec, int horizon, std::uint64_t seed,
                                   const DemandModel* model) {
  EnvironmentBundle out;
  switch (spec.kind) {
    case EnvironmentKind::kQuadratic: {
      std::vector<PriceVector> path = spec.b_path ? *spec.b_path : drift_pattern_path(spec.pattern, horizon);
      path.resize(static_cast<std::size_t>(horizon));
      BoxDomain box(spec.lower, spec.upper);
      for (const auto& b : path)
        if (!box.contains(b)) throw ConfigError("quadratic b path leaves the domain");
      out.realized_v = path_variation(path);
      out.b_path = path;
      out.env = std::make_unique<QuadraticDriftEnv>(std::move(path), box, spec.noise_sigma, seed);
      break;
    }
    case EnvironmentKind::kWalk: {
      auto rng = make_stream(seed, StreamTag::kEnvironmentPath);
      auto walk = gen_walk_path(spec.v, horizon, spec.d, rng);
      out.target_v = walk.target_v;
      out.realized_v = walk.realized_v;
      out.b_path = walk.b_path;
      auto query = BoxDomain::cube(spec.d, -spec.margin, 1.0 + spec.margin);
      auto feasible = BoxDomain::cube(spec.d, 0.0, 1.0);
      out.env = std::make_unique<QuadraticDriftEnv>(std::move(walk.b_path), query, spec.noise_sigma,
                                                    seed, feasible);
      break;
    }
    case EnvironmentKind::kPoisson: {
      DemandModel m = model ? *model : demand_model_for(spec);
      if (horizon > m.horizon()) throw ConfigError("horizon exceeds the demand model's periods");
      out.env = std::make_unique<PoissonDemandEnv>(std::move(m), seed);
      break;
    }
  }
  return out;
}

namespace {

class OraclePolicy : public Policy {
 public:
  explicit OraclePolicy(const Environment& env) : env_(env) {}
  PriceVector propose(int t) override { return env_.oracle_price(t); }
  void observe(int, double) override {}

 private:
  const Environment& env_;
};

std::uint64_t epoch_seed(std::uint64_t seed, int epoch) {
  // splitmix64 of (seed, epoch).
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(epoch);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RewardScaler scaler_for(const Environment& env) {
  const auto [lo, hi] = env.revenue_bounds();
  return RewardScaler(lo, hi > lo ? hi : lo + 1.0);
}

}  // namespace

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const Json& base_learner,
                                    const Environment& env, int horizon, std::uint64_t seed) {
  const std::size_t d = env.dim();
  switch (spec.kind) {
    case PolicyKind::kMirrorAscent: {
      auto cfg = resolve_learner(base_learner, spec.learner_overrides, env);
      return std::make_unique<MirrorAscentPolicy>(env.query_box(), horizon, cfg, seed);
    }
    case PolicyKind::kRestarting: {
      auto cfg = resolve_learner(base_learner, spec.learner_overrides, env);
      const int tau = spec.tau ? *spec.tau
                               : corollary2_tau(cfg.constants, d, horizon, VariationBudget{*spec.v_t});
      return std::make_unique<RestartingPolicy>(env.query_box(), RestartSchedule(tau, horizon), cfg,
                                                seed);
    }
    case PolicyKind::kMeta: {
      auto cfg = resolve_learner(base_learner, spec.learner_overrides, env);
      MetaConfig meta;
      if (spec.meta_mode == MetaMode::kTheorem2) {
        const auto defaults = theorem2_defaults(cfg.constants, d, horizon, cfg.delta);
        meta.taus = defaults.taus;
        meta.etas = defaults.etas;
        meta.epsilon = defaults.epsilon;
      } else {
        meta.taus = spec.taus;
        meta.epsilon = spec.epsilon;
      }
      return std::make_unique<MetaHedgePolicy>(env.query_box(), horizon, meta, cfg, seed);
    }
    case PolicyKind::kDoublingMeta: {
      auto cfg = resolve_learner(base_learner, spec.learner_overrides, env);
      MetaConfig meta;
      meta.taus = spec.taus;
      meta.epsilon = spec.epsilon;
      BoxDomain box = env.query_box();
      return std::make_unique<DoublingPolicy>(
          [=](int epoch_horizon, int epoch) -> std::unique_ptr<Policy> {
            return std::make_unique<MetaHedgePolicy>(box, epoch_horizon, meta, cfg,
                                                     epoch_seed(seed, epoch));
          });
    }
    case PolicyKind::kRandom:
      return std::make_unique<RandomPolicy>(env.feasible_box(), seed);
    case PolicyKind::kUcb1:
      return std::make_unique<Ucb1Policy>(grid_arms(env.feasible_box(), spec.grid), scaler_for(env));
    case PolicyKind::kSlidingWindowUcb:
      return std::make_unique<SlidingWindowUcbPolicy>(grid_arms(env.feasible_box(), spec.grid),
                                                      scaler_for(env),
                                                      spec.window.value_or(default_sw_window(horizon)));
    case PolicyKind::kExp3: {
      auto arms = grid_arms(env.feasible_box(), spec.grid);
      const double gamma = spec.gamma.value_or(default_exp3_gamma(arms.size(), horizon));
      return std::make_unique<Exp3Policy>(std::move(arms), scaler_for(env), gamma, seed);
    }
    case PolicyKind::kOracle:
      return std::make_unique<OraclePolicy>(env);
  }
  throw ConfigError("unsupported policy kind");
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

namespace {

void put_double(std::string& buf, double v) {
  char tmp[40];
  const int n = std::snprintf(tmp, sizeof tmp, "%.17g", v);
  buf.append(tmp, static_cast<std::size_t>(n));
}

}  // namespace

void write_trace_csv(std::ostream& os, const RunTrace& trace) {
  const std::size_t d = trace.rows.empty() ? 0 : trace.rows.front().posted.size();
  std::string buf = "t";
  for (std::size_t j = 0; j < d; ++j) buf += ",posted_" + std::to_string(j);
  buf += ",feedback,mean_at_posted,oracle_value,cum_regret\n";
  for (const auto& row : trace.rows) {
    buf += std::to_string(row.t);
    for (double x : row.posted) {
      buf += ',';
      put_double(buf, x);
    }
    for (double v : {row.feedback, row.mean_at_posted, row.oracle_value, row.cum_regret}) {
      buf += ',';
      put_double(buf, v);
    }
    buf += '\n';
  }
  os << buf;
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  std::string buf = "policy,t,mean_regret,stderr,ci95\n";
  for (const auto& r : rows) {
    buf += r.policy + ',' + std::to_string(r.t);
    for (double v : {r.mean_regret, r.stderr_, r.ci95}) {
      buf += ',';
      put_double(buf, v);
    }
    buf += '\n';
  }
  os << buf;
}

std::vector<double> PolicyResult::final_regret() const {
  std::vector<double> out;
  out.reserve(cum_regret.size());
  for (const auto& curve : cum_regret) out.push_back(curve.empty() ? 0.0 : curve.back());
  return out;
}

const PolicyResult& ExperimentResult::policy(const std::string& name) const {
  for (const auto& p : policies)
    if (p.name == name) return p;
  throw ConfigError("no policy named '" + name + "' in the result");
}

std::vector<int> summary_checkpoints(int horizon) {
  const int step = (horizon + 99) / 100;
  std::vector<int> out;
  for (int t = step; t < horizon; t += step) out.push_back(t);
  out.push_back(horizon);
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<PolicyResult>& policies, int horizon) {
  std::vector<SummaryRow> rows;
  const auto checkpoints = summary_checkpoints(horizon);
  for (const auto& p : policies) {
    const std::size_t reps = p.cum_regret.size();
    for (int t : checkpoints) {
      SummaryRow row;
      row.policy = p.name;
      row.t = t;
      double sum = 0.0;
      for (const auto& curve : p.cum_regret) sum += curve[t - 1];
      row.mean_regret = sum / static_cast<double>(reps);
      if (reps > 1) {
        double ss = 0.0;
        for (const auto& curve : p.cum_regret) {
          const double dlt = curve[t - 1] - row.mean_regret;
          ss += dlt * dlt;
        }
        const double sd = std::sqrt(ss / static_cast<double>(reps - 1));
        row.stderr_ = sd / std::sqrt(static_cast<double>(reps));
      }
      row.ci95 = 1.96 * row.stderr_;
      rows.push_back(row);
    }
  }
  return rows;
}

int replication_threads() {
  if (const char* env = std::getenv("DRIFT_PRICE_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n >= 1) return static_cast<int>(n);
    warn(std::string("ignoring invalid DRIFT_PRICE_THREADS='") + env + "'");
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

template <typename Fn>
void write_file(const fs::path& path, Fn&& fn) {
  std::ostringstream os;
  fn(os);
  write_text(path, os.str());
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::optional<fs::path>& out) {
  std::optional<DemandModel> model;
  if (cfg.environment.kind == EnvironmentKind::kPoisson) model = demand_model_for(cfg.environment);
  const int horizon = cfg.horizon > 0 ? cfg.horizon : model->horizon();

  const bool nested = cfg.policies.size() > 1;
  if (out) {
    std::error_code ec;
    fs::create_directories(*out, ec);
    if (ec) throw ConfigError("cannot create output directory '" + out->string() + "': " + ec.message());
    if (nested && cfg.write_traces)
      for (const auto& p : cfg.policies) fs::create_directories(*out / p.name);
    ExperimentConfig resolved = cfg;
    resolved.horizon = horizon;
    write_text(*out / "resolved_config.json", resolved_config_json(resolved).dump(2) + "\n");
  }

  const int reps = cfg.replications;
  ExperimentResult result;
  result.policies.resize(cfg.policies.size());
  for (std::size_t k = 0; k < cfg.policies.size(); ++k) {
    result.policies[k].name = cfg.policies[k].name;
    result.policies[k].cum_regret.resize(static_cast<std::size_t>(reps));
  }
  result.target_v.assign(static_cast<std::size_t>(reps), 0.0);
  result.realized_v.assign(static_cast<std::size_t>(reps), 0.0);
  std::vector<std::vector<PriceVector>> paths(static_cast<std::size_t>(reps));

  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;

  auto worker = [&]() {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= reps) return;
      {
        std::lock_guard lock(error_mutex);
        if (error) return;
      }
      try {
        const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(r);
        for (std::size_t k = 0; k < cfg.policies.size(); ++k) {
          const auto& spec = cfg.policies[k];
          auto bundle = make_environment(cfg.environment, horizon, seed, model ? &*model : nullptr);
          if (k == 0) {
            result.target_v[r] = bundle.target_v;
            result.realized_v[r] = bundle.realized_v;
            paths[r] = bundle.b_path;
          }
          auto policy = make_policy(spec, cfg.learner, *bundle.env, horizon, seed);
          auto trace = run_policy(*bundle.env, *policy, horizon, cfg.regret_mode);
          trace.policy = spec.name;
          trace.seed = seed;
          auto& curve = result.policies[k].cum_regret[r];
          curve.reserve(trace.rows.size());
          for (const auto& row : trace.rows) curve.push_back(row.cum_regret);
          if (out && cfg.write_traces) {
            const auto file = "trace_r" + std::to_string(r) + ".csv";
            const auto path = nested ? *out / spec.name / file : *out / file;
            write_file(path, [&](std::ostream& os) { write_trace_csv(os, trace); });
          }
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };

  const int threads = std::max(1, std::min(replication_threads(), reps));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  result.summary = summarize(result.policies, horizon);

  if (out) {
    write_file(*out / "summary.csv", [&](std::ostream& os) { write_summary_csv(os, result.summary); });
    write_file(*out / "final_regret.csv", [&](std::ostream& os) {
      std::string buf = "policy,replication,seed,final_regret\n";
      for (const auto& p : result.policies) {
        const auto finals = p.final_regret();
        for (int r = 0; r < reps; ++r) {
          buf += p.name + ',' + std::to_string(r) + ',' + std::to_string(cfg.seed + r) + ',';
          put_double(buf, finals[r]);
          buf += '\n';
        }
      }
      os << buf;
    });
    if (cfg.environment.kind == EnvironmentKind::kQuadratic) {
      write_file(*out / "bpath.csv", [&](std::ostream& os) { write_bpath_csv(os, paths.front()); });
    } else if (cfg.environment.kind == EnvironmentKind::kWalk) {
      for (int r = 0; r < reps; ++r)
        write_file(*out / ("bpath_r" + std::to_string(r) + ".csv"),
                   [&](std::ostream& os) { write_bpath_csv(os, paths[r]); });
      write_file(*out / "variation.csv", [&](std::ostream& os) {
        std::string buf = "replication,seed,target_v,realized_v\n";
        for (int r = 0; r < reps; ++r) {
          buf += std::to_string(r) + ',' + std::to_string(cfg.seed + r) + ',';
          put_double(buf, result.target_v[r]);
          buf += ',';
          put_double(buf, result.realized_v[r]);
          buf += '\n';
        }
        os << buf;
      });
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

SignTest paired_sign_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ConfigError("sign test needs paired samples of equal size");
  SignTest out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) ++out.wins;
    else if (a[i] > b[i]) ++out.losses;
    else ++out.ties;
  }
  const int n = out.wins + out.losses;
  if (n == 0) return out;
  const int k = std::min(out.wins, out.losses);
  // P(X <= k) for X ~ Binomial(n, 1/2), summed in log space.
  double tail = 0.0;
  for (int i = 0; i <= k; ++i) {
    const double log_term = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) -
                            n * std::log(2.0);
    tail += std::exp(log_term);
  }
  out.p_value = std::min(1.0, 2.0 * tail);
  return out;
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("slope fit needs >= 2 paired points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw ConfigError("log-log fit needs positive values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double mx = mean_of(lx), my = mean_of(ly);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) throw ConfigError("log-log fit needs distinct x values");
  return sxy / sxx;
}

}  // namespace driftprice
