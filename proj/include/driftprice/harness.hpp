#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "driftprice/baselines.hpp"
#include "driftprice/environments.hpp"
#include "driftprice/learners.hpp"
#include "driftprice/meta_hedge.hpp"
#include "driftprice/policy.hpp"
#include "driftprice/restarting.hpp"

namespace driftprice {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class EnvironmentKind { kQuadratic, kWalk, kPoisson };

struct EnvironmentSpec {
  EnvironmentKind kind = EnvironmentKind::kQuadratic;
  double noise_sigma = 0.1;

  // quadratic
  DriftPatternSpec pattern;
  std::optional<std::vector<PriceVector>> b_path;  // explicit path overrides the pattern
  std::vector<double> lower{-5.0, -5.0};
  std::vector<double> upper{5.0, 5.0};

  // walk: b_t in [0, 1]^d, queries in [-margin, 1 + margin]^d
  double v = 0.0;
  std::size_t d = 2;
  double margin = 0.1;

  // poisson: either a demand-model CSV or a synthetic panel
  std::string model_path;
  int synthetic_items = 54;
  int synthetic_periods = 200;
  std::uint64_t panel_seed = 0;
};

enum class PolicyKind {
  kMirrorAscent,
  kRestarting,
  kMeta,
  kDoublingMeta,
  kRandom,
  kUcb1,
  kSlidingWindowUcb,
  kExp3,
  kOracle,  // posts x*_t; test hook
};

enum class MetaMode { kExperiment, kTheorem2 };

struct PolicySpec {
  std::string name;
  PolicyKind kind = PolicyKind::kMirrorAscent;
  Json learner_overrides = Json::object();

  // restarting
  std::optional<int> tau;
  std::optional<double> v_t;  // batch size from the variation budget when tau is absent

  // meta
  MetaMode meta_mode = MetaMode::kExperiment;
  std::vector<int> taus;
  double epsilon = 0.5;

  // arm bandits
  int grid = 11;
  std::optional<int> window;
  std::optional<double> gamma;
};

struct ExperimentConfig {
  EnvironmentSpec environment;
  std::vector<PolicySpec> policies;
  Json learner = Json::object();
  int horizon = 1000;
  int replications = 30;
  std::uint64_t seed = 0;
  RegretMode regret_mode = RegretMode::kMean;
  bool write_traces = true;

  Json raw = Json::object();  // the document this config was parsed from
};

/// Parse and validate; throws ConfigError on any schema problem.
ExperimentConfig parse_experiment_config(const Json& doc);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Every default made explicit, suitable for re-parsing.
Json resolved_config_json(const ExperimentConfig& cfg);

/// Base learner block with per-policy overrides applied. `feedback_scale:
/// "auto"` resolves to the environment's revenue scale.
LearnerConfig resolve_learner(const Json& base, const Json& overrides, const Environment& env);

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

/// Demand model for a Poisson spec (loaded or synthesized).
DemandModel demand_model_for(const EnvironmentSpec& spec);

struct EnvironmentBundle {
  std::unique_ptr<Environment> env;
  double target_v = 0.0;    // walk only
  double realized_v = 0.0;  // walk and quadratic
  std::vector<PriceVector> b_path;
};

/// Environment for one replication seed. `model` is reused when given.
EnvironmentBundle make_environment(const EnvironmentSpec& spec, int horizon, std::uint64_t seed,
                                   const DemandModel* model = nullptr);

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const Json& base_learner,
                                    const Environment& env, int horizon, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Execution and output
// ---------------------------------------------------------------------------

struct PolicyResult {
  std::string name;
  std::vector<std::vector<double>> cum_regret;  // [replication][t-1]
  std::vector<double> final_regret() const;
};

struct SummaryRow {
  std::string policy;
  int t = 0;
  double mean_regret = 0.0;
  double stderr_ = 0.0;
  double ci95 = 0.0;
};

struct ExperimentResult {
  std::vector<PolicyResult> policies;
  std::vector<double> target_v;    // per replication
  std::vector<double> realized_v;  // per replication
  std::vector<SummaryRow> summary;

  const PolicyResult& policy(const std::string& name) const;
};

/// Periods ceil(T/100), 2 ceil(T/100), ..., always ending at T.
std::vector<int> summary_checkpoints(int horizon);

std::vector<SummaryRow> summarize(const std::vector<PolicyResult>& policies, int horizon);

void write_trace_csv(std::ostream& os, const RunTrace& trace);
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);

/// Worker count: DRIFT_PRICE_THREADS if set (>= 1), else hardware concurrency.
int replication_threads();

/// Run all policies for all replications. Replication r uses seed base + r,
/// shared by the environment and every policy so comparisons are paired.
/// When `out` is set, writes summary.csv, final_regret.csv,
/// resolved_config.json, traces and path files there.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::optional<std::filesystem::path>& out = std::nullopt);

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

struct SignTest {
  int wins = 0;    // a < b
  int losses = 0;  // a > b
  int ties = 0;
  double p_value = 1.0;  // two-sided exact binomial over non-tied pairs
};

/// Paired sign test for "a is smaller than b".
SignTest paired_sign_test(const std::vector<double>& a, const std::vector<double>& b);

double mean_of(const std::vector<double>& xs);

/// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace driftprice
