// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion ids
// (P1 ... P9) as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "driftprice/baselines.hpp"
#include "driftprice/environments.hpp"
#include "driftprice/errors.hpp"
#include "driftprice/harness.hpp"
#include "driftprice/learners.hpp"
#include "driftprice/meta_hedge.hpp"
#include "driftprice/mirror_ascent.hpp"
#include "driftprice/restarting.hpp"

#ifndef DRIFTPRICE_CONFIG_DIR
#define DRIFTPRICE_CONFIG_DIR "configs"
#endif

namespace fs = std::filesystem;
using namespace driftprice;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt2(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string sign_note(const std::string& a, const std::string& b, const SignTest& s,
                      double mean_a, double mean_b) {
  std::ostringstream os;
  os << a << " < " << b << ": means " << mean_a << " vs " << mean_b << ", wins " << s.wins
     << "/" << (s.wins + s.losses + s.ties) << ", p=" << s.p_value;
  return os.str();
}

// a beats b: strictly smaller mean and sign-test p < 0.05 in a's favour.
void check_beats(Outcome& out, const PolicyResult& a, const PolicyResult& b) {
  const auto fa = a.final_regret(), fb = b.final_regret();
  const auto s = paired_sign_test(fa, fb);
  const double ma = mean_of(fa), mb = mean_of(fb);
  out.check(ma < mb && s.wins > s.losses && s.p_value < 0.05, sign_note(a.name, b.name, s, ma, mb));
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ExperimentConfig load_config(const std::string& file) {
  return load_experiment_config(fs::path(DRIFTPRICE_CONFIG_DIR) / file);
}

// The criterion fixes these; a drifted config fails loudly instead of silently
// testing something else.
void check_learner_params(Outcome& out, const ExperimentConfig& cfg, double eta, double delta) {
  const Json lj = resolved_config_json(cfg)["learner"];
  out.check(lj["schedule"] == "fixed" && lj["eta"].get<double>() == eta &&
                lj["delta"].get<double>() == delta,
            fmt2("config uses fixed eta=%g, delta=%g", eta, delta));
}

// ---------------------------------------------------------------------------

Outcome p1_estimator_contract() {
  Outcome out;
  const PriceVector b{1.0, -0.5};
  SmoothTestFunction f;
  f.value = [b](const PriceVector& x) { return quadratic_revenue(b, x); };
  f.gradient = [b](const PriceVector& x) {
    return std::vector<double>{b[0] - x[0], b[1] - x[1]};
  };
  const PriceVector x{0.3, -0.2};
  const std::vector<double> deltas{0.4, 0.2, 0.1};
  const long n = 1'000'000;
  struct Band {
    EstimatorScheme scheme;
    double bias_lo, bias_hi, var_lo, var_hi;
  };
  for (const Band band : {Band{EstimatorScheme::kSpherical, 2.5, 5.5, 2.5, 5.5},
                          Band{EstimatorScheme::kSimultaneousPerturbation, 1.5, 2.8, 2.5, 5.5}}) {
    std::vector<BiasVariance> bv;
    for (std::size_t k = 0; k < deltas.size(); ++k) {
      auto rng = make_stream(1000 + k, StreamTag::kPolicy);
      bv.push_back(empirical_bias_variance(band.scheme, f, x, deltas[k], n, rng));
    }
    const std::string name(scheme_name(band.scheme));
    for (std::size_t k = 0; k + 1 < deltas.size(); ++k) {
      // Halving delta: bias should shrink by 2^p, variance grow by 2^q.
      const double bias_ratio = bv[k].bias_norm / bv[k + 1].bias_norm;
      const double var_ratio = bv[k + 1].variance / bv[k].variance;
      std::ostringstream os;
      os << name << " delta " << deltas[k] << "->" << deltas[k + 1] << ": bias "
         << bv[k].bias_norm << "->" << bv[k + 1].bias_norm << " ratio " << bias_ratio << " in ["
         << band.bias_lo << "," << band.bias_hi << "]";
      out.check(bias_ratio >= band.bias_lo && bias_ratio <= band.bias_hi, os.str());
      std::ostringstream ov;
      ov << name << " delta " << deltas[k] << "->" << deltas[k + 1] << ": variance ratio "
         << var_ratio << " in [" << band.var_lo << "," << band.var_hi << "]";
      out.check(var_ratio >= band.var_lo && var_ratio <= band.var_hi, ov.str());
    }
  }
  return out;
}

Outcome p2_projected_step() {
  Outcome out;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 5);
  double worst = 0.0;
  for (int k = 0; k < 10'000; ++k) {
    const int d = dim(rng);
    std::vector<double> lo(d), hi(d);
    for (int j = 0; j < d; ++j) {
      lo[j] = u(rng);
      hi[j] = lo[j] + 0.1 + 2.0 * unit(rng);
    }
    BoxDomain theta(lo, hi);
    LearnerState st;
    st.x = PriceVector(d);
    for (int j = 0; j < d; ++j) st.x[j] = lo[j] + (hi[j] - lo[j]) * unit(rng);
    st.eta = 2.0 * unit(rng);
    st.delta = 0.1;
    st.tau = 10;
    GradientEstimate g;
    for (int j = 0; j < d; ++j) g.g.push_back(3.0 * u(rng));
    g.delta = 0.1;
    const auto next = mirror_step(st, g, Regularizer{}, theta);
    for (int j = 0; j < d; ++j) {
      double want = st.x[j] + st.eta * g.g[j];
      want = want < lo[j] ? lo[j] : (want > hi[j] ? hi[j] : want);
      worst = std::max(worst, std::abs(next.x[j] - want));
    }
  }
  out.check(worst <= 1e-12, fmt("max deviation %.3g <= 1e-12 over 10^4 instances", worst));
  return out;
}

Outcome p3_static_rate() {
  Outcome out;
  const std::vector<int> taus{250, 500, 1000, 2000, 4000};
  LearnerConfig cfg;
  cfg.scheme = EstimatorScheme::kSpherical;
  cfg.schedule = ScheduleMode::kCorollary1;
  set_warnings_enabled(false);
  std::vector<double> x, y;
  for (int tau : taus) {
    std::vector<double> finals;
    for (int s = 0; s < 30; ++s) {
      QuadraticDriftEnv env(std::vector<PriceVector>(tau, PriceVector{1.0, -0.5}),
                            BoxDomain::cube(2, -5.0, 5.0), 0.1, s);
      MirrorAscentPolicy policy(env.query_box(), tau, cfg, s);
      finals.push_back(run_policy(env, policy, tau).final_regret());
    }
    x.push_back(tau);
    y.push_back(mean_of(finals));
    out.notes.push_back("     tau=" + std::to_string(tau) + " mean final regret " + fmt("%.3f", y.back()));
  }
  set_warnings_enabled(true);
  const double slope = log_log_slope(x, y);
  out.check(std::abs(slope - 2.0 / 3.0) <= 0.15, fmt("log-log slope %.4f within 2/3 +/- 0.15", slope));
  return out;
}

Outcome p4_ablation() {
  Outcome out;
  auto base = load_config("ablation.json");
  out.check(base.horizon == 1000 && base.replications == 30 && base.environment.noise_sigma == 0.1,
            "config uses T=1000, 30 seeds, noise sigma 0.1");
  check_learner_params(out, base, 0.01, 0.1);
  base.write_traces = false;
  const PolicySpec* alg1 = nullptr;
  const PolicySpec* alg3 = nullptr;
  std::vector<const PolicySpec*> alg2;
  for (const auto& p : base.policies) {
    if (p.kind == PolicyKind::kMirrorAscent) alg1 = &p;
    if (p.kind == PolicyKind::kMeta) alg3 = &p;
    if (p.kind == PolicyKind::kRestarting && p.tau) alg2.push_back(&p);
  }
  std::sort(alg2.begin(), alg2.end(), [](auto* a, auto* b) { return *a->tau < *b->tau; });
  std::set<int> listed;
  for (auto* p : alg2) listed.insert(*p->tau);
  out.check(alg1 && alg3 && listed == std::set<int>{32, 64, 128, 256, 512, 1024},
            "config lists the single-run learner, restarting tau in {32..1024}, and the meta layer");
  if (!alg1 || !alg3 || alg2.empty()) return out;
  out.check(alg3->epsilon == 0.5, "meta layer epsilon = 0.5");

  for (const std::string pattern : {"none", "high"}) {
    auto cfg = base;
    const auto anchor = cfg.environment.pattern.anchor;
    cfg.environment.pattern = default_pattern_spec(parse_drift_pattern(pattern));
    cfg.environment.pattern.anchor = anchor;
    const auto result = run_experiment(cfg);
    const auto& r1 = result.policy(alg1->name);
    const auto& r3 = result.policy(alg3->name);
    out.notes.push_back("     [" + pattern + "]");
    if (pattern == "none") {
      for (auto* p : alg2) {
        const auto& r2 = result.policy(p->name);
        if (*p->tau >= cfg.horizon) {
          // A single batch is the base learner itself.
          out.check(r2.cum_regret == r1.cum_regret,
                    p->name + " (tau >= T) reproduces " + alg1->name + " bit for bit");
        } else {
          check_beats(out, r1, r2);
        }
      }
      check_beats(out, r1, r3);
      for (std::size_t k = 0; k + 1 < alg2.size(); ++k)
        check_beats(out, result.policy(alg2[k + 1]->name), result.policy(alg2[k]->name));
    } else {
      const PolicyResult* best = nullptr;
      for (auto* p : alg2) {
        const auto& r2 = result.policy(p->name);
        if (!best || mean_of(r2.final_regret()) < mean_of(best->final_regret())) best = &r2;
      }
      check_beats(out, *best, r1);
      check_beats(out, r3, r1);
    }
  }
  return out;
}

Outcome p5_variation_sweep() {
  Outcome out;
  auto base = load_config("walk.json");
  out.check(base.environment.kind == EnvironmentKind::kWalk && base.horizon == 1000 &&
                base.replications == 30,
            "config is a walk with T=1000 and 30 seeds");
  base.write_traces = false;
  std::string meta, ucb, sw;
  for (const auto& p : base.policies) {
    if (p.kind == PolicyKind::kMeta) meta = p.name;
    if (p.kind == PolicyKind::kUcb1) ucb = p.name;
    if (p.kind == PolicyKind::kSlidingWindowUcb) sw = p.name;
  }
  out.check(!meta.empty() && !ucb.empty() && !sw.empty(), "config lists meta, UCB1 and SW-UCB");
  if (meta.empty() || ucb.empty() || sw.empty()) return out;
  for (double v : {0.0, 10.0, 20.0, 30.0, 40.0}) {
    auto cfg = base;
    cfg.environment.v = v;
    const auto result = run_experiment(cfg);
    bool within = true;
    double worst = 0.0;
    for (std::size_t r = 0; r < result.realized_v.size(); ++r) {
      within = within && result.realized_v[r] <= result.target_v[r];
      worst = std::max(worst, result.realized_v[r]);
    }
    out.check(within, fmt2("V=%g: realized variation <= V on every path (max %.6f)", v, worst));
    if (v >= 20.0) {
      check_beats(out, result.policy(meta), result.policy(ucb));
      check_beats(out, result.policy(meta), result.policy(sw));
    }
  }
  return out;
}

Outcome p6_meta_identities() {
  Outcome out;
  const auto K = BoxDomain::cube(2, -5.0, 5.0);
  LearnerConfig cfg;
  cfg.scheme = EstimatorScheme::kSimultaneousPerturbation;
  const int T = 1000;
  const auto path = drift_pattern_path(default_pattern_spec(DriftPattern::kHigh), T);

  // Weight simplex and single-query discipline on a full run.
  {
    QuadraticDriftEnv env(path, K, 0.1, 3);
    MetaConfig meta{{32, 64, 128, 256, 512, 1024}, {}, 0.5};
    MetaHedgePolicy policy(K, T, meta, cfg, 3);
    bool simplex = true;
    double worst_sum = 0.0;
    for (int t = 1; t <= T; ++t) {
      const auto x = policy.propose(t);
      policy.observe(t, env.step(t, x).feedback);
      double s = 0.0;
      for (double w : policy.pool().weights) {
        simplex = simplex && w >= kWeightFloor;
        s += w;
      }
      worst_sum = std::max(worst_sum, std::abs(s - 1.0));
    }
    out.check(simplex && worst_sum <= 1e-12,
              fmt("weights >= 1e-300 and |sum - 1| <= 1e-12 every period (max %.3g)", worst_sum));
    out.check(env.queries() == static_cast<std::size_t>(T), "exactly T environment queries");
  }

  // Reweight log-ratio identity.
  {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const int n = 2 + k % 7;
      std::vector<double> w(n);
      double s = 0.0;
      for (auto& v : w) s += (v = 0.05 + std::abs(u(rng)));
      for (auto& v : w) v /= s;
      std::vector<PriceVector> xs;
      for (int i = 0; i < n; ++i) xs.push_back(PriceVector{3.0 * u(rng), 3.0 * u(rng)});
      GradientEstimate g{{4.0 * u(rng), 4.0 * u(rng)}, 0.1};
      const double eps = 0.5;
      const auto w2 = reweight(w, xs, g, eps);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const double lhs = std::log(w2[i]) - std::log(w2[j]) - std::log(w[i]) + std::log(w[j]);
          const double rhs = eps * (vec::dot(g.g, xs[i].coords()) - vec::dot(g.g, xs[j].coords()));
          worst = std::max(worst, std::abs(lhs - rhs));
        }
      }
    }
    out.check(worst <= 1e-9, fmt("reweight log-ratio identity max error %.3g <= 1e-9", worst));
  }

  // N = 1 reproduces the restarting learner bit for bit.
  {
    bool same = true;
    for (int tau : {1, 7, 64, 1000}) {
      QuadraticDriftEnv env_a(path, K, 0.1, 5), env_b(path, K, 0.1, 5);
      MetaHedgePolicy meta(K, T, MetaConfig{{tau}, {}, 0.5}, cfg, 5);
      RestartingPolicy restart(K, RestartSchedule(tau, T), cfg, 5);
      const auto a = run_policy(env_a, meta, T);
      const auto b = run_policy(env_b, restart, T);
      for (int t = 0; t < T; ++t) {
        same = same && a.rows[t].posted == b.rows[t].posted &&
               a.rows[t].feedback == b.rows[t].feedback && a.rows[t].cum_regret == b.rows[t].cum_regret;
      }
    }
    out.check(same, "N=1 meta layer matches the restarting learner bit for bit (tau 1, 7, 64, 1000)");
  }

  // Initial weights telescope to one.
  {
    bool exact = true;
    for (int n = 1; n <= 20; ++n) {
      double s = 0.0;
      for (double w : init_weights(n)) s += w;
      exact = exact && s == 1.0;
    }
    out.check(exact, "initial weights sum to exactly 1 for N = 1..20");
  }
  return out;
}

Outcome p7_calibrated() {
  Outcome out;
  // Fit recovery on noiseless data.
  {
    auto rng = make_stream(11, StreamTag::kPanel);
    SyntheticPanelOptions options;
    options.noiseless = true;
    const auto synth = gen_synthetic_panel(54, 200, rng, options);
    const auto model = fit_demand(synth.panel);
    double worst = 0.0;
    bool shape = model.item_count() == 54 && model.horizon() == 200;
    for (std::size_t i = 0; shape && i < 54; ++i) {
      for (int t = 0; t < 200; ++t) {
        const auto& got = model.coef[i][t];
        const auto& want = synth.truth[i][t];
        worst = std::max({worst, std::abs(got.a - want.a), std::abs(got.b - want.b),
                          std::abs(got.c - want.c)});
      }
    }
    out.check(shape && worst <= 1e-8,
              fmt("noiseless 54 x 200 panel: max coefficient error %.3g <= 1e-8", worst));
  }

  auto cfg = load_config("poisson.json");
  cfg.write_traces = false;
  out.check(cfg.environment.kind == EnvironmentKind::kPoisson && cfg.environment.model_path.empty() &&
                cfg.environment.synthetic_items == 54 && cfg.environment.synthetic_periods == 200 &&
                cfg.horizon == 200 && cfg.replications == 20,
            "config is a 54-item, 200-period synthetic simulator with T=200 and 20 replications");
  check_learner_params(out, cfg, 0.01, 0.1);

  // Oracle dominance on random grid vectors.
  {
    const auto model = demand_model_for(cfg.environment);
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> grid(0, kOracleGridPoints - 1);
    std::uniform_int_distribution<int> period(1, model.horizon());
    bool dominated = true;
    for (int k = 0; k < 1000; ++k) {
      const int t = period(rng);
      PriceVector p(model.item_count());
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = oracle_grid_price(model.p_lo[i], model.p_hi[i], grid(rng));
      dominated = dominated && model.expected_revenue(t, p) <= oracle_grid(model, t).value;
    }
    out.check(dominated, "expected revenue <= oracle value on 1000 random grid vectors");
  }

  std::string meta, random;
  for (const auto& p : cfg.policies) {
    if (p.kind == PolicyKind::kMeta) {
      meta = p.name;
      out.check(p.taus == std::vector<int>{16, 32, 64, 128, 256} && p.epsilon == 0.5,
                "meta layer uses tau in {16..256} and epsilon 0.5");
    }
    if (p.kind == PolicyKind::kRandom) random = p.name;
  }
  out.check(!meta.empty() && !random.empty(), "config lists the meta layer and the random policy");
  if (meta.empty() || random.empty()) return out;
  const auto result = run_experiment(cfg);
  const double m = mean_of(result.policy(meta).final_regret());
  const double r = mean_of(result.policy(random).final_regret());
  out.check(m <= 0.7 * r, fmt2("meta regret %.1f <= 0.7 x random regret %.1f", m, r) +
                              fmt(" (improvement %.1f%%)", 100.0 * (1.0 - m / r)));
  return out;
}

Outcome p8_doubling() {
  Outcome out;
  bool sums = true, shape = true, runs = true;
  const auto K = BoxDomain::cube(2, -5.0, 5.0);
  LearnerConfig cfg;
  cfg.scheme = EstimatorScheme::kSimultaneousPerturbation;
  const MetaConfig meta{{32, 64, 128, 256, 512, 1024}, {}, 0.5};
  for (int T = 2; T <= 200; ++T) {
    const auto epochs = doubling_epochs(T);
    int total = 0;
    for (std::size_t k = 0; k < epochs.size(); ++k) {
      total += epochs[k];
      const int full = 1 << (k + 1);
      shape = shape && (k + 1 < epochs.size() ? epochs[k] == full : epochs[k] >= 1 && epochs[k] <= full);
    }
    sums = sums && total == T;
    QuadraticDriftEnv env(std::vector<PriceVector>(T, PriceVector{1.0, -0.5}), K, 0.1, T);
    EpochPolicyFactory factory = [&](int h, int epoch) -> std::unique_ptr<Policy> {
      return std::make_unique<MetaHedgePolicy>(K, h, meta, cfg, 100 + epoch);
    };
    DoublingPolicy policy(factory);
    run_policy(env, policy, T);
    runs = runs && policy.epoch_lengths() == epochs && env.queries() == static_cast<std::size_t>(T);
  }
  out.check(sums, "epoch lengths sum to T for T = 2..200");
  out.check(shape, "epochs are 2, 4, 8, ... with only the last truncated");
  out.check(runs, "wrapped runs consume exactly T periods in those epochs");
  out.check(doubling_epochs(14) == std::vector<int>{2, 4, 8}, "T=14 splits as 2+4+8");
  return out;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    files[fs::relative(entry.path(), root).string()] =
        std::string(std::istreambuf_iterator<char>(in), {});
  }
  return files;
}

Outcome p9_reproducibility() {
  Outcome out;
  const auto tmp = fs::temp_directory_path() / ("driftprice_p9_" + std::to_string(::getpid()));
  fs::remove_all(tmp);
  struct Case {
    std::string file;
    int reps;
  };
  for (const Case c : {Case{"ablation.json", 4}, Case{"walk.json", 4}, Case{"poisson.json", 3}}) {
    auto cfg = load_config(c.file);
    cfg.replications = c.reps;
    cfg.write_traces = true;
    const auto a = tmp / (c.file + "_a"), b = tmp / (c.file + "_b");
    ::setenv("DRIFT_PRICE_THREADS", "1", 1);
    run_experiment(cfg, a);
    ::setenv("DRIFT_PRICE_THREADS", "3", 1);
    run_experiment(cfg, b);
    ::unsetenv("DRIFT_PRICE_THREADS");
    const auto ta = read_tree(a), tb = read_tree(b);
    std::size_t traces = 0;
    for (const auto& [name, body] : ta)
      if (name.find("trace_r") != std::string::npos) ++traces;
    out.check(ta == tb && traces == cfg.policies.size() * static_cast<std::size_t>(c.reps),
              c.file + ": " + std::to_string(ta.size()) + " output files (" + std::to_string(traces) +
                  " traces) byte-identical across reruns with 1 and 3 threads");
  }
  fs::remove_all(tmp);
  return out;
}

struct Criterion {
  std::string id;
  std::string title;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"P1", "estimator bias/variance scaling", 30.0, p1_estimator_contract},
      {"P2", "projected-step oracle equivalence", 1.0, p2_projected_step},
      {"P3", "static-regret rate", 120.0, p3_static_rate},
      {"P4", "ablation ordering", 300.0, p4_ablation},
      {"P5", "variation sweep", 600.0, p5_variation_sweep},
      {"P6", "meta-layer identities", 5.0, p6_meta_identities},
      {"P7", "calibrated simulator", 300.0, p7_calibrated},
      {"P8", "anytime wrapper", 60.0, p8_doubling},
      {"P9", "reproducibility", 120.0, p9_reproducibility},
  };
  std::set<std::string> wanted(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.contains(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = seconds_since(start);
    o.check(secs < c.budget_seconds, fmt2("runtime %.2f s < %.0f s", secs, c.budget_seconds));
    for (const auto& n : o.notes) std::printf("  %s %s\n", c.id.c_str(), n.c_str());
    std::printf("%s %s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id.c_str(), c.title.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
