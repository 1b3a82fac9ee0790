#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"

#include "driftprice/environments.hpp"
#include "driftprice/errors.hpp"

using namespace driftprice;

namespace {

DemandModel single_item(DemandCoefficients k, double lo, double hi) {
  DemandModel m;
  m.items = {"a"};
  m.periods = {1};
  m.coef = {{k}};
  m.p_lo = {lo};
  m.p_hi = {hi};
  return m;
}

const DemandCoefficients& only_fit(const WeeklyPanel& panel) {
  static DemandModel model;
  model = fit_demand(panel);
  REQUIRE(model.item_count() == 1);
  return model.coef[0][0];
}

}  // namespace

TEST_CASE("quadratic revenue step") {
  const auto K = BoxDomain::cube(2, -5.0, 5.0);
  auto s = quadratic_step({1.0, 2.0}, K, {1.0, 2.0}, 0.0);
  CHECK(s.mean_at_posted == doctest::Approx(2.5));
  CHECK(s.oracle_value == doctest::Approx(2.5));
  s = quadratic_step({0.0, 0.0}, K, {0.0, 0.0}, 0.0);
  CHECK(s.oracle_value == 0.0);
  CHECK(s.mean_at_posted == 0.0);
  CHECK_THROWS_AS(quadratic_step({0.0, 0.0}, K, {6.0, 0.0}, 0.0), QueryError);

  QuadraticDriftEnv env(std::vector<PriceVector>(3, PriceVector{1.0, -0.5}), K, 0.0, 1);
  const auto step = env.step(1, {0.3, 0.2});
  CHECK(step.feedback == step.mean_at_posted);
  CHECK(step.mean_at_posted == doctest::Approx(0.3 - 0.1 - 0.5 * (0.09 + 0.04)));
}

TEST_CASE("quadratic noise has the configured scale") {
  const auto K = BoxDomain::cube(2, -5.0, 5.0);
  const int n = 20000;
  QuadraticDriftEnv env(std::vector<PriceVector>(n, PriceVector{1.0, -0.5}), K, 0.1, 2);
  double s = 0.0, ss = 0.0;
  for (int t = 1; t <= n; ++t) {
    const auto step = env.step(t, {0.0, 0.0});
    const double xi = step.feedback - step.mean_at_posted;
    s += xi;
    ss += xi * xi;
  }
  CHECK(std::abs(s / n) < 0.005);
  CHECK(std::sqrt(ss / n) == doctest::Approx(0.1).epsilon(0.03));
}

TEST_CASE("drift patterns") {
  const auto none = drift_pattern_path(default_pattern_spec(DriftPattern::kNone), 100);
  CHECK(path_variation(none) == 0.0);
  CHECK(none.front() == PriceVector{1.0, -0.5});
  const auto low = drift_pattern_path(default_pattern_spec(DriftPattern::kLow), 1000);
  const auto high = drift_pattern_path(default_pattern_spec(DriftPattern::kHigh), 1000);
  CHECK(path_variation(low) > 0.0);
  CHECK(path_variation(high) > 5.0 * path_variation(low));
  for (const auto& b : high) CHECK(BoxDomain::cube(2, -5.0, 5.0).shrink(0.1).contains(b));
  CHECK(parse_drift_pattern(drift_pattern_name(DriftPattern::kHigh)) == DriftPattern::kHigh);
  CHECK_THROWS_AS(parse_drift_pattern("wild"), ConfigError);
}

TEST_CASE("path variation sums consecutive distances") {
  const std::vector<PriceVector> path{{0.0, 0.0}, {3.0, 4.0}, {3.0, 4.0}, {0.0, 0.0}};
  CHECK(path_variation(path) == doctest::Approx(10.0));
}

TEST_CASE("budgeted walk") {
  auto rng = make_stream(3, StreamTag::kEnvironmentPath);
  const auto still = gen_walk_path(0.0, 1000, 2, rng);
  CHECK(still.realized_v == 0.0);
  for (const auto& b : still.b_path) CHECK(b == still.b_path.front());
  const auto moving = gen_walk_path(10.0, 1000, 2, rng);
  CHECK(moving.step == doctest::Approx(10.0 / 999.0));
  CHECK(moving.realized_v <= 10.0);
  CHECK(moving.realized_v == doctest::Approx(path_variation(moving.b_path)));
  for (const auto& b : moving.b_path) CHECK(BoxDomain::cube(2, 0.0, 1.0).contains(b));
  std::ostringstream os;
  write_bpath_csv(os, moving.b_path);
  CHECK(os.str().rfind("period,b_1,b_2\n", 0) == 0);
}

TEST_CASE("demand fits by number of distinct prices") {
  auto k = only_fit({{"a", 1, 2.0, 5.0}, {"a", 1, 2.0, 7.0}, {"a", 1, 2.0, 6.0}});
  CHECK(k.a == 0.0);
  CHECK(k.b == 0.0);
  CHECK(k.c == doctest::Approx(6.0));
  k = only_fit({{"a", 1, 1.0, 3.0}, {"a", 1, 2.0, 1.0}});
  CHECK(k.a == 0.0);
  CHECK(k.b == doctest::Approx(-2.0));
  CHECK(k.c == doctest::Approx(5.0));
  k = only_fit({{"a", 1, 1.0, 6.0}, {"a", 1, 2.0, 8.0}, {"a", 1, 3.0, 6.0}});
  CHECK(k.a == doctest::Approx(-2.0));
  CHECK(k.b == doctest::Approx(8.0));
  CHECK(k.c == doctest::Approx(0.0).epsilon(1e-9));
  // Convex data is demoted to the least-squares line.
  k = only_fit({{"a", 1, 1.0, 2.0}, {"a", 1, 2.0, 1.0}, {"a", 1, 3.0, 2.0}});
  CHECK(k.a == 0.0);
  CHECK(k.b == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(k.c == doctest::Approx(5.0 / 3.0));
}

TEST_CASE("missing cells fall back to the previous period") {
  const WeeklyPanel panel{{"a", 1, 1.0, 3.0}, {"a", 1, 2.0, 1.0}, {"a", 3, 1.0, 4.0},
                          {"b", 2, 5.0, 2.0}};
  set_warnings_enabled(false);
  const auto model = fit_demand(panel);
  set_warnings_enabled(true);
  CHECK(model.items == std::vector<std::string>{"a", "b"});
  CHECK(model.periods == std::vector<int>{1, 2, 3});
  CHECK(model.coef[0][1].b == doctest::Approx(-2.0));
  CHECK(model.coef[0][2].c == doctest::Approx(4.0));
  // Item b has no earlier fit for period 1: pooled over its data.
  CHECK(model.coef[1][0].c == doctest::Approx(2.0));
  CHECK(model.p_lo[0] == doctest::Approx(0.9));
  CHECK(model.p_hi[0] == doctest::Approx(2.2));
}

TEST_CASE("noiseless synthetic data is recovered exactly") {
  auto rng = make_stream(5, StreamTag::kPanel);
  SyntheticPanelOptions options;
  options.noiseless = true;
  const auto synth = gen_synthetic_panel(1, 10, rng, options);
  const auto model = fit_demand(synth.panel);
  for (int t = 0; t < 10; ++t) {
    CHECK(std::abs(model.coef[0][t].a - synth.truth[0][t].a) <= 1e-8);
    CHECK(std::abs(model.coef[0][t].b - synth.truth[0][t].b) <= 1e-8);
    CHECK(std::abs(model.coef[0][t].c - synth.truth[0][t].c) <= 1e-8);
    CHECK(synth.truth[0][t].a < 0.0);
  }
}

TEST_CASE("single price level per cell gives constant fits") {
  const WeeklyPanel panel{{"a", 1, 3.0, 4.0}, {"a", 2, 3.5, 5.0}, {"b", 1, 1.0, 1.0}};
  const auto model = fit_demand(panel);
  for (const auto& row : model.coef)
    for (const auto& k : row) {
      CHECK(k.a == 0.0);
      CHECK(k.b == 0.0);
    }
}

TEST_CASE("panel and model CSV round trip") {
  auto rng = make_stream(6, StreamTag::kPanel);
  const auto synth = gen_synthetic_panel(3, 4, rng);
  std::stringstream panel_csv;
  write_panel_csv(panel_csv, synth.panel);
  const auto panel = read_panel_csv(panel_csv);
  REQUIRE(panel.size() == synth.panel.size());
  for (std::size_t k = 0; k < panel.size(); ++k) {
    CHECK(panel[k].item == synth.panel[k].item);
    CHECK(panel[k].price == synth.panel[k].price);
    CHECK(panel[k].quantity == synth.panel[k].quantity);
  }
  const auto model = fit_demand(panel);
  std::stringstream model_csv;
  write_model_csv(model_csv, model);
  const auto back = read_model_csv(model_csv);
  CHECK(back.items == model.items);
  CHECK(back.periods == model.periods);
  CHECK(back.p_lo == model.p_lo);
  for (std::size_t i = 0; i < model.item_count(); ++i)
    for (int t = 0; t < model.horizon(); ++t) {
      CHECK(back.coef[i][t].a == model.coef[i][t].a);
      CHECK(back.coef[i][t].b == model.coef[i][t].b);
      CHECK(back.coef[i][t].c == model.coef[i][t].c);
    }
  std::istringstream bad("item,week,price,quantity\n");
  CHECK_THROWS_AS(read_panel_csv(bad), ConfigError);
}

TEST_CASE("demand rate and revenue") {
  const auto m = single_item({-1.0, 4.0, 0.0}, 0.0, 4.0);
  CHECK(m.rate(0, 1, 2.0) == doctest::Approx(4.0));
  CHECK(m.expected_revenue(1, PriceVector{2.0}) == doctest::Approx(8.0));
  CHECK(m.rate(0, 1, 5.0) == 0.0);
}

TEST_CASE("grid oracle") {
  auto choice = oracle_grid(single_item({0.0, -1.0, 4.0}, 0.0, 4.0), 1);
  CHECK(choice.prices[0] == doctest::Approx(2.0));
  CHECK(choice.value == doctest::Approx(4.0));
  choice = oracle_grid(single_item({0.0, 0.0, 3.0}, 1.0, 2.0), 1);
  CHECK(choice.prices[0] == 2.0);
  choice = oracle_grid(single_item({0.0, 0.0, 0.0}, 1.0, 2.0), 1);
  CHECK(choice.prices[0] == 1.0);
  CHECK(choice.value == 0.0);
  CHECK(oracle_grid_price(0.0, 4.0, kOracleGridPoints - 1) == 4.0);
  CHECK(oracle_grid_price(0.0, 4.0, 100) == doctest::Approx(2.0));
}

TEST_CASE("Poisson environment") {
  PoissonDemandEnv env(single_item({-1.0, 4.0, 0.0}, 1.0, 3.0), 3);
  const auto s = env.step(1, PriceVector{2.0});
  CHECK(s.mean_at_posted == doctest::Approx(8.0));
  // p (4p - p^2) peaks at 8/3; the grid step is 0.01.
  CHECK(s.oracle_value <= 256.0 / 27.0);
  CHECK(s.oracle_value == doctest::Approx(256.0 / 27.0).epsilon(1e-4));
  CHECK(std::fmod(s.feedback, 2.0) == 0.0);
  CHECK_THROWS_AS(env.step(1, PriceVector{-1.0}), QueryError);

  PoissonDemandEnv zero(single_item({0.0, 0.0, 0.0}, 1.0, 3.0), 3);
  CHECK(zero.step(1, PriceVector{2.0}).feedback == 0.0);
}

TEST_CASE("Poisson feedback averages to the expected revenue") {
  auto rng = make_stream(8, StreamTag::kPanel);
  const auto model = fit_demand(gen_synthetic_panel(3, 1, rng).panel);
  PoissonDemandEnv env(model, 4);
  const PriceVector p{0.5 * (model.p_lo[0] + model.p_hi[0]), model.p_lo[1], model.p_hi[2]};
  const double mean = model.expected_revenue(1, p);
  double var = 0.0;
  for (std::size_t i = 0; i < 3; ++i) var += p[i] * p[i] * model.rate(i, 1, p[i]);
  const int n = 100'000;
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += env.step(1, p).feedback;
  CHECK(std::abs(s / n - mean) <= 3.0 * std::sqrt(var / n));
}

TEST_CASE("quadratic oracle dominates every feasible price") {
  const auto K = BoxDomain::cube(2, -5.0, 5.0);
  Rng rng(12);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int k = 0; k < 1000; ++k) {
    const PriceVector b{0.5 * u(rng), 0.5 * u(rng)};
    const auto s = quadratic_step(b, K, {u(rng), u(rng)}, 0.0);
    CHECK(s.mean_at_posted <= s.oracle_value);
  }
}

TEST_CASE("generators are deterministic in their seed") {
  auto r1 = make_stream(9, StreamTag::kEnvironmentPath), r2 = make_stream(9, StreamTag::kEnvironmentPath);
  CHECK(gen_walk_path(20.0, 300, 2, r1).b_path == gen_walk_path(20.0, 300, 2, r2).b_path);
  auto p1 = make_stream(9, StreamTag::kPanel), p2 = make_stream(9, StreamTag::kPanel);
  const auto a = gen_synthetic_panel(4, 6, p1), b = gen_synthetic_panel(4, 6, p2);
  REQUIRE(a.panel.size() == b.panel.size());
  for (std::size_t k = 0; k < a.panel.size(); ++k) CHECK(a.panel[k].quantity == b.panel[k].quantity);
  const auto fa = fit_demand(a.panel), fb = fit_demand(b.panel);
  CHECK(fa.coef[2][3].b == fb.coef[2][3].b);
  PoissonDemandEnv e1(fa, 5), e2(fb, 5);
  for (int t = 1; t <= 6; ++t) CHECK(e1.step(t, e1.oracle_price(t)).feedback == e2.step(t, e2.oracle_price(t)).feedback);
}
