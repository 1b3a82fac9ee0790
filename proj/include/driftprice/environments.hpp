#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "driftprice/environment.hpp"
#include "driftprice/random.hpp"

namespace driftprice {

// ---------------------------------------------------------------------------
// Drifting quadratic revenue: r_t(x) = b_t^T x - ||x||^2 / 2, maximized at b_t.
// ---------------------------------------------------------------------------

double quadratic_revenue(const PriceVector& b, const PriceVector& x);

class QuadraticDriftEnv : public Environment {
 public:
  // `feasible` is the region baselines search (defaults to K).
  QuadraticDriftEnv(std::vector<PriceVector> b_path, BoxDomain query_box, double noise_sigma,
                    std::uint64_t seed, std::optional<BoxDomain> feasible = std::nullopt);

  std::size_t dim() const override { return query_box_.dim(); }
  int horizon() const override { return static_cast<int>(b_path_.size()); }
  const BoxDomain& query_box() const override { return query_box_; }
  const BoxDomain& feasible_box() const override { return feasible_; }
  std::pair<double, double> revenue_bounds() const override { return bounds_; }
  PriceVector oracle_price(int t) const override { return b_path_.at(t - 1); }

  const std::vector<PriceVector>& b_path() const { return b_path_; }
  double noise_sigma() const { return noise_sigma_; }

 protected:
  EnvironmentStep do_step(int t, const PriceVector& posted) override;

 private:
  std::vector<PriceVector> b_path_;
  BoxDomain query_box_;
  BoxDomain feasible_;
  double noise_sigma_;
  Rng noise_;
  std::pair<double, double> bounds_;
};

/// Served-at-a-point version of one period, no noise stream involved. Used
/// when computing the deterministic parts of a step.
EnvironmentStep quadratic_step(const PriceVector& b, const BoxDomain& query_box,
                               const PriceVector& posted, double noise);

/// Deterministic drift patterns for the ablation environment.
enum class DriftPattern { kNone, kLow, kHigh };

DriftPattern parse_drift_pattern(std::string_view name);
std::string_view drift_pattern_name(DriftPattern pattern);

struct DriftPatternSpec {
  DriftPattern kind = DriftPattern::kNone;
  PriceVector anchor{1.0, -0.5};  // b for the no-variation pattern, path center otherwise
  double amplitude = 1.0;         // sinusoid amplitude per axis
  double period = 1000.0;         // sinusoid period in time steps
  int jump_every = 0;             // high pattern: sign flip of the offset every k steps
  double jump_size = 0.0;
};

/// Default spec for each pattern (values tuned for the [-5, 5]^2 domain).
DriftPatternSpec default_pattern_spec(DriftPattern kind);

std::vector<PriceVector> drift_pattern_path(const DriftPatternSpec& spec, int horizon);

double path_variation(const std::vector<PriceVector>& path);

// ---------------------------------------------------------------------------
// Budgeted random walk in [c - r, c + r]^d.
// ---------------------------------------------------------------------------

struct BudgetedWalkPath {
  std::vector<PriceVector> b_path;
  double target_v = 0.0;
  double realized_v = 0.0;
  double step = 0.0;  // Delta_V = V / (T - 1)
};

/// b_1 = c + U[-0.3 r, 0.3 r]^d, then b_t = clamp(b_{t-1} + Delta_V d_t) with
/// d_t uniform on the unit sphere; c = 0.5, r = 0.5.
BudgetedWalkPath gen_walk_path(double v, int horizon, std::size_t d, Rng& rng);

void write_bpath_csv(std::ostream& os, const std::vector<PriceVector>& path);

// ---------------------------------------------------------------------------
// Calibrated Poisson demand simulator.
// ---------------------------------------------------------------------------

struct PanelRow {
  std::string item;
  int period = 0;
  double price = 0.0;
  double quantity = 0.0;
};

using WeeklyPanel = std::vector<PanelRow>;

WeeklyPanel read_panel_csv(std::istream& is);
void write_panel_csv(std::ostream& os, const WeeklyPanel& panel);

struct DemandCoefficients {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  // max(a p^2 + b p + c, 0)
  double rate(double price) const;
};

/// Per-item, per-period demand curves plus per-item feasible price intervals.
struct DemandModel {
  std::vector<std::string> items;
  std::vector<int> periods;                           // original period labels, sorted
  std::vector<std::vector<DemandCoefficients>> coef;  // [item][t-1]
  std::vector<double> p_lo;
  std::vector<double> p_hi;

  std::size_t item_count() const { return items.size(); }
  int horizon() const { return static_cast<int>(periods.size()); }
  double rate(std::size_t item, int t, double price) const;
  double expected_revenue(int t, const PriceVector& prices) const;
  BoxDomain price_box() const;
};

/// Least-squares polynomial fit per (item, period): quadratic with >= 3
/// distinct prices (demoted to linear if convex), linear with 2, constant
/// with 1. Empty cells reuse the item's most recent earlier fit, or a fit
/// pooled over all of the item's data. Feasible interval per item is
/// [0.9 min price, 1.1 max price].
DemandModel fit_demand(const WeeklyPanel& panel);

void write_model_csv(std::ostream& os, const DemandModel& model);
DemandModel read_model_csv(std::istream& is);

inline constexpr int kOracleGridPoints = 201;

// k-th of kOracleGridPoints equally spaced prices on [lo, hi]; k = last is hi exactly.
double oracle_grid_price(double lo, double hi, int k);

struct OracleChoice {
  PriceVector prices;
  double value = 0.0;
};

/// Per-item argmax of p * lambda(p) over a 201-point grid of the item's
/// interval (lowest price on ties); value is the sum of per-item maxima.
OracleChoice oracle_grid(const DemandModel& model, int t);

class PoissonDemandEnv : public Environment {
 public:
  PoissonDemandEnv(DemandModel model, std::uint64_t seed);

  std::size_t dim() const override { return model_.item_count(); }
  int horizon() const override { return model_.horizon(); }
  const BoxDomain& query_box() const override { return box_; }
  std::pair<double, double> revenue_bounds() const override { return bounds_; }
  double revenue_scale() const override { return scale_; }
  PriceVector oracle_price(int t) const override { return oracle_.at(t - 1).prices; }

  const DemandModel& model() const { return model_; }
  const OracleChoice& oracle(int t) const { return oracle_.at(t - 1); }

 protected:
  EnvironmentStep do_step(int t, const PriceVector& posted) override;

 private:
  DemandModel model_;
  BoxDomain box_;
  std::vector<OracleChoice> oracle_;
  Rng noise_;
  std::pair<double, double> bounds_;
  double scale_ = 1.0;
  bool clamp_warned_ = false;
};

struct SyntheticPanelOptions {
  int prices_per_cell = 5;
  bool noiseless = false;  // quantities equal the true rate instead of Poisson draws
};

struct SyntheticPanel {
  WeeklyPanel panel;
  std::vector<std::string> items;
  std::vector<std::vector<DemandCoefficients>> truth;  // [item][t-1]
};

/// Stand-in for a real weekly sales panel: concave quadratic demand per item
/// whose revenue-maximizing price and demand level drift slowly over time.
SyntheticPanel gen_synthetic_panel(int n_items, int n_periods, Rng& rng,
                                   const SyntheticPanelOptions& options = {});

}  // namespace driftprice
