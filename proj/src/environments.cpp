#include "driftprice/environments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "driftprice/errors.hpp"

namespace driftprice {

// ---------------------------------------------------------------------------
// Quadratic drift
// ---------------------------------------------------------------------------

double quadratic_revenue(const PriceVector& b, const PriceVector& x) {
  return vec::dot(b.coords(), x.coords()) - 0.5 * vec::dot(x.coords(), x.coords());
}

EnvironmentStep quadratic_step(const PriceVector& b, const BoxDomain& query_box,
                               const PriceVector& posted, double noise) {
  if (posted.size() != query_box.dim()) throw QueryError("posted price has wrong dimension");
  if (!query_box.contains(posted, 1e-12)) throw QueryError("posted price outside the query box");
  EnvironmentStep step;
  step.oracle_value = 0.5 * vec::dot(b.coords(), b.coords());
  step.mean_at_posted = quadratic_revenue(b, posted);
  step.feedback = step.mean_at_posted + noise;
  return step;
}

QuadraticDriftEnv::QuadraticDriftEnv(std::vector<PriceVector> b_path, BoxDomain query_box,
                                     double noise_sigma, std::uint64_t seed,
                                     std::optional<BoxDomain> feasible)
    : b_path_(std::move(b_path)),
      query_box_(std::move(query_box)),
      feasible_(feasible.value_or(query_box_)),
      noise_sigma_(noise_sigma),
      noise_(make_stream(seed, StreamTag::kEnvironmentNoise)) {
  if (b_path_.empty()) throw ConfigError("quadratic environment needs a non-empty b path");
  if (!(noise_sigma_ >= 0.0)) throw ConfigError("noise_sigma must be >= 0");
  const std::size_t d = query_box_.dim();
  if (feasible_.dim() != d) throw ConfigError("feasible box dimension mismatch");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& b : b_path_) {
    if (b.size() != d) throw ConfigError("b path dimension mismatch");
    hi = std::max(hi, 0.5 * vec::dot(b.coords(), b.coords()));
    // Minimum over the box: worst endpoint per axis.
    double worst = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double l = query_box_.lower()[j], u = query_box_.upper()[j];
      worst += std::min(b[j] * l - 0.5 * l * l, b[j] * u - 0.5 * u * u);
    }
    lo = std::min(lo, worst);
  }
  bounds_ = {lo - 3.0 * noise_sigma_, hi + 3.0 * noise_sigma_};
}

EnvironmentStep QuadraticDriftEnv::do_step(int t, const PriceVector& posted) {
  if (t < 1 || t > horizon()) throw QueryError("period outside the horizon");
  double xi = 0.0;
  if (noise_sigma_ > 0.0) {
    std::normal_distribution<double> gauss(0.0, noise_sigma_);
    xi = gauss(noise_);
  }
  return quadratic_step(b_path_[t - 1], query_box_, posted, xi);
}

DriftPattern parse_drift_pattern(std::string_view name) {
  if (name == "none") return DriftPattern::kNone;
  if (name == "low") return DriftPattern::kLow;
  if (name == "high") return DriftPattern::kHigh;
  throw ConfigError("unknown drift pattern '" + std::string(name) + "' (expected none | low | high)");
}

std::string_view drift_pattern_name(DriftPattern pattern) {
  switch (pattern) {
    case DriftPattern::kNone: return "none";
    case DriftPattern::kLow: return "low";
    case DriftPattern::kHigh: return "high";
  }
  return "none";
}

DriftPatternSpec default_pattern_spec(DriftPattern kind) {
  DriftPatternSpec spec;
  spec.kind = kind;
  switch (kind) {
    case DriftPattern::kNone:
      break;
    case DriftPattern::kLow:
      spec.amplitude = 1.0;
      spec.period = 1000.0;
      break;
    case DriftPattern::kHigh:
      spec.amplitude = 3.0;
      spec.period = 100.0;
      spec.jump_every = 250;
      spec.jump_size = 1.0;
      break;
  }
  return spec;
}

std::vector<PriceVector> drift_pattern_path(const DriftPatternSpec& spec, int horizon) {
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  const std::size_t d = spec.anchor.size();
  std::vector<PriceVector> path;
  path.reserve(static_cast<std::size_t>(horizon));
  for (int t = 1; t <= horizon; ++t) {
    PriceVector b = spec.anchor;
    if (spec.kind != DriftPattern::kNone) {
      const double phase = 2.0 * std::numbers::pi * (t - 1) / spec.period;
      for (std::size_t j = 0; j < d; ++j)
        b[j] += spec.amplitude * (j % 2 == 0 ? std::sin(phase + j) : std::cos(phase + j));
      if (spec.kind == DriftPattern::kHigh && spec.jump_every > 0) {
        const int segment = (t - 1) / spec.jump_every;
        const double sign = segment % 2 == 0 ? 1.0 : -1.0;
        for (std::size_t j = 0; j < d; ++j) b[j] += sign * spec.jump_size * (j % 2 == 0 ? 1.0 : -1.0) * 0.5;
      }
    }
    path.push_back(std::move(b));
  }
  return path;
}

double path_variation(const std::vector<PriceVector>& path) {
  double v = 0.0;
  for (std::size_t t = 1; t < path.size(); ++t)
    v += vec::distance(path[t].coords(), path[t - 1].coords());
  return v;
}

// ---------------------------------------------------------------------------
// Budgeted random walk
// ---------------------------------------------------------------------------

BudgetedWalkPath gen_walk_path(double v, int horizon, std::size_t d, Rng& rng) {
  if (!(v >= 0.0)) throw ConfigError("variation budget must be >= 0");
  if (horizon < 2) throw ConfigError("walk path needs T >= 2");
  if (d < 1) throw ConfigError("walk path needs d >= 1");
  constexpr double kCenter = 0.5;
  constexpr double kRadius = 0.5;
  BudgetedWalkPath out;
  out.target_v = v;
  out.step = v / static_cast<double>(horizon - 1);
  std::uniform_real_distribution<double> start(-0.3 * kRadius, 0.3 * kRadius);
  std::normal_distribution<double> gauss(0.0, 1.0);
  PriceVector b(d);
  for (std::size_t j = 0; j < d; ++j) b[j] = kCenter + start(rng);
  out.b_path.push_back(b);
  std::vector<double> dir(d);
  for (int t = 2; t <= horizon; ++t) {
    double n2 = 0.0;
    while (n2 == 0.0) {
      n2 = 0.0;
      for (auto& u : dir) {
        u = gauss(rng);
        n2 += u * u;
      }
    }
    // Step length Delta_V (1 - 1e-12).
    const double inv = (1.0 - 1e-12) / std::sqrt(n2);
    PriceVector next(d);
    for (std::size_t j = 0; j < d; ++j)
      next[j] = std::clamp(b[j] + out.step * dir[j] * inv, kCenter - kRadius, kCenter + kRadius);
    out.realized_v += vec::distance(next.coords(), b.coords());
    b = next;
    out.b_path.push_back(b);
  }
  return out;
}

void write_bpath_csv(std::ostream& os, const std::vector<PriceVector>& path) {
  const std::size_t d = path.empty() ? 0 : path.front().size();
  os << "period";
  for (std::size_t j = 1; j <= d; ++j) os << ",b_" << j;
  os << '\n' << std::setprecision(17);
  for (std::size_t t = 0; t < path.size(); ++t) {
    os << t + 1;
    for (double v : path[t]) os << ',' << v;
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// CSV helpers
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line_no) + ": not a number: '" + s + "'");
  }
}

int parse_int(const std::string& s, std::size_t line_no) {
  const double v = parse_double(s, line_no);
  if (v != std::floor(v)) throw ConfigError("line " + std::to_string(line_no) + ": not an integer");
  return static_cast<int>(v);
}

void expect_header(std::istream& is, const std::vector<std::string>& want) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("CSV is empty (header required)");
  if (!line.empty() && line.front() == '\xEF' && line.size() >= 3) line = line.substr(3);  // BOM
  if (split_csv_line(line) != want) {
    std::string joined;
    for (const auto& w : want) joined += (joined.empty() ? "" : ",") + w;
    throw ConfigError("unexpected CSV header '" + line + "', expected '" + joined + "'");
  }
}

}  // namespace

WeeklyPanel read_panel_csv(std::istream& is) {
  expect_header(is, {"item", "period", "price", "quantity"});
  WeeklyPanel panel;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw ConfigError("line " + std::to_string(line_no) + ": expected 4 fields");
    panel.push_back({f[0], parse_int(f[1], line_no), parse_double(f[2], line_no),
                     parse_double(f[3], line_no)});
  }
  return panel;
}

void write_panel_csv(std::ostream& os, const WeeklyPanel& panel) {
  os << "item,period,price,quantity\n" << std::setprecision(17);
  for (const auto& r : panel) os << r.item << ',' << r.period << ',' << r.price << ',' << r.quantity << '\n';
}

// ---------------------------------------------------------------------------
// Demand model
// ---------------------------------------------------------------------------

double DemandCoefficients::rate(double p) const { return std::max(a * p * p + b * p + c, 0.0); }

double DemandModel::rate(std::size_t item, int t, double price) const {
  return coef.at(item).at(static_cast<std::size_t>(t - 1)).rate(price);
}

double DemandModel::expected_revenue(int t, const PriceVector& prices) const {
  double total = 0.0;
  for (std::size_t i = 0; i < item_count(); ++i) total += prices[i] * rate(i, t, prices[i]);
  return total;
}

BoxDomain DemandModel::price_box() const { return BoxDomain(p_lo, p_hi); }

namespace {

struct Obs {
  double price;
  double quantity;
};

std::size_t distinct_prices(std::vector<Obs>& obs) {
  std::sort(obs.begin(), obs.end(), [](const Obs& x, const Obs& y) { return x.price < y.price; });
  std::size_t n = 0;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    if (k == 0 || obs[k].price > obs[k - 1].price * (1.0 + 1e-12)) ++n;
  }
  return n;
}

// Least squares in the centred, scaled variable u = (p - m) / s, then mapped
// back to coefficients in p.
DemandCoefficients polyfit(const std::vector<Obs>& obs, int degree) {
  double m = 0.0;
  for (const auto& o : obs) m += o.price;
  m /= static_cast<double>(obs.size());
  double s = 0.0;
  for (const auto& o : obs) s = std::max(s, std::abs(o.price - m));
  if (s == 0.0) s = 1.0;
  const int k = degree + 1;
  std::array<std::array<double, 4>, 3> a{};  // augmented normal equations
  for (const auto& o : obs) {
    const double u = (o.price - m) / s;
    const std::array<double, 3> basis{1.0, u, u * u};
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < k; ++c) a[r][c] += basis[r] * basis[c];
      a[r][k] += basis[r] * o.quantity;
    }
  }
  for (int col = 0; col < k; ++col) {
    int piv = col;
    for (int r = col + 1; r < k; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    if (a[col][col] == 0.0) throw InvariantViolation("singular least-squares system");
    for (int r = 0; r < k; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (int c = col; c <= k; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::array<double, 3> alpha{};
  for (int r = 0; r < k; ++r) alpha[r] = a[r][k] / a[r][r];
  DemandCoefficients out;
  out.a = alpha[2] / (s * s);
  out.b = alpha[1] / s - 2.0 * alpha[2] * m / (s * s);
  out.c = alpha[0] - alpha[1] * m / s + alpha[2] * m * m / (s * s);
  return out;
}

DemandCoefficients fit_cell(std::vector<Obs> obs) {
  const std::size_t n = distinct_prices(obs);
  if (n >= 3) {
    auto quad = polyfit(obs, 2);
    if (quad.a <= 0.0) return quad;
    return polyfit(obs, 1);  // convex in price: demote to the line
  }
  if (n == 2) return polyfit(obs, 1);
  double mean = 0.0;
  for (const auto& o : obs) mean += o.quantity;
  DemandCoefficients out;
  out.c = mean / static_cast<double>(obs.size());
  return out;
}

}  // namespace

DemandModel fit_demand(const WeeklyPanel& panel) {
  DemandModel model;
  std::unordered_map<std::string, std::size_t> item_index;
  std::vector<std::string> order;
  std::vector<int> periods;
  // Observations keyed by item, then by period label.
  std::vector<std::map<int, std::vector<Obs>>> cells;
  std::map<std::string, bool> seen_any;
  for (const auto& row : panel) {
    seen_any.emplace(row.item, false);
    if (!(row.price > 0.0) || !(row.quantity >= 0.0) || !std::isfinite(row.price) ||
        !std::isfinite(row.quantity)) {
      warn("panel row for item '" + row.item + "' period " + std::to_string(row.period) +
           " has invalid price/quantity; dropped");
      continue;
    }
    auto [it, inserted] = item_index.emplace(row.item, order.size());
    if (inserted) {
      order.push_back(row.item);
      cells.emplace_back();
    }
    seen_any[row.item] = true;
    cells[it->second][row.period].push_back({row.price, row.quantity});
    periods.push_back(row.period);
  }
  for (const auto& [item, ok] : seen_any)
    if (!ok) warn("item '" + item + "' has no valid observations; excluded");
  if (order.empty()) throw ConfigError("panel contains no valid observations");
  std::sort(periods.begin(), periods.end());
  periods.erase(std::unique(periods.begin(), periods.end()), periods.end());
  model.items = order;
  model.periods = periods;
  model.coef.resize(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::vector<Obs> pooled;
    for (const auto& [period, obs] : cells[i]) {
      for (const auto& o : obs) {
        lo = std::min(lo, o.price);
        hi = std::max(hi, o.price);
        pooled.push_back(o);
      }
    }
    model.p_lo.push_back(0.9 * lo);
    model.p_hi.push_back(1.1 * hi);
    std::optional<DemandCoefficients> previous;
    std::optional<DemandCoefficients> pooled_fit;
    for (int label : periods) {
      auto cell = cells[i].find(label);
      if (cell != cells[i].end()) {
        previous = fit_cell(cell->second);
        model.coef[i].push_back(*previous);
      } else if (previous) {
        model.coef[i].push_back(*previous);
      } else {
        if (!pooled_fit) pooled_fit = fit_cell(pooled);
        model.coef[i].push_back(*pooled_fit);
      }
    }
  }
  return model;
}

void write_model_csv(std::ostream& os, const DemandModel& model) {
  os << "item,period,a,b,c,p_lo,p_hi\n" << std::setprecision(17);
  for (std::size_t i = 0; i < model.item_count(); ++i) {
    for (int t = 1; t <= model.horizon(); ++t) {
      const auto& k = model.coef[i][t - 1];
      os << model.items[i] << ',' << model.periods[t - 1] << ',' << k.a << ',' << k.b << ','
         << k.c << ',' << model.p_lo[i] << ',' << model.p_hi[i] << '\n';
    }
  }
}

DemandModel read_model_csv(std::istream& is) {
  expect_header(is, {"item", "period", "a", "b", "c", "p_lo", "p_hi"});
  struct Row {
    std::size_t item;
    int period;
    DemandCoefficients k;
  };
  DemandModel model;
  std::unordered_map<std::string, std::size_t> item_index;
  std::vector<Row> rows;
  std::vector<int> periods;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7) throw ConfigError("line " + std::to_string(line_no) + ": expected 7 fields");
    auto [it, inserted] = item_index.emplace(f[0], model.items.size());
    const double lo = parse_double(f[5], line_no), hi = parse_double(f[6], line_no);
    if (inserted) {
      model.items.push_back(f[0]);
      model.p_lo.push_back(lo);
      model.p_hi.push_back(hi);
    } else if (model.p_lo[it->second] != lo || model.p_hi[it->second] != hi) {
      throw ConfigError("line " + std::to_string(line_no) + ": price interval differs across periods");
    }
    Row r{it->second, parse_int(f[1], line_no),
          {parse_double(f[2], line_no), parse_double(f[3], line_no), parse_double(f[4], line_no)}};
    rows.push_back(r);
    periods.push_back(r.period);
  }
  if (model.items.empty()) throw ConfigError("demand model CSV has no rows");
  std::sort(periods.begin(), periods.end());
  periods.erase(std::unique(periods.begin(), periods.end()), periods.end());
  model.periods = periods;
  std::vector<std::vector<std::optional<DemandCoefficients>>> grid(
      model.items.size(), std::vector<std::optional<DemandCoefficients>>(periods.size()));
  for (const auto& r : rows) {
    const auto t = static_cast<std::size_t>(
        std::lower_bound(periods.begin(), periods.end(), r.period) - periods.begin());
    grid[r.item][t] = r.k;
  }
  model.coef.resize(model.items.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t t = 0; t < periods.size(); ++t) {
      if (!grid[i][t])
        throw ConfigError("demand model CSV lacks item '" + model.items[i] + "' period " +
                          std::to_string(periods[t]));
      model.coef[i].push_back(*grid[i][t]);
    }
  }
  model.price_box();  // validates intervals
  return model;
}

double oracle_grid_price(double lo, double hi, int k) {
  if (k == kOracleGridPoints - 1) return hi;
  return lo + (hi - lo) * k / (kOracleGridPoints - 1);
}

OracleChoice oracle_grid(const DemandModel& model, int t) {
  if (t < 1 || t > model.horizon()) throw ConfigError("oracle_grid: period outside the model");
  OracleChoice out;
  out.prices = PriceVector(model.item_count());
  for (std::size_t i = 0; i < model.item_count(); ++i) {
    const double lo = model.p_lo[i], hi = model.p_hi[i];
    double best_p = lo;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < kOracleGridPoints; ++k) {
      const double p = oracle_grid_price(lo, hi, k);
      const double v = p * model.rate(i, t, p);
      if (v > best_v) {
        best_v = v;
        best_p = p;
      }
    }
    out.prices[i] = best_p;
    out.value += best_v;
  }
  return out;
}

PoissonDemandEnv::PoissonDemandEnv(DemandModel model, std::uint64_t seed)
    : model_(std::move(model)),
      box_(model_.price_box()),
      noise_(make_stream(seed, StreamTag::kEnvironmentNoise)) {
  double best = 0.0, total = 0.0;
  for (int t = 1; t <= model_.horizon(); ++t) {
    oracle_.push_back(oracle_grid(model_, t));
    best = std::max(best, oracle_.back().value);
    total += oracle_.back().value;
  }
  bounds_ = {0.0, 2.0 * best};
  scale_ = total > 0.0 ? total / model_.horizon() : 1.0;
}

EnvironmentStep PoissonDemandEnv::do_step(int t, const PriceVector& posted) {
  if (t < 1 || t > horizon()) throw QueryError("period outside the horizon");
  if (posted.size() != dim()) throw QueryError("posted price has wrong dimension");
  EnvironmentStep step;
  step.oracle_value = oracle_[t - 1].value;
  for (std::size_t i = 0; i < dim(); ++i) {
    double p = posted[i];
    if (p < 0.0) throw QueryError("negative price");
    if (p < model_.p_lo[i] || p > model_.p_hi[i]) {
      const double slack = 1e-9 * (model_.p_hi[i] - model_.p_lo[i]);
      const bool rounding = p >= model_.p_lo[i] - slack && p <= model_.p_hi[i] + slack;
      if (!rounding && !clamp_warned_) {
        warn("posted price outside an item's feasible interval; clamped");
        clamp_warned_ = true;
      }
      p = std::clamp(p, model_.p_lo[i], model_.p_hi[i]);
    }
    const double lambda = model_.rate(i, t, p);
    double demand = 0.0;
    if (lambda > 0.0) {
      std::poisson_distribution<long long> draw(lambda);
      demand = static_cast<double>(draw(noise_));
    }
    step.mean_at_posted += p * lambda;
    step.feedback += p * demand;
  }
  return step;
}

// ---------------------------------------------------------------------------
// Synthetic panel
// ---------------------------------------------------------------------------

SyntheticPanel gen_synthetic_panel(int n_items, int n_periods, Rng& rng,
                                   const SyntheticPanelOptions& options) {
  if (n_items < 1 || n_periods < 1) throw ConfigError("synthetic panel needs items, periods >= 1");
  if (options.prices_per_cell < 1) throw ConfigError("prices_per_cell must be >= 1");
  std::uniform_real_distribution<double> base_price(2.0, 10.0);
  std::uniform_real_distribution<double> level(20.0, 60.0);
  std::uniform_real_distribution<double> curvature(0.1, 0.2);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> jitter(-0.02, 0.02);
  SyntheticPanel out;
  const int width = static_cast<int>(std::ceil(std::log10(n_items + 1)));
  for (int i = 0; i < n_items; ++i) {
    std::ostringstream id;
    id << "item_" << std::setw(width) << std::setfill('0') << i;
    out.items.push_back(id.str());
    const double price = base_price(rng);
    const double a0 = level(rng);
    const double kappa = curvature(rng);
    const double ph_opt = phase(rng), ph_level = phase(rng);
    std::vector<DemandCoefficients> curve;
    for (int t = 1; t <= n_periods; ++t) {
      // Revenue-maximizing price and demand level drift slowly (yearly and
      // half-yearly cycles in weeks).
      const double p_star = price * (1.0 + 0.08 * std::sin(2.0 * std::numbers::pi * t / 52.0 + ph_opt));
      const double a_t = a0 * (1.0 + 0.15 * std::sin(2.0 * std::numbers::pi * t / 26.0 + ph_level));
      DemandCoefficients k;
      k.a = -kappa * a_t / (price * price);
      // d/dp [p (c + b p + a p^2)] = 0 at p_star
      k.c = a_t;
      k.b = -(a_t + 3.0 * k.a * p_star * p_star) / (2.0 * p_star);
      curve.push_back(k);
      const int n = options.prices_per_cell;
      for (int s = 0; s < n; ++s) {
        const double rel = n == 1 ? 0.0 : -0.2 + 0.4 * s / (n - 1);
        const double p = price * (1.0 + rel) * (1.0 + jitter(rng));
        const double lambda = k.rate(p);
        double q = lambda;
        if (!options.noiseless) {
          std::poisson_distribution<long long> draw(lambda > 0.0 ? lambda : 1e-12);
          q = lambda > 0.0 ? static_cast<double>(draw(rng)) : 0.0;
        }
        out.panel.push_back({out.items.back(), t, p, q});
      }
    }
    out.truth.push_back(std::move(curve));
  }
  return out;
}

}  // namespace driftprice
