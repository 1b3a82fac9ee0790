#include "driftprice/meta_hedge.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "driftprice/errors.hpp"

namespace driftprice {

std::vector<double> init_weights(int n) {
  if (n < 1) throw ParameterError("init_weights: N must be >= 1");
  std::vector<double> w(static_cast<std::size_t>(n));
  const double scale = static_cast<double>(n + 1) / n;
  double head = 0.0;
  for (int i = 1; i < n; ++i) {
    w[i - 1] = scale / (static_cast<double>(i) * static_cast<double>(i + 1));
    head += w[i - 1];
  }
  // Last weight closes the telescoping sum exactly.
  w[n - 1] = 1.0 - head;
  return w;
}

std::vector<double> reweight(std::span<const double> weights,
                             std::span<const PriceVector> iterates,
                             const GradientEstimate& g, double epsilon) {
  if (weights.size() != iterates.size()) throw ConfigError("reweight: size mismatch");
  const std::size_t n = weights.size();
  std::vector<double> score(n);
  for (std::size_t i = 0; i < n; ++i) {
    score[i] = epsilon * vec::dot(g.g, iterates[i].coords());
    if (!std::isfinite(score[i])) throw ObservationError("reweight: non-finite score");
  }
  const double top = *std::max_element(score.begin(), score.end());
  std::vector<double> out(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = weights[i] * std::exp(score[i] - top);
    total += out[i];
  }
  if (!(total > 0.0) || !std::isfinite(total))
    throw InvariantViolation("reweight: weight normalization overflowed");
  bool floored = false;
  for (auto& w : out) {
    w /= total;
    if (w < kWeightFloor) {
      w = kWeightFloor;
      floored = true;
    }
  }
  if (floored) {
    double s = 0.0;
    for (double w : out) s += w;
    for (auto& w : out) w /= s;
  }
  return out;
}

PriceVector aggregate(std::span<const double> weights, std::span<const PriceVector> iterates) {
  if (weights.empty() || weights.size() != iterates.size())
    throw ConfigError("aggregate: size mismatch");
  const std::size_t d = iterates.front().size();
  PriceVector x(d);
  for (std::size_t j = 0; j < d; ++j) x[j] = weights[0] * iterates[0][j];
  for (std::size_t i = 1; i < weights.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) x[j] += weights[i] * iterates[i][j];
  return x;
}

std::vector<PriceVector> ExpertPool::iterates() const {
  std::vector<PriceVector> xs;
  xs.reserve(experts.size());
  for (const auto& e : experts) xs.push_back(e.iterate());
  return xs;
}

PriceVector ExpertPool::aggregate() const {
  const auto xs = iterates();
  return driftprice::aggregate(weights, xs);
}

void ExpertPool::reweight(const GradientEstimate& g) {
  const auto xs = iterates();
  weights = driftprice::reweight(weights, xs, g, epsilon);
}

int theorem2_expert_count(int horizon) {
  if (horizon < 1) throw ParameterError("horizon must be >= 1");
  // m = ceil(T^{2/3}) is the smallest m with m^3 >= T^2.
  const long long t2 = static_cast<long long>(horizon) * horizon;
  long long m = static_cast<long long>(std::floor(std::cbrt(static_cast<double>(t2))));
  while (m > 1 && (m - 1) * (m - 1) * (m - 1) >= t2) --m;
  while (m * m * m < t2) ++m;
  int k = 0;
  while ((1LL << k) < m) ++k;
  return k + 1;
}

Theorem2Defaults theorem2_defaults(const ProblemConstants& c, std::size_t d, int horizon,
                                   double delta) {
  if (horizon < 14) throw ParameterError("theorem2 mode requires T >= 14");
  if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("theorem2 mode requires delta in (0, 1)");
  c.validate();
  if (!(c.sigma_xi > 0.0)) throw ParameterError("theorem2 mode requires sigma_xi > 0");
  if (2.0 * c.B_r * std::sqrt(static_cast<double>(horizon)) > c.sigma_xi) {
    std::ostringstream os;
    os << "theory precondition 2 B_r sqrt(T) <= sigma_xi fails (" << 2.0 * c.B_r * std::sqrt(horizon)
       << " > " << c.sigma_xi << ")";
    warn(os.str());
  }
  Theorem2Defaults out;
  out.n = theorem2_expert_count(horizon);
  const double denom_core = 2.0 * c.C_1 * c.C_1 * std::pow(delta, 2.0 * c.p) +
                            c.C_2 * std::pow(delta, -c.q) + 2.0 * c.C_r;
  for (int i = 1; i <= out.n; ++i) {
    const int tau = 1 << (i - 1);
    out.taus.push_back(tau);
    out.etas.push_back(std::sqrt(2.0 * c.alpha * c.B / (denom_core * tau)));
  }
  out.epsilon = delta / (c.B_v * c.sigma_xi * std::sqrt(static_cast<double>(d) * horizon));
  return out;
}

MetaHedgePolicy::MetaHedgePolicy(const BoxDomain& query_box, int horizon, const MetaConfig& meta,
                                 const LearnerConfig& cfg, std::uint64_t seed)
    : horizon_(horizon), cfg_(cfg), query_box_(query_box), rng_(make_stream(seed, StreamTag::kPolicy)) {
  if (meta.taus.empty()) throw ConfigError("meta layer needs at least one expert");
  if (!meta.etas.empty() && meta.etas.size() != meta.taus.size())
    throw ConfigError("meta layer: etas and taus differ in length");
  if (!(meta.epsilon >= 0.0)) throw ParameterError("meta learning rate must be >= 0");
  if (cfg.schedule != ScheduleMode::kFixed)
    throw ConfigError("meta layer experts use fixed per-expert step sizes");
  if (!(cfg.feedback_scale > 0.0)) throw ParameterError("feedback_scale must be > 0");
  pool_.epsilon = meta.epsilon;
  pool_.weights = init_weights(static_cast<int>(meta.taus.size()));
  for (std::size_t i = 0; i < meta.taus.size(); ++i) {
    LearnerConfig expert_cfg = cfg;
    if (!meta.etas.empty()) expert_cfg.eta = meta.etas[i];
    pool_.experts.emplace_back(RestartSchedule(meta.taus[i], horizon), expert_cfg, query_box);
  }
}

PriceVector MetaHedgePolicy::propose(int) {
  aggregate_ = pool_.aggregate();
  pair_ = sample_perturbation(cfg_.scheme, aggregate_.size(), rng_);
  LearnerState posting;
  posting.x = aggregate_;
  posting.delta = cfg_.delta;
  if (!theta().contains(aggregate_, 1e-9))
    throw InvariantViolation("aggregate iterate left the decision box");
  auto price = propose_price(posting, pair_);
  if (!query_box_.contains(price, 1e-12))
    throw InvariantViolation("posted price left the query box");
  return price;
}

void MetaHedgePolicy::observe(int t, double feedback) {
  if (t >= horizon_) {
    for (auto& e : pool_.experts) e.advance(nullptr);
    return;
  }
  const auto g = one_point_gradient(feedback / cfg_.feedback_scale, pair_, cfg_.delta);
  const auto before = pool_.iterates();
  for (auto& e : pool_.experts) e.advance(e.updates_this_period() ? &g : nullptr);
  pool_.weights = driftprice::reweight(pool_.weights, before, g, pool_.epsilon);
}

std::vector<int> doubling_epochs(int horizon) {
  std::vector<int> out;
  int remaining = horizon;
  for (int k = 1; remaining > 0; ++k) {
    const int len = std::min(remaining, 1 << k);
    out.push_back(len);
    remaining -= len;
  }
  return out;
}

DoublingPolicy::DoublingPolicy(EpochPolicyFactory factory) : factory_(std::move(factory)) {}

PriceVector DoublingPolicy::propose(int) {
  if (!inner_ || local_t_ == epoch_horizon_) {
    ++epoch_;
    epoch_horizon_ = 1 << epoch_;
    inner_ = factory_(epoch_horizon_, epoch_);
    local_t_ = 0;
    consumed_.push_back(0);
  }
  ++local_t_;
  ++consumed_.back();
  return inner_->propose(local_t_);
}

void DoublingPolicy::observe(int, double feedback) { inner_->observe(local_t_, feedback); }

std::optional<PriceVector> DoublingPolicy::iterate() const {
  return inner_ ? inner_->iterate() : std::nullopt;
}

RunTrace doubling_wrapper(const EpochPolicyFactory& factory, Environment& env) {
  DoublingPolicy policy(factory);
  auto trace = run_policy(env, policy, env.horizon());
  trace.policy = "doubling";
  return trace;
}

}  // namespace driftprice
