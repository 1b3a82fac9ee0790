#include "driftprice/restarting.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "driftprice/errors.hpp"

namespace driftprice {

RestartSchedule::RestartSchedule(int tau, int horizon) : tau_(tau), horizon_(horizon) {
  if (tau < 1) throw ParameterError("restart batch size tau must be >= 1");
  if (horizon < 1) throw ParameterError("horizon must be >= 1");
  batch_count_ = (horizon + tau - 1) / tau;
}

int RestartSchedule::batch_of(int t) const { return (t - 1) / tau_ + 1; }

int RestartSchedule::batch_start(int b) const { return (b - 1) * tau_ + 1; }

int RestartSchedule::batch_length(int b) const {
  return std::min(b * tau_, horizon_) - batch_start(b) + 1;
}

bool RestartSchedule::is_batch_start(int t) const { return (t - 1) % tau_ == 0; }

bool RestartSchedule::is_batch_terminal(int t) const {
  return t == horizon_ || t % tau_ == 0;
}

VariationBudget VariationBudget::normalized(std::size_t d, int horizon) const {
  const double lo = std::sqrt(static_cast<double>(d));
  const double hi = lo * horizon;
  if (v_t < lo || v_t > hi) {
    std::ostringstream os;
    os << "variation budget " << v_t << " outside [" << lo << ", " << hi << "], clamped";
    warn(os.str());
  }
  return VariationBudget{std::clamp(v_t, lo, hi)};
}

int corollary2_tau(const ProblemConstants& c, std::size_t d, int horizon, VariationBudget v) {
  if (horizon < 1) throw ParameterError("corollary2_tau: horizon must be >= 1");
  const auto budget = v.normalized(d, horizon);
  const double p_hat = std::min(c.p, 2.0);
  const double exponent = (2.0 * p_hat + c.q) / (3.0 * p_hat + c.q);
  const double base = std::sqrt(static_cast<double>(d)) * horizon / budget.v_t;
  const double raw = std::pow(base, exponent);
  const int tau = static_cast<int>(std::ceil(raw * (1.0 - 1e-12)));
  return std::clamp(tau, 1, horizon);
}

RestartingLearner::RestartingLearner(RestartSchedule schedule, const LearnerConfig& cfg,
                                     const BoxDomain& query_box)
    : schedule_(schedule), cfg_(cfg), query_box_(query_box) {
  const std::size_t d = query_box.dim();
  const int full = schedule_.batch_length(1);
  const int last = schedule_.batch_length(schedule_.batch_count());
  batch_steps_ = {resolve_step_sizes(cfg_, d, full, query_box_),
                  resolve_step_sizes(cfg_, d, last, query_box_)};
  const double delta_max = std::max(batch_steps_[0].delta, batch_steps_[1].delta);
  theta_ = make_decision_box(query_box_, cfg_.scheme, delta_max);
  init_ = cfg_.init.value_or(theta_.center());
  start_batch(1);
}

void RestartingLearner::start_batch(int b) {
  const auto& steps = b == schedule_.batch_count() ? batch_steps_[1] : batch_steps_[0];
  LearnerState state;
  state.x = init_;
  state.eta = steps.eta;
  state.delta = steps.delta;
  state.t_in_batch = 1;
  state.tau = schedule_.batch_length(b);
  learner_.emplace(std::move(state), cfg_.regularizer, theta_, query_box_);
}

bool RestartingLearner::updates_this_period() const { return !learner_->at_terminal(); }

void RestartingLearner::advance(const GradientEstimate* g) {
  if (period_ > schedule_.horizon())
    throw SequencingError("restarting learner advanced past its horizon");
  if (learner_->at_terminal()) {
    learner_->finish();
  } else {
    if (g == nullptr) throw SequencingError("restarting learner needs a gradient this period");
    learner_->update(*g);
  }
  ++period_;
  if (period_ <= schedule_.horizon() && schedule_.is_batch_start(period_))
    start_batch(schedule_.batch_of(period_));
}

RestartingPolicy::RestartingPolicy(const BoxDomain& query_box, RestartSchedule schedule,
                                   const LearnerConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      learner_(schedule, cfg, query_box),
      rng_(make_stream(seed, StreamTag::kPolicy)) {
  if (!(cfg.feedback_scale > 0.0)) throw ParameterError("feedback_scale must be > 0");
}

PriceVector RestartingPolicy::propose(int) {
  pair_ = sample_perturbation(cfg_.scheme, learner_.iterate().size(), rng_);
  return learner_.post(pair_);
}

void RestartingPolicy::observe(int, double feedback) {
  if (!learner_.updates_this_period()) {
    learner_.advance(nullptr);
    return;
  }
  const auto g = one_point_gradient(feedback / cfg_.feedback_scale, pair_, learner_.delta());
  learner_.advance(&g);
}

RunTrace run_restarting(Environment& env, const RestartSchedule& schedule,
                        const LearnerConfig& cfg, std::uint64_t seed) {
  if (env.horizon() != schedule.horizon())
    throw ConfigError("run_restarting: environment horizon differs from schedule horizon");
  RestartingPolicy policy(env.query_box(), schedule, cfg, seed);
  auto trace = run_policy(env, policy, schedule.horizon());
  trace.policy = "restarting";
  trace.seed = seed;
  return trace;
}

}  // namespace driftprice
