#include "driftprice/mirror_ascent.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "driftprice/errors.hpp"

namespace driftprice {

double Regularizer::psi(const PriceVector& x) const {
  return 0.5 * vec::dot(x.coords(), x.coords());
}

double Regularizer::bregman(const PriceVector& x, const PriceVector& y) const {
  // Euclidean: psi(x) - psi(y) - y^T (x - y) = ||x - y||^2 / 2
  const double dist = vec::distance(x.coords(), y.coords());
  return 0.5 * dist * dist;
}

RegularizerKind parse_regularizer(std::string_view name) {
  if (name == "euclidean") return RegularizerKind::kEuclidean;
  throw ConfigError("unknown regularizer '" + std::string(name) + "' (expected euclidean)");
}

PriceVector propose_price(const LearnerState& state, const PerturbationPair& pair) {
  if (pair.u_tilde.size() != state.x.size())
    throw ConfigError("propose_price: perturbation dimension mismatch");
  PriceVector out(state.x.size());
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = state.x[j] + state.delta * pair.u_tilde[j];
  return out;
}

double proximal_objective(const PriceVector& x, const LearnerState& state,
                          const GradientEstimate& g, const Regularizer& reg) {
  return state.eta * vec::dot(g.g, x.coords()) - reg.bregman(x, state.x);
}

LearnerState mirror_step(const LearnerState& state, const GradientEstimate& g,
                         const Regularizer& reg, const BoxDomain& theta) {
  if (state.t_in_batch >= state.tau)
    throw SequencingError("mirror_step called at the terminal period of the batch");
  if (g.g.size() != state.x.size())
    throw ConfigError("mirror_step: gradient dimension mismatch");
  if (reg.kind != RegularizerKind::kEuclidean)
    throw ConfigError("mirror_step: unsupported regularizer");
  PriceVector moved(state.x.size());
  for (std::size_t j = 0; j < moved.size(); ++j) moved[j] = state.x[j] + state.eta * g.g[j];
  LearnerState next = state;
  next.x = project_box(moved, theta);
  next.t_in_batch += 1;
  return next;
}

StepSizes static_schedule(const ProblemConstants& c, std::size_t d, int tau) {
  if (tau < 1) throw ParameterError("static_schedule: tau must be >= 1");
  c.validate();
  const double p_hat = std::min(c.p, 2.0);
  const double q = c.q;
  const double c_hat = std::max(c.C_1 * std::sqrt(static_cast<double>(d)), c.L * c.C_u / 2.0);
  const double e = 2.0 * p_hat + q;
  const double t = static_cast<double>(tau);
  StepSizes out;
  out.eta = std::sqrt(2.0) * std::pow(c.alpha / c.C_2, p_hat / e) *
            std::pow(q / (p_hat * c_hat), q / e) * std::pow(c.B, (p_hat + q) / e) *
            std::pow(t, -(p_hat + q) / e);
  out.delta = std::pow(c.C_2 * c.B / (2.0 * c.alpha), 1.0 / e) *
              std::pow(q / (c_hat * p_hat), 2.0 / e) * std::pow(t, -1.0 / e);
  return out;
}

ScheduleMode parse_schedule(std::string_view name) {
  if (name == "fixed") return ScheduleMode::kFixed;
  if (name == "corollary1") return ScheduleMode::kCorollary1;
  throw ConfigError("unknown schedule '" + std::string(name) + "' (expected fixed | corollary1)");
}

StepSizes resolve_step_sizes(const LearnerConfig& cfg, std::size_t d, int tau,
                             const BoxDomain& query_box) {
  if (cfg.schedule == ScheduleMode::kFixed) {
    if (!(cfg.eta > 0.0)) throw ParameterError("eta must be > 0");
    if (!(cfg.delta >= 0.0)) throw ParameterError("delta must be >= 0");
    return {cfg.eta, cfg.delta};
  }
  StepSizes s = static_schedule(cfg.constants, d, tau);
  double half_width = 0.5 * (query_box.upper()[0] - query_box.lower()[0]);
  for (std::size_t j = 1; j < query_box.dim(); ++j)
    half_width = std::min(half_width, 0.5 * (query_box.upper()[j] - query_box.lower()[j]));
  const double cap = 0.99 * std::min(1.0, half_width / coordinate_bound(cfg.scheme));
  if (s.delta >= cap) {
    std::ostringstream os;
    os << "closed-form delta " << s.delta << " for tau=" << tau << " clamped to " << cap;
    warn(os.str());
    s.delta = cap;
  }
  return s;
}

BoxDomain make_decision_box(const BoxDomain& query_box, EstimatorScheme scheme,
                            double delta_max) {
  return query_box.shrink(delta_max * coordinate_bound(scheme));
}

MirrorAscentLearner::MirrorAscentLearner(LearnerState initial, Regularizer reg,
                                         BoxDomain theta, BoxDomain query_box)
    : state_(std::move(initial)),
      reg_(reg),
      theta_(std::move(theta)),
      query_box_(std::move(query_box)) {
  if (state_.tau < 1) throw ParameterError("learner horizon must be >= 1");
  if (!theta_.contains(state_.x))
    throw ConfigError("initial point lies outside the decision box");
  if (!theta_.inside_with_margin(query_box_, state_.delta * (1.0 - 1e-12)))
    throw ConfigError("decision box plus perturbation radius exceeds the query box");
}

PriceVector MirrorAscentLearner::post(const PerturbationPair& pair) const {
  auto price = propose_price(state_, pair);
  if (!query_box_.contains(price, 1e-12))
    throw InvariantViolation("posted price left the query box");
  return price;
}

void MirrorAscentLearner::update(const GradientEstimate& g) {
  if (finished_) throw SequencingError("learner already finished its horizon");
  state_ = mirror_step(state_, g, reg_, theta_);
}

void MirrorAscentLearner::finish() {
  if (!at_terminal()) throw SequencingError("finish() before the terminal period");
  finished_ = true;
}

}  // namespace driftprice
