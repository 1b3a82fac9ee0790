#pragma once

#include <optional>
#include <string_view>

#include "driftprice/domain.hpp"
#include "driftprice/estimators.hpp"

namespace driftprice {

enum class RegularizerKind { kEuclidean };

/// Mirror map psi with strong-convexity modulus alpha. Only the Euclidean map
/// psi(x) = ||x||^2 / 2 (alpha = 1) is provided; with it the mirror step is a
/// projected gradient step.
struct Regularizer {
  RegularizerKind kind = RegularizerKind::kEuclidean;
  double alpha = 1.0;

  double psi(const PriceVector& x) const;
  // B_psi(x, y) = psi(x) - psi(y) - grad psi(y)^T (x - y)
  double bregman(const PriceVector& x, const PriceVector& y) const;
};

RegularizerKind parse_regularizer(std::string_view name);

struct LearnerState {
  PriceVector x;      // current iterate, always inside Theta
  double eta = 0.0;   // step size
  double delta = 0.0; // perturbation radius
  int t_in_batch = 1; // 1-based period within the current run/batch
  int tau = 1;        // horizon of the current run/batch
};

/// x + delta * U~.
PriceVector propose_price(const LearnerState& state, const PerturbationPair& pair);

/// Objective maximized by the mirror step: eta g^T x - B_psi(x, x_t).
double proximal_objective(const PriceVector& x, const LearnerState& state,
                          const GradientEstimate& g, const Regularizer& reg);

/// One mirror-ascent step over Theta. Throws SequencingError at the terminal
/// period of the batch, where the gradient is defined to be zero and no step
/// is taken.
LearnerState mirror_step(const LearnerState& state, const GradientEstimate& g,
                         const Regularizer& reg, const BoxDomain& theta);

struct StepSizes {
  double eta = 0.0;
  double delta = 0.0;
};

/// Closed-form (eta, delta) minimizing the dominant static-regret terms for a
/// run of length tau, with C^ = max(C_1 sqrt(d), L C_u / 2) and p^ = min(p, 2).
StepSizes static_schedule(const ProblemConstants& constants, std::size_t d, int tau);

enum class ScheduleMode { kFixed, kCorollary1 };

ScheduleMode parse_schedule(std::string_view name);

/// Everything a base learner needs besides the geometry.
struct LearnerConfig {
  EstimatorScheme scheme = EstimatorScheme::kSpherical;
  ScheduleMode schedule = ScheduleMode::kFixed;
  double eta = 0.01;
  double delta = 0.1;
  ProblemConstants constants;
  Regularizer regularizer;
  std::optional<PriceVector> init;  // defaults to the center of Theta
  double feedback_scale = 1.0;      // observed revenue is divided by this
};

/// (eta, delta) to use for a run/batch of length tau. In corollary1 mode the
/// closed-form delta is capped below 1 and below what K can accommodate.
StepSizes resolve_step_sizes(const LearnerConfig& cfg, std::size_t d, int tau,
                             const BoxDomain& query_box);

/// Theta = K shrunk by delta_max * max|U~_j|, so every query x + delta U~
/// with x in Theta stays in K.
BoxDomain make_decision_box(const BoxDomain& query_box, EstimatorScheme scheme,
                            double delta_max);

/// One-point mirror ascent over a horizon of `state.tau` periods.
class MirrorAscentLearner {
 public:
  MirrorAscentLearner(LearnerState initial, Regularizer reg, BoxDomain theta,
                      BoxDomain query_box);

  const LearnerState& state() const { return state_; }
  const BoxDomain& theta() const { return theta_; }

  bool at_terminal() const { return state_.t_in_batch == state_.tau; }

  // Posted price for the current period; InvariantViolation if it leaves K.
  PriceVector post(const PerturbationPair& pair) const;

  // Mirror step with the given gradient (not allowed at the terminal period).
  void update(const GradientEstimate& g);

  // Advance past the terminal period without an update.
  void finish();

 private:
  LearnerState state_;
  Regularizer reg_;
  BoxDomain theta_;
  BoxDomain query_box_;
  bool finished_ = false;
};

}  // namespace driftprice
