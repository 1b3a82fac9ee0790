#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "driftprice/environment.hpp"
#include "driftprice/mirror_ascent.hpp"
#include "driftprice/policy.hpp"
#include "driftprice/random.hpp"

namespace driftprice {

/// Partition of periods 1..T into ceil(T / tau) consecutive batches; all have
/// length tau except possibly the last.
class RestartSchedule {
 public:
  RestartSchedule(int tau, int horizon);

  int tau() const { return tau_; }
  int horizon() const { return horizon_; }
  int batch_count() const { return batch_count_; }

  int batch_of(int t) const;          // 1-based batch index of period t
  int batch_start(int b) const;       // first period of batch b
  int batch_length(int b) const;
  bool is_batch_start(int t) const;
  bool is_batch_terminal(int t) const;

 private:
  int tau_;
  int horizon_;
  int batch_count_;
};

struct VariationBudget {
  double v_t = 0.0;

  // Clamped into [sqrt(d), sqrt(d) T] with a warning when outside.
  VariationBudget normalized(std::size_t d, int horizon) const;
};

/// Batch size ceil((sqrt(d) T / V_T)^((2p^+q)/(3p^+q))) for a known budget.
int corollary2_tau(const ProblemConstants& constants, std::size_t d, int horizon,
                   VariationBudget v);

/// Restarting mirror ascent without its own query logic: a state
/// machine driven one period at a time. Used standalone (RestartingPolicy)
/// and as an expert inside the meta layer.
class RestartingLearner {
 public:
  RestartingLearner(RestartSchedule schedule, const LearnerConfig& cfg,
                    const BoxDomain& query_box);

  int period() const { return period_; }
  const RestartSchedule& schedule() const { return schedule_; }
  const BoxDomain& theta() const { return theta_; }
  const PriceVector& init_point() const { return init_; }

  const PriceVector& iterate() const { return learner_->state().x; }
  double delta() const { return learner_->state().delta; }
  double eta() const { return learner_->state().eta; }

  // True if the current period performs a mirror step (i.e. it is neither a
  // batch-terminal period nor the last period of the horizon).
  bool updates_this_period() const;

  PriceVector post(const PerturbationPair& pair) const { return learner_->post(pair); }

  // Consume the current period. `g` may be null when no update happens.
  void advance(const GradientEstimate* g);

 private:
  void start_batch(int b);

  RestartSchedule schedule_;
  LearnerConfig cfg_;
  BoxDomain query_box_;
  BoxDomain theta_;
  PriceVector init_;
  std::vector<StepSizes> batch_steps_;  // [full batch, final batch]
  std::optional<MirrorAscentLearner> learner_;
  int period_ = 1;
};

/// Restarting mirror ascent as a pricing policy.
class RestartingPolicy : public Policy {
 public:
  RestartingPolicy(const BoxDomain& query_box, RestartSchedule schedule,
                   const LearnerConfig& cfg, std::uint64_t seed);

  PriceVector propose(int t) override;
  void observe(int t, double feedback) override;
  std::optional<PriceVector> iterate() const override { return learner_.iterate(); }

  const RestartingLearner& learner() const { return learner_; }

 private:
  LearnerConfig cfg_;
  RestartingLearner learner_;
  Rng rng_;
  PerturbationPair pair_;
};

RunTrace run_restarting(Environment& env, const RestartSchedule& schedule,
                        const LearnerConfig& cfg, std::uint64_t seed);

}  // namespace driftprice
