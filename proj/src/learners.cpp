#include "driftprice/learners.hpp"

#include "driftprice/errors.hpp"

namespace driftprice {

namespace {

MirrorAscentLearner build_single_run(const BoxDomain& query_box, int horizon,
                                     const LearnerConfig& cfg) {
  const auto steps = resolve_step_sizes(cfg, query_box.dim(), horizon, query_box);
  auto theta = make_decision_box(query_box, cfg.scheme, steps.delta);
  LearnerState state;
  state.x = cfg.init.value_or(theta.center());
  state.eta = steps.eta;
  state.delta = steps.delta;
  state.t_in_batch = 1;
  state.tau = horizon;
  return MirrorAscentLearner(std::move(state), cfg.regularizer, std::move(theta), query_box);
}

}  // namespace

MirrorAscentPolicy::MirrorAscentPolicy(const BoxDomain& query_box, int horizon,
                                       const LearnerConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      learner_(build_single_run(query_box, horizon, cfg)),
      rng_(make_stream(seed, StreamTag::kPolicy)) {
  if (!(cfg.feedback_scale > 0.0)) throw ParameterError("feedback_scale must be > 0");
}

PriceVector MirrorAscentPolicy::propose(int) {
  pair_ = sample_perturbation(cfg_.scheme, learner_.state().x.size(), rng_);
  return learner_.post(pair_);
}

void MirrorAscentPolicy::observe(int, double feedback) {
  if (learner_.at_terminal()) {
    learner_.finish();
    return;
  }
  learner_.update(
      one_point_gradient(feedback / cfg_.feedback_scale, pair_, learner_.state().delta));
}

}  // namespace driftprice
