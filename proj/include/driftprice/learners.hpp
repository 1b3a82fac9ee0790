#pragma once

#include <cstdint>

#include "driftprice/mirror_ascent.hpp"
#include "driftprice/policy.hpp"
#include "driftprice/random.hpp"

namespace driftprice {

/// Single-run pricing policy: one run of one-point mirror ascent
/// over the whole horizon.
class MirrorAscentPolicy : public Policy {
 public:
  MirrorAscentPolicy(const BoxDomain& query_box, int horizon, const LearnerConfig& cfg,
                     std::uint64_t seed);

  PriceVector propose(int t) override;
  void observe(int t, double feedback) override;
  std::optional<PriceVector> iterate() const override { return learner_.state().x; }

  const MirrorAscentLearner& learner() const { return learner_; }

 private:
  LearnerConfig cfg_;
  MirrorAscentLearner learner_;
  Rng rng_;
  PerturbationPair pair_;
};

}  // namespace driftprice
