#pragma once

#include <cstddef>
#include <utility>

#include "driftprice/domain.hpp"

namespace driftprice {

/// Per-period bookkeeping for regret accounting.
struct EnvironmentStep {
  double oracle_value = 0.0;    // r_t(x*_t)
  double feedback = 0.0;        // phi_t(x~_t) = r_t(x~_t) + xi_t
  double mean_at_posted = 0.0;  // r_t(x~_t), noise-free
};

/// A nonstationary revenue environment. Implementations own their noise
/// stream, so an environment is a deterministic state machine given its seed.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::size_t dim() const = 0;
  virtual int horizon() const = 0;

  // K: every posted price must lie here.
  virtual const BoxDomain& query_box() const = 0;
  // The region baselines search over (random policy, arm grids). Defaults to K.
  virtual const BoxDomain& feasible_box() const { return query_box(); }

  // Bounds used to min-max scale rewards into [0, 1] for discrete bandits.
  virtual std::pair<double, double> revenue_bounds() const = 0;

  // Typical revenue magnitude; learners may normalize feedback by it.
  virtual double revenue_scale() const { return 1.0; }

  virtual PriceVector oracle_price(int t) const = 0;

  // Serve one query at period t (1-based). Exactly one call per period.
  EnvironmentStep step(int t, const PriceVector& posted) {
    ++queries_;
    return do_step(t, posted);
  }

  std::size_t queries() const { return queries_; }

 protected:
  virtual EnvironmentStep do_step(int t, const PriceVector& posted) = 0;

 private:
  std::size_t queries_ = 0;
};

}  // namespace driftprice
