#include "driftprice/policy.hpp"

#include "driftprice/errors.hpp"

namespace driftprice {

RunTrace run_policy(Environment& env, Policy& policy, int horizon, RegretMode mode) {
  if (horizon < 1) throw ConfigError("run_policy: horizon must be >= 1");
  if (horizon > env.horizon())
    throw ConfigError("run_policy: horizon exceeds the environment's horizon");
  RunTrace trace;
  trace.rows.reserve(static_cast<std::size_t>(horizon));
  double cum = 0.0;
  for (int t = 1; t <= horizon; ++t) {
    TraceRow row;
    row.t = t;
    row.posted = policy.propose(t);
    row.iterate = policy.iterate();
    const auto step = env.step(t, row.posted);
    policy.observe(t, step.feedback);
    row.feedback = step.feedback;
    row.mean_at_posted = step.mean_at_posted;
    row.oracle_value = step.oracle_value;
    const double earned = mode == RegretMode::kMean ? step.mean_at_posted : step.feedback;
    cum += step.oracle_value - earned;
    row.cum_regret = cum;
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

}  // namespace driftprice
