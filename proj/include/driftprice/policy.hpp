#pragma once

#include <optional>
#include <string>
#include <vector>

#include "driftprice/domain.hpp"
#include "driftprice/environment.hpp"

namespace driftprice {

/// A pricing policy under one-point feedback: one posted price per period,
/// one scalar revenue observation back. New policies (GP-UCB, HOO, ...) plug
/// in by implementing this interface.
class Policy {
 public:
  virtual ~Policy() = default;

  // Posted price for period t (1-based, called in order).
  virtual PriceVector propose(int t) = 0;

  // Revenue observed for the price posted in period t.
  virtual void observe(int t, double feedback) = 0;

  // The un-perturbed iterate behind the last proposal, when the policy has one.
  virtual std::optional<PriceVector> iterate() const { return std::nullopt; }
};

struct TraceRow {
  int t = 0;
  PriceVector posted;
  std::optional<PriceVector> iterate;
  double feedback = 0.0;
  double mean_at_posted = 0.0;
  double oracle_value = 0.0;
  double cum_regret = 0.0;
};

enum class RegretMode { kMean, kRealized };

struct RunTrace {
  std::string policy;
  std::string environment;
  unsigned long long seed = 0;
  std::vector<TraceRow> rows;

  double final_regret() const { return rows.empty() ? 0.0 : rows.back().cum_regret; }
};

/// Drive `policy` against `env` for `horizon` periods. Cumulative regret is
/// charged at the posted price, against the noise-free mean by default.
RunTrace run_policy(Environment& env, Policy& policy, int horizon,
                    RegretMode mode = RegretMode::kMean);

}  // namespace driftprice
