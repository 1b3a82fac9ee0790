#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "driftprice/policy.hpp"
#include "driftprice/restarting.hpp"

namespace driftprice {

inline constexpr double kWeightFloor = 1e-300;

/// w_1^(i) = (N + 1) / N * 1 / (i (i + 1)), i = 1..N. Sums to one.
std::vector<double> init_weights(int n);

/// Exponential reweighting w'_i ~ w_i exp(epsilon g^T x_i), evaluated with the
/// max exponent subtracted and floored at kWeightFloor.
std::vector<double> reweight(std::span<const double> weights,
                             std::span<const PriceVector> iterates,
                             const GradientEstimate& g, double epsilon);

/// Weighted combination sum_i w_i x_i.
PriceVector aggregate(std::span<const double> weights, std::span<const PriceVector> iterates);

/// N restarting experts sharing one query and one gradient per period.
struct ExpertPool {
  std::vector<RestartingLearner> experts;
  std::vector<double> weights;
  double epsilon = 0.5;

  std::vector<PriceVector> iterates() const;
  PriceVector aggregate() const;
  void reweight(const GradientEstimate& g);
};

struct MetaConfig {
  std::vector<int> taus;
  std::vector<double> etas;  // per expert; empty means the learner's fixed eta
  double epsilon = 0.5;
};

struct Theorem2Defaults {
  int n = 0;
  std::vector<int> taus;
  std::vector<double> etas;
  double epsilon = 0.0;
};

/// N = ceil(log2 ceil(T^{2/3})) + 1, tau_i = 2^{i-1},
/// eta_i = sqrt(2 alpha B / ((2 C_1^2 delta^{2p} + C_2 delta^{-q} + 2 C_r) tau_i)),
/// epsilon = delta / (B_v sigma_xi sqrt(d T)).
/// Requires T >= 14 and delta in (0, 1); warns when 2 B_r sqrt(T) > sigma_xi.
Theorem2Defaults theorem2_defaults(const ProblemConstants& constants, std::size_t d,
                                   int horizon, double delta);

/// ceil(log2 ceil(T^{2/3})) + 1 in exact integer arithmetic.
int theorem2_expert_count(int horizon);

/// Expert-weighting meta layer over restarting learners. Posts
/// x_t + delta U~ for the aggregate x_t, builds one gradient from the single
/// observation, feeds it to every expert and reweights.
class MetaHedgePolicy : public Policy {
 public:
  MetaHedgePolicy(const BoxDomain& query_box, int horizon, const MetaConfig& meta,
                  const LearnerConfig& cfg, std::uint64_t seed);

  PriceVector propose(int t) override;
  void observe(int t, double feedback) override;
  std::optional<PriceVector> iterate() const override { return aggregate_; }

  const ExpertPool& pool() const { return pool_; }
  const BoxDomain& theta() const { return pool_.experts.front().theta(); }

 private:
  int horizon_;
  LearnerConfig cfg_;
  BoxDomain query_box_;
  ExpertPool pool_;
  Rng rng_;
  PerturbationPair pair_;
  PriceVector aggregate_;
};

/// Epoch lengths of the doubling trick: 2, 4, 8, ... truncated to sum to T.
std::vector<int> doubling_epochs(int horizon);

/// Builds a fresh known-horizon policy for epoch k (1-based) of length 2^k.
using EpochPolicyFactory = std::function<std::unique_ptr<Policy>(int epoch_horizon, int epoch)>;

/// Anytime wrapper: restarts a fresh inner policy with doubled horizon guesses
/// (2, 4, 8, ...) without ever being told the true horizon.
class DoublingPolicy : public Policy {
 public:
  explicit DoublingPolicy(EpochPolicyFactory factory);

  PriceVector propose(int t) override;
  void observe(int t, double feedback) override;
  std::optional<PriceVector> iterate() const override;

  // Periods actually consumed by each epoch so far.
  const std::vector<int>& epoch_lengths() const { return consumed_; }

 private:
  EpochPolicyFactory factory_;
  std::unique_ptr<Policy> inner_;
  int epoch_ = 0;
  int epoch_horizon_ = 0;
  int local_t_ = 0;
  std::vector<int> consumed_;
};

RunTrace doubling_wrapper(const EpochPolicyFactory& factory, Environment& env);

}  // namespace driftprice
