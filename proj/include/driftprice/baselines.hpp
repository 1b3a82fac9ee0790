#pragma once

#include <cstdint>
#include <deque>
#include <string_view>
#include <utility>
#include <vector>

#include "driftprice/policy.hpp"
#include "driftprice/random.hpp"

namespace driftprice {

/// Uniform draws from a box.
class RandomPolicy : public Policy {
 public:
  RandomPolicy(BoxDomain box, std::uint64_t seed);

  PriceVector propose(int t) override;
  void observe(int, double) override {}

 private:
  BoxDomain box_;
  Rng rng_;
};

inline constexpr std::size_t kMaxArms = 1'000'000;

/// Cartesian grid with `points_per_axis` levels per coordinate, corners
/// included. Arms are enumerated with the first coordinate varying fastest.
std::vector<PriceVector> grid_arms(const BoxDomain& box, int points_per_axis);

/// Min-max scaling of revenue into [0, 1] with clamping.
struct RewardScaler {
  double lo = 0.0;
  double hi = 1.0;

  RewardScaler() = default;
  RewardScaler(double lo, double hi);
  double operator()(double revenue) const;
};

/// A finite-armed bandit posting one grid arm per period.
class ArmBandit : public Policy {
 public:
  ArmBandit(std::vector<PriceVector> arms, RewardScaler scaler);

  PriceVector propose(int t) override;
  void observe(int t, double feedback) override;

  virtual std::size_t select(int t) = 0;
  // reward already scaled into [0, 1]; out-of-range arm throws ConfigError.
  virtual void update(std::size_t arm, double reward) = 0;

  std::size_t arm_count() const { return arms_.size(); }
  const std::vector<PriceVector>& arms() const { return arms_; }
  std::size_t last_arm() const { return last_; }

 protected:
  void check_arm(std::size_t arm) const;

 private:
  std::vector<PriceVector> arms_;
  RewardScaler scaler_;
  std::size_t last_ = 0;
};

/// Index mean + sqrt(2 ln t / n); unplayed arms first, ties to the lowest index.
class Ucb1Policy : public ArmBandit {
 public:
  Ucb1Policy(std::vector<PriceVector> arms, RewardScaler scaler);

  std::size_t select(int t) override;
  void update(std::size_t arm, double reward) override;

  const std::vector<double>& sums() const { return sums_; }
  const std::vector<int>& counts() const { return counts_; }

 private:
  std::vector<double> sums_;
  std::vector<int> counts_;
};

/// UCB restricted to the last `window` plays, with index
/// mean_w + sqrt(2 ln min(t, window) / n_w). A window of at least t
/// reproduces UCB1.
class SlidingWindowUcbPolicy : public ArmBandit {
 public:
  SlidingWindowUcbPolicy(std::vector<PriceVector> arms, RewardScaler scaler, int window);

  std::size_t select(int t) override;
  void update(std::size_t arm, double reward) override;

  int window() const { return window_; }

 private:
  int window_;
  std::deque<std::pair<std::size_t, double>> history_;
  std::vector<double> sums_;
  std::vector<int> counts_;
};

// ceil(sqrt(T)).
int default_sw_window(int horizon);

/// Exponential weights with uniform exploration gamma; importance-weighted
/// reward estimates.
class Exp3Policy : public ArmBandit {
 public:
  Exp3Policy(std::vector<PriceVector> arms, RewardScaler scaler, double gamma,
             std::uint64_t seed);

  std::size_t select(int t) override;
  void update(std::size_t arm, double reward) override;

  double gamma() const { return gamma_; }
  std::vector<double> probabilities() const;

 private:
  double gamma_;
  std::vector<double> log_weights_;
  std::vector<double> probs_;
  Rng rng_;
};

// min(1, sqrt(K ln K / ((e - 1) T))).
double default_exp3_gamma(std::size_t arms, int horizon);

}  // namespace driftprice
