#include "driftprice/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "driftprice/errors.hpp"

namespace driftprice {

RandomPolicy::RandomPolicy(BoxDomain box, std::uint64_t seed)
    : box_(std::move(box)), rng_(make_stream(seed, StreamTag::kPolicy)) {}

PriceVector RandomPolicy::propose(int) {
  PriceVector x(box_.dim());
  for (std::size_t j = 0; j < box_.dim(); ++j) {
    std::uniform_real_distribution<double> u(box_.lower()[j], box_.upper()[j]);
    x[j] = u(rng_);
  }
  return x;
}

std::vector<PriceVector> grid_arms(const BoxDomain& box, int points_per_axis) {
  if (points_per_axis < 2) throw ConfigError("grid needs at least 2 points per axis");
  const std::size_t d = box.dim();
  std::size_t total = 1;
  for (std::size_t j = 0; j < d; ++j) {
    if (total > kMaxArms / static_cast<std::size_t>(points_per_axis))
      throw ConfigError("arm grid too large (more than 10^6 arms)");
    total *= static_cast<std::size_t>(points_per_axis);
  }
  std::vector<PriceVector> arms;
  arms.reserve(total);
  std::vector<int> idx(d, 0);
  const int last = points_per_axis - 1;
  for (std::size_t n = 0; n < total; ++n) {
    PriceVector x(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double lo = box.lower()[j], hi = box.upper()[j];
      x[j] = idx[j] == last ? hi : lo + (hi - lo) * idx[j] / last;
    }
    arms.push_back(std::move(x));
    for (std::size_t j = 0; j < d; ++j) {
      if (++idx[j] <= last) break;
      idx[j] = 0;
    }
  }
  return arms;
}

RewardScaler::RewardScaler(double lo_, double hi_) : lo(lo_), hi(hi_) {
  if (!(hi > lo)) throw ConfigError("reward bounds need hi > lo");
}

double RewardScaler::operator()(double revenue) const {
  return std::clamp((revenue - lo) / (hi - lo), 0.0, 1.0);
}

ArmBandit::ArmBandit(std::vector<PriceVector> arms, RewardScaler scaler)
    : arms_(std::move(arms)), scaler_(scaler) {
  if (arms_.empty()) throw ConfigError("bandit needs at least one arm");
}

PriceVector ArmBandit::propose(int t) {
  last_ = select(t);
  return arms_[last_];
}

void ArmBandit::observe(int, double feedback) { update(last_, scaler_(feedback)); }

void ArmBandit::check_arm(std::size_t arm) const {
  if (arm >= arms_.size())
    throw ConfigError("bandit update for arm " + std::to_string(arm) + " out of range");
}

namespace {

std::size_t ucb_argmax(const std::vector<double>& sums, const std::vector<int>& counts,
                       double log_term) {
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) return i;
    const double score = sums[i] / counts[i] + std::sqrt(2.0 * log_term / counts[i]);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

}  // namespace

Ucb1Policy::Ucb1Policy(std::vector<PriceVector> arms, RewardScaler scaler)
    : ArmBandit(std::move(arms), scaler), sums_(arm_count(), 0.0), counts_(arm_count(), 0) {}

std::size_t Ucb1Policy::select(int t) {
  return ucb_argmax(sums_, counts_, std::log(static_cast<double>(t)));
}

void Ucb1Policy::update(std::size_t arm, double reward) {
  check_arm(arm);
  sums_[arm] += reward;
  ++counts_[arm];
}

SlidingWindowUcbPolicy::SlidingWindowUcbPolicy(std::vector<PriceVector> arms,
                                               RewardScaler scaler, int window)
    : ArmBandit(std::move(arms), scaler),
      window_(window),
      sums_(arm_count(), 0.0),
      counts_(arm_count(), 0) {
  if (window < 1) throw ConfigError("sliding window must be >= 1");
}

std::size_t SlidingWindowUcbPolicy::select(int t) {
  const int horizon = std::min(t, window_);
  return ucb_argmax(sums_, counts_, std::log(static_cast<double>(horizon)));
}

void SlidingWindowUcbPolicy::update(std::size_t arm, double reward) {
  check_arm(arm);
  history_.emplace_back(arm, reward);
  sums_[arm] += reward;
  ++counts_[arm];
  if (history_.size() > static_cast<std::size_t>(window_)) {
    const auto [old, r] = history_.front();
    history_.pop_front();
    if (--counts_[old] == 0) {
      sums_[old] = 0.0;
    } else {
      sums_[old] -= r;
    }
  }
}

int default_sw_window(int horizon) {
  return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(horizon))));
}

Exp3Policy::Exp3Policy(std::vector<PriceVector> arms, RewardScaler scaler, double gamma,
                       std::uint64_t seed)
    : ArmBandit(std::move(arms), scaler),
      gamma_(gamma),
      log_weights_(arm_count(), 0.0),
      rng_(make_stream(seed, StreamTag::kPolicy)) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ParameterError("EXP3 gamma must be in (0, 1]");
  probs_ = probabilities();
}

std::vector<double> Exp3Policy::probabilities() const {
  const std::size_t k = arm_count();
  const double top = *std::max_element(log_weights_.begin(), log_weights_.end());
  std::vector<double> p(k);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    p[i] = std::exp(log_weights_[i] - top);
    total += p[i];
  }
  for (auto& v : p) v = (1.0 - gamma_) * v / total + gamma_ / static_cast<double>(k);
  return p;
}

std::size_t Exp3Policy::select(int) {
  probs_ = probabilities();
  std::discrete_distribution<std::size_t> draw(probs_.begin(), probs_.end());
  return draw(rng_);
}

void Exp3Policy::update(std::size_t arm, double reward) {
  check_arm(arm);
  const double estimate = reward / probs_[arm];
  log_weights_[arm] += gamma_ * estimate / static_cast<double>(arm_count());
}

double default_exp3_gamma(std::size_t arms, int horizon) {
  const double k = static_cast<double>(arms);
  if (arms < 2) return 1.0;
  return std::min(1.0, std::sqrt(k * std::log(k) / ((std::numbers::e - 1.0) * horizon)));
}

}  // namespace driftprice
