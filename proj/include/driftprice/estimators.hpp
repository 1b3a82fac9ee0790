#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "driftprice/domain.hpp"
#include "driftprice/random.hpp"

namespace driftprice {

/// One-point gradient estimator family.
///
///  - kSpherical: U~ uniform on the unit sphere, U- = d * U~ (unit-ball
///    smoothing; outward normal at U~ is U~ and vol(S)/vol(B) = d).
///  - kSimultaneousPerturbation: Rademacher U~, U- = U~.
///
/// Both satisfy E[U~] = 0 and E[U- U~^T] = I.
enum class EstimatorScheme { kSpherical, kSimultaneousPerturbation };

// "spherical" | "sp"; throws ConfigError otherwise.
EstimatorScheme parse_scheme(std::string_view name);
std::string_view scheme_name(EstimatorScheme scheme);

/// Largest |U~_j| any draw can produce. The query perturbation delta * U~ moves
/// each coordinate by at most delta times this, which is the margin Theta needs
/// inside a box K.
double coordinate_bound(EstimatorScheme scheme);

/// Largest ||U~|| any draw can produce (sqrt(d) for SP, 1 for spherical).
double norm_bound(EstimatorScheme scheme, std::size_t d);

/// Largest ||U-|| (the B_v constant).
double weight_norm_bound(EstimatorScheme scheme, std::size_t d);

struct PerturbationPair {
  std::vector<double> u_tilde;
  std::vector<double> u_bar;
};

struct GradientEstimate {
  std::vector<double> g;
  double delta = 0.0;
};

PerturbationPair sample_perturbation(EstimatorScheme scheme, std::size_t d, Rng& rng);

/// G = feedback * U- / delta.
GradientEstimate one_point_gradient(double feedback, const PerturbationPair& pair,
                                    double delta);

struct SmoothTestFunction {
  std::function<double(const PriceVector&)> value;
  std::function<std::vector<double>(const PriceVector&)> gradient;
};

struct BiasVariance {
  double bias_norm = 0.0;
  double variance = 0.0;
};

/// Monte-Carlo diagnostic of the estimator's bias and variance at x with exact
/// (noise-free) feedback f(x + delta U~). bias_norm = ||mean G - grad f(x)||,
/// variance = mean ||G - mean G||^2.
BiasVariance empirical_bias_variance(EstimatorScheme scheme, const SmoothTestFunction& f,
                                     const PriceVector& x, double delta, long n, Rng& rng);

}  // namespace driftprice
