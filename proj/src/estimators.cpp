#include "driftprice/estimators.hpp"

#include <cmath>
#include <string>

#include "driftprice/errors.hpp"

namespace driftprice {

EstimatorScheme parse_scheme(std::string_view name) {
  if (name == "spherical") return EstimatorScheme::kSpherical;
  if (name == "sp") return EstimatorScheme::kSimultaneousPerturbation;
  throw ConfigError("unknown estimator scheme '" + std::string(name) +
                    "' (expected spherical | sp)");
}

std::string_view scheme_name(EstimatorScheme scheme) {
  return scheme == EstimatorScheme::kSpherical ? "spherical" : "sp";
}

double coordinate_bound(EstimatorScheme) { return 1.0; }

double norm_bound(EstimatorScheme scheme, std::size_t d) {
  return scheme == EstimatorScheme::kSpherical ? 1.0 : std::sqrt(static_cast<double>(d));
}

double weight_norm_bound(EstimatorScheme scheme, std::size_t d) {
  return scheme == EstimatorScheme::kSpherical ? static_cast<double>(d)
                                               : std::sqrt(static_cast<double>(d));
}

PerturbationPair sample_perturbation(EstimatorScheme scheme, std::size_t d, Rng& rng) {
  if (d < 1) throw ConfigError("sample_perturbation: d must be >= 1");
  PerturbationPair pair;
  pair.u_tilde.resize(d);
  switch (scheme) {
    case EstimatorScheme::kSimultaneousPerturbation: {
      std::bernoulli_distribution coin(0.5);
      for (auto& u : pair.u_tilde) u = coin(rng) ? 1.0 : -1.0;
      pair.u_bar = pair.u_tilde;
      return pair;
    }
    case EstimatorScheme::kSpherical: {
      std::normal_distribution<double> gauss(0.0, 1.0);
      double n2 = 0.0;
      // A zero Gaussian vector has probability zero; redraw just in case.
      while (n2 == 0.0) {
        n2 = 0.0;
        for (auto& u : pair.u_tilde) {
          u = gauss(rng);
          n2 += u * u;
        }
      }
      const double inv = 1.0 / std::sqrt(n2);
      const double ratio = static_cast<double>(d);
      pair.u_bar.resize(d);
      for (std::size_t j = 0; j < d; ++j) {
        pair.u_tilde[j] *= inv;
        pair.u_bar[j] = ratio * pair.u_tilde[j];
      }
      return pair;
    }
  }
  throw ConfigError("sample_perturbation: unknown scheme");
}

GradientEstimate one_point_gradient(double feedback, const PerturbationPair& pair,
                                    double delta) {
  if (!(delta > 0.0)) throw ParameterError("one_point_gradient: delta must be > 0");
  if (!std::isfinite(feedback))
    throw ObservationError("one_point_gradient: non-finite feedback");
  GradientEstimate est;
  est.delta = delta;
  est.g.resize(pair.u_bar.size());
  for (std::size_t j = 0; j < pair.u_bar.size(); ++j)
    est.g[j] = feedback * pair.u_bar[j] / delta;
  return est;
}

BiasVariance empirical_bias_variance(EstimatorScheme scheme, const SmoothTestFunction& f,
                                     const PriceVector& x, double delta, long n, Rng& rng) {
  if (n < 2) throw ParameterError("empirical_bias_variance: n must be >= 2");
  const std::size_t d = x.size();
  std::vector<double> mean(d, 0.0), m2(d, 0.0);
  PriceVector query(d);
  for (long k = 1; k <= n; ++k) {
    const auto pair = sample_perturbation(scheme, d, rng);
    for (std::size_t j = 0; j < d; ++j) query[j] = x[j] + delta * pair.u_tilde[j];
    const auto est = one_point_gradient(f.value(query), pair, delta);
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = est.g[j] - mean[j];
      mean[j] += diff / static_cast<double>(k);
      m2[j] += diff * (est.g[j] - mean[j]);
    }
  }
  const auto grad = f.gradient(x);
  BiasVariance out;
  out.bias_norm = vec::distance(mean, grad);
  for (double v : m2) out.variance += v / static_cast<double>(n);
  return out;
}

}  // namespace driftprice
