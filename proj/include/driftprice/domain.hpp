#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace driftprice {

/// A point in R^d, measured in price units.
class PriceVector {
 public:
  PriceVector() = default;
  explicit PriceVector(std::size_t d, double fill = 0.0) : coords_(d, fill) {}
  explicit PriceVector(std::vector<double> coords) : coords_(std::move(coords)) {}
  PriceVector(std::initializer_list<double> coords) : coords_(coords) {}

  std::size_t size() const { return coords_.size(); }
  double& operator[](std::size_t j) { return coords_[j]; }
  double operator[](std::size_t j) const { return coords_[j]; }

  std::span<const double> coords() const { return coords_; }
  const std::vector<double>& vec() const { return coords_; }

  auto begin() const { return coords_.begin(); }
  auto end() const { return coords_.end(); }

  bool all_finite() const;

  friend bool operator==(const PriceVector&, const PriceVector&) = default;

 private:
  std::vector<double> coords_;
};

/// Axis-aligned box with non-empty interior. Used for both the query set K
/// and the decision set Theta (strictly inside K).
class BoxDomain {
 public:
  BoxDomain() = default;
  // Throws ConfigError on dimension mismatch or lower[j] >= upper[j].
  BoxDomain(std::vector<double> lower, std::vector<double> upper);

  static BoxDomain cube(std::size_t d, double lo, double hi);

  std::size_t dim() const { return lower_.size(); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }

  PriceVector center() const;
  bool contains(const PriceVector& x, double tol = 0.0) const;

  // Box shrunk inward by `margin` on every face. Throws ConfigError if the
  // result would have empty interior.
  BoxDomain shrink(double margin) const;
  BoxDomain expand(double margin) const;

  // True if this box grown by `margin` on every face still lies inside `outer`.
  bool inside_with_margin(const BoxDomain& outer, double margin) const;

  friend bool operator==(const BoxDomain&, const BoxDomain&) = default;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

struct RevenueObservation {
  PriceVector posted;
  double feedback = 0.0;
  int period = 1;
};

/// Problem- and estimator-dependent constants that drive the theory-facing
/// parameter schedules. Defaults describe a unit-scale smooth problem with
/// the spherical estimator (p = q = 2).
struct ProblemConstants {
  double L = 1.0;        // gradient Lipschitz constant
  double L_r = 1.0;      // function Lipschitz constant
  double C_u = 1.0;      // second-moment bound of the query perturbation
  double C_1 = 1.0;      // bias constant
  double C_2 = 1.0;      // variance constant
  double p = 2.0;        // bias exponent
  double q = 2.0;        // variance exponent
  double C_r = 0.0;      // sup of squared gradient norm
  double B_r = 0.0;      // sup of |r_t|
  double B = 1.0;        // Bregman diameter of Theta
  double alpha = 1.0;    // strong convexity of the regularizer
  double B_v = 1.0;      // bound on the weighting vector norm
  double sigma_xi = 0.0; // sub-Gaussian noise level

  // Throws ParameterError when a field violates its sign constraint.
  void validate() const;
};

/// Euclidean projection onto the box (componentwise clamp).
PriceVector project_box(const PriceVector& x, const BoxDomain& box);

/// Euclidean length of the box diagonal.
double diameter(const BoxDomain& box);

namespace vec {

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double distance(std::span<const double> a, std::span<const double> b);

}  // namespace vec

}  // namespace driftprice
