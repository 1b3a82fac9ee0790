#include "driftprice/domain.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <sstream>

#include "driftprice/errors.hpp"

namespace driftprice {

namespace {
std::atomic<bool> g_warnings_enabled{true};
}

void warn(const std::string& message) {
  if (g_warnings_enabled.load()) std::cerr << "warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) { g_warnings_enabled.store(enabled); }

bool PriceVector::all_finite() const {
  return std::all_of(coords_.begin(), coords_.end(),
                     [](double v) { return std::isfinite(v); });
}

BoxDomain::BoxDomain(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size())
    throw ConfigError("box bounds have different dimensions");
  if (lower_.empty()) throw ConfigError("box must have dimension >= 1");
  for (std::size_t j = 0; j < lower_.size(); ++j) {
    if (!std::isfinite(lower_[j]) || !std::isfinite(upper_[j]) ||
        !(lower_[j] < upper_[j])) {
      std::ostringstream os;
      os << "degenerate box on axis " << j << ": [" << lower_[j] << ", "
         << upper_[j] << "]";
      throw ConfigError(os.str());
    }
  }
}

BoxDomain BoxDomain::cube(std::size_t d, double lo, double hi) {
  return BoxDomain(std::vector<double>(d, lo), std::vector<double>(d, hi));
}

PriceVector BoxDomain::center() const {
  PriceVector c(dim());
  for (std::size_t j = 0; j < dim(); ++j) c[j] = 0.5 * (lower_[j] + upper_[j]);
  return c;
}

bool BoxDomain::contains(const PriceVector& x, double tol) const {
  if (x.size() != dim()) return false;
  for (std::size_t j = 0; j < dim(); ++j) {
    if (!(x[j] >= lower_[j] - tol && x[j] <= upper_[j] + tol)) return false;
  }
  return true;
}

BoxDomain BoxDomain::shrink(double margin) const {
  std::vector<double> lo(lower_), hi(upper_);
  for (std::size_t j = 0; j < dim(); ++j) {
    lo[j] += margin;
    hi[j] -= margin;
  }
  return BoxDomain(std::move(lo), std::move(hi));
}

BoxDomain BoxDomain::expand(double margin) const { return shrink(-margin); }

bool BoxDomain::inside_with_margin(const BoxDomain& outer, double margin) const {
  if (outer.dim() != dim()) return false;
  for (std::size_t j = 0; j < dim(); ++j) {
    if (lower_[j] - margin < outer.lower_[j] || upper_[j] + margin > outer.upper_[j])
      return false;
  }
  return true;
}

void ProblemConstants::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ParameterError(std::string("constant ") + name + " must be positive");
  };
  auto nonneg = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ParameterError(std::string("constant ") + name + " must be non-negative");
  };
  positive(L, "L");
  positive(L_r, "L_r");
  positive(C_u, "C_u");
  positive(C_1, "C_1");
  positive(C_2, "C_2");
  positive(p, "p");
  positive(q, "q");
  nonneg(C_r, "C_r");
  nonneg(B_r, "B_r");
  positive(B, "B");
  positive(alpha, "alpha");
  positive(B_v, "B_v");
  nonneg(sigma_xi, "sigma_xi");
}

PriceVector project_box(const PriceVector& x, const BoxDomain& box) {
  if (x.size() != box.dim())
    throw ConfigError("project_box: dimension mismatch");
  PriceVector out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j)
    out[j] = std::clamp(x[j], box.lower()[j], box.upper()[j]);
  return out;
}

double diameter(const BoxDomain& box) {
  double s = 0.0;
  for (std::size_t j = 0; j < box.dim(); ++j) {
    const double w = box.upper()[j] - box.lower()[j];
    s += w * w;
  }
  return std::sqrt(s);
}

namespace vec {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace vec

}  // namespace driftprice
