#pragma once

// Generalised Pareto distribution for threshold excesses:
//
//   H(y; sigma, xi) = 1 - (1 + xi * y / sigma)_+^(-1/xi),   y >= 0,
//
// with the exponential distribution as the xi -> 0 limit.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "eqd/errors.hpp"
#include "eqd/rng.hpp"

namespace eqd {

/// Below this |xi| the exponential-limit formulas are used.
inline constexpr double kSmallShape = 1e-8;

/// Scale/shape pair of a GPD. Scale is strictly positive, shape finite.
class GpdParams {
 public:
  GpdParams(double scale, double shape) : scale_(scale), shape_(shape) {
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw InputError("GPD scale must be positive and finite, got " + std::to_string(scale));
    if (!std::isfinite(shape))
      throw InputError("GPD shape must be finite");
  }

  double scale() const { return scale_; }
  double shape() const { return shape_; }

  bool exponential() const { return std::abs(shape_) < kSmallShape; }

  /// Upper end of the support; +inf unless shape < 0.
  double upper_endpoint() const {
    return shape_ < 0.0 && !exponential() ? -scale_ / shape_
                                          : std::numeric_limits<double>::infinity();
  }

  friend bool operator==(const GpdParams&, const GpdParams&) = default;

 private:
  double scale_;
  double shape_;
};

namespace detail {

inline void require_nonnegative(double y) {
  if (!(y >= 0.0)) throw InputError("GPD argument must be non-negative");
}

/// -log(1 - H(y)), the cumulative hazard. +inf beyond the upper endpoint.
inline double cumulative_hazard(double y, const GpdParams& p) {
  if (p.exponential()) return y / p.scale();
  const double z = p.shape() * y / p.scale();
  if (z <= -1.0) return std::numeric_limits<double>::infinity();
  return std::log1p(z) / p.shape();
}

/// Quantile written in terms of log(1 - prob). Shared by gpd_quantile and the
/// EQD metric so both evaluate the model quantile identically.
inline double quantile_from_log_survival(double log_surv, const GpdParams& p) {
  if (p.exponential()) return -p.scale() * log_surv;
  return p.scale() / p.shape() * std::expm1(-p.shape() * log_surv);
}

}  // namespace detail

inline double gpd_cdf(double y, const GpdParams& p) {
  detail::require_nonnegative(y);
  return -std::expm1(-detail::cumulative_hazard(y, p));
}

/// Survivor function 1 - H(y), without the cancellation of 1 - gpd_cdf.
inline double gpd_survival(double y, const GpdParams& p) {
  detail::require_nonnegative(y);
  return std::exp(-detail::cumulative_hazard(y, p));
}

/// log h(y). Returns -inf outside the support instead of throwing, so that
/// likelihood searches can step across infeasible points.
inline double gpd_log_density(double y, const GpdParams& p) {
  detail::require_nonnegative(y);
  const double log_scale = std::log(p.scale());
  if (p.exponential()) return -log_scale - y / p.scale();
  const double xi = p.shape();
  const double z = xi * y / p.scale();
  if (z < -1.0) return -std::numeric_limits<double>::infinity();
  if (z == -1.0) {
    // Upper endpoint: the density's limit depends on the sign of 1 + 1/xi.
    if (xi > -1.0) return -std::numeric_limits<double>::infinity();
    if (xi == -1.0) return -log_scale;
    return std::numeric_limits<double>::infinity();
  }
  return -log_scale - (1.0 + 1.0 / xi) * std::log1p(z);
}

/// Inverse CDF. prob = 1 is rejected unless `allow_endpoint` is set and the
/// support is bounded, in which case the upper endpoint is returned.
inline double gpd_quantile(double prob, const GpdParams& p, bool allow_endpoint = false) {
  if (!(prob >= 0.0 && prob <= 1.0)) throw InputError("GPD quantile probability outside [0, 1]");
  if (prob == 1.0) {
    if (allow_endpoint && p.shape() < 0.0 && !p.exponential()) return p.upper_endpoint();
    throw InputError("GPD quantile at probability 1 is not available");
  }
  return detail::quantile_from_log_survival(std::log1p(-prob), p);
}

/// Inverse-CDF sampling, one uniform per draw.
inline std::vector<double> gpd_sample(std::size_t n, const GpdParams& p, Stream& rng) {
  std::vector<double> out(n);
  for (auto& y : out) y = detail::quantile_from_log_survival(std::log(rng.uniform()), p);
  return out;
}

/// Parameters of the excesses of a threshold `delta` units higher:
/// X - v | X > v ~ GPD(sigma + xi * (v - u), xi).
inline GpdParams shift_threshold(const GpdParams& p, double delta) {
  if (!(delta >= 0.0)) throw InputError("threshold shift must be non-negative");
  if (delta >= p.upper_endpoint())
    throw InputError("threshold shift reaches the upper endpoint of the GPD");
  return GpdParams(p.scale() + p.shape() * delta, p.shape());
}

}  // namespace eqd
