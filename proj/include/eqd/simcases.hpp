#pragma once

// Simulation cases with a known threshold at u = 1 (Cases 0-8) and a
// standard Gaussian scenario without one.
//
//   Case 0        : 1 + GPD(0.5, 0.1), n = 1000, nothing below the threshold
//   Cases 1-3, 5-8: Uniform(0.5, 1) below, 1 + GPD(sigma, xi) above, fixed counts
//   Case 4        : GPD(0.5, 0.1) proposals kept only when above an independent
//                   Beta(1, 2) draw; counts fixed at 721 below / 279 above 1
//   Gaussian      : N(0, 1), n = 2000 (or 20000)

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include "eqd/errors.hpp"
#include "eqd/gpd.hpp"
#include "eqd/rng.hpp"

namespace eqd {

enum class CaseId { case0, case1, case2, case3, case4, case5, case6, case7, case8, gaussian };

struct CaseSpec {
  CaseId id = CaseId::case1;
  double sigma = 0.5;  // GPD scale of the generating model (Case 4: before shifting to u = 1)
  double xi = 0.1;
  std::size_t n_below = 200;
  std::size_t n_above = 1000;
  double beta_a = 1.0;  // Case 4 rejection variable Beta(a, b)
  double beta_b = 2.0;
  std::size_t gaussian_n = 2000;

  std::size_t n_total() const { return id == CaseId::gaussian ? gaussian_n : n_below + n_above; }
  bool has_true_threshold() const { return id != CaseId::gaussian; }
  static constexpr double true_threshold = 1.0;

  std::string name() const;
  static CaseSpec make(CaseId id);
  static CaseSpec parse(std::string_view name);
};

inline CaseSpec CaseSpec::make(CaseId id) {
  CaseSpec c;
  c.id = id;
  switch (id) {
    case CaseId::case0: c.n_below = 0; c.n_above = 1000; break;
    case CaseId::case1: break;
    case CaseId::case2: c.n_below = 80; c.n_above = 400; break;
    case CaseId::case3: c.xi = -0.05; c.n_below = 400; c.n_above = 2000; break;
    case CaseId::case4: c.n_below = 721; c.n_above = 279; break;
    case CaseId::case5: c.n_below = 20; c.n_above = 100; break;
    case CaseId::case6: c.xi = -0.2; break;
    case CaseId::case7: c.xi = -0.3; break;
    // n = 20000 split 1:5 as in the other mixture cases.
    case CaseId::case8: c.n_below = 3333; c.n_above = 16667; break;
    case CaseId::gaussian: c.n_below = 0; c.n_above = 0; break;
  }
  return c;
}

inline std::string CaseSpec::name() const {
  static constexpr std::array<std::string_view, 10> names{
      "case0", "case1", "case2", "case3", "case4", "case5", "case6", "case7", "case8", "gaussian"};
  return std::string(names[static_cast<std::size_t>(id)]);
}

inline CaseSpec CaseSpec::parse(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(CaseId::gaussian); ++i) {
    const auto c = make(static_cast<CaseId>(i));
    if (c.name() == name) return c;
  }
  if (name == "gaussian20000" || name == "gaussian-20000") {
    auto c = make(CaseId::gaussian);
    c.gaussian_n = 20000;
    return c;
  }
  throw InputError("unknown case '" + std::string(name) + "'");
}

/// Standard normal quantile: Acklam's rational approximation followed by one
/// Halley correction against erfc.
inline double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InputError("normal quantile needs p in (0, 1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Work with the smaller tail so the residual keeps its relative accuracy.
  const double e = x < 0.0 ? 0.5 * std::erfc(-x / std::numbers::sqrt2) - p
                           : (1.0 - p) - 0.5 * std::erfc(x / std::numbers::sqrt2);
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

namespace detail {

struct GaussLegendre {
  std::vector<double> nodes;  // on [-1, 1]
  std::vector<double> weights;

  explicit GaussLegendre(int order) {
    // Boost returns the non-negative zeros only.
    const auto zeros = boost::math::legendre_p_zeros<double>(order);
    for (double z : zeros) {
      const double dp = boost::math::legendre_p_prime(order, z);
      const double w = 2.0 / ((1.0 - z * z) * dp * dp);
      nodes.push_back(z);
      weights.push_back(w);
      if (z != 0.0) {
        nodes.push_back(-z);
        weights.push_back(w);
      }
    }
  }

  template <class F>
  double integrate(F&& f, double lo, double hi) const {
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(mid + half * nodes[i]);
    return half * acc;
  }
};

inline double beta_cdf(double s, double a, double b) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  if (a == 1.0 && b == 2.0) return s * (2.0 - s);
  return boost::math::ibeta(a, b, s);
}

}  // namespace detail

/// tau = P(X <= 1) for the Case 4 construction:
///   q = int_0^1 h(s; sigma, xi) P(B < s) ds,   tau = q / (q + 1 - H(1; sigma, xi)).
inline double compute_tau(double sigma, double xi, double a, double b, int order = 64) {
  if (!(sigma > 0.0) || !(a > 0.0) || !(b > 0.0)) throw InputError("invalid Case 4 parameters");
  const GpdParams p(sigma, xi);
  const detail::GaussLegendre gl(order);
  const double q = gl.integrate(
      [&](double s) { return std::exp(gpd_log_density(s, p)) * detail::beta_cdf(s, a, b); }, 0.0, 1.0);
  return q / (q + gpd_survival(1.0, p));
}

/// Probability of exceeding the true threshold (valid range for true_quantile).
inline double exceedance_at_threshold(const CaseSpec& c) {
  switch (c.id) {
    case CaseId::case0: return 1.0;
    case CaseId::case4: return 1.0 - compute_tau(c.sigma, c.xi, c.beta_a, c.beta_b);
    case CaseId::gaussian: return std::numeric_limits<double>::quiet_NaN();
    // 5/6 for the standard mixture cases.
    default: return static_cast<double>(c.n_above) / static_cast<double>(c.n_total());
  }
}

/// Level exceeded with probability p under the generating distribution.
inline double true_quantile(const CaseSpec& c, double p) {
  if (!(p > 0.0 && p < 1.0)) throw InputError("true quantile needs p in (0, 1)");
  if (c.id == CaseId::gaussian) return inverse_normal_cdf(1.0 - p);
  double lambda = exceedance_at_threshold(c);
  GpdParams tail(c.sigma, c.xi);
  if (c.id == CaseId::case4) tail = shift_threshold(tail, 1.0);
  if (c.id == CaseId::case0) lambda = 1.0;
  if (!(p <= lambda)) throw InputError("true quantile only defined above the threshold");
  return 1.0 + detail::quantile_from_log_survival(std::log(p / lambda), tail);
}

/// Cap on Case 4 proposals before giving up.
inline constexpr std::uint64_t kMaxProposals = 100'000'000;

inline std::vector<double> simulate_case(const CaseSpec& c, Stream& rng) {
  std::vector<double> out;
  out.reserve(c.n_total());
  const GpdParams gpd(c.sigma, c.xi);
  switch (c.id) {
    case CaseId::gaussian:
      for (std::size_t i = 0; i < c.gaussian_n; ++i) out.push_back(inverse_normal_cdf(rng.uniform()));
      return out;
    case CaseId::case4: {
      std::size_t below = 0, above = 0;
      const bool closed_form = c.beta_a == 1.0 && c.beta_b == 2.0;
      for (std::uint64_t k = 0; below < c.n_below || above < c.n_above; ++k) {
        if (k >= kMaxProposals) throw NumericalError("Case 4 sampler exceeded its proposal cap");
        const double y = detail::quantile_from_log_survival(std::log(rng.uniform()), gpd);
        const double u = rng.uniform();
        // Beta(1, 2) by inversion: 1 - sqrt(1 - U).
        const double bvar = closed_form ? 1.0 - std::sqrt(u) : boost::math::ibeta_inv(c.beta_a, c.beta_b, u);
        if (y < bvar) continue;
        if (y <= 1.0) {
          if (below < c.n_below) { out.push_back(y); ++below; }
        } else if (above < c.n_above) {
          out.push_back(y);
          ++above;
        }
      }
      return out;
    }
    default:
      for (std::size_t i = 0; i < c.n_below; ++i) out.push_back(0.5 + 0.5 * rng.uniform());
      for (std::size_t i = 0; i < c.n_above; ++i)
        out.push_back(1.0 + detail::quantile_from_log_survival(std::log(rng.uniform()), gpd));
      return out;
  }
}

}  // namespace eqd
