#pragma once

// Maximum-likelihood GPD fitting and the peaks-over-threshold tail model.
//
// Two optimisers are provided and must agree:
//   * profile: one-dimensional search over theta = xi / sigma. For fixed theta
//     the likelihood is maximised in closed form by xi(theta) = mean log(1 + theta y),
//     leaving a smooth 1-D problem solved by bracketed Newton iteration.
//   * simplex: Nelder-Mead on (log sigma, xi) with two extra restarts.
// The shape is confined to (-1, 5); below -1 the likelihood is unbounded.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "eqd/errors.hpp"
#include "eqd/gpd.hpp"

namespace eqd {

inline constexpr double kShapeLower = -1.0;
inline constexpr double kShapeUpper = 5.0;
/// Shape reported when the likelihood is maximised on the xi -> -1 edge.
inline constexpr double kShapeFloor = -1.0 + 1e-6;

enum class Optimizer { profile, simplex };

struct FitOptions {
  Optimizer optimizer = Optimizer::profile;
  std::size_t min_excess = 10;
  int max_iterations = 300;
  double tolerance = 1e-8;
};

struct GpdFit {
  GpdParams params{1.0, 0.0};
  double neg_log_lik = std::numeric_limits<double>::infinity();
  std::size_t n_excess = 0;
  bool converged = false;
  bool at_boundary = false;  // shape pinned at the edge of (-1, 5)
  int iterations = 0;

  bool usable() const { return converged && std::isfinite(neg_log_lik); }
};

struct ThresholdModel {
  double threshold = 0.0;
  double exceed_prob = 0.0;
  GpdParams params{1.0, 0.0};
  std::size_t n_total = 0;
  std::size_t n_excess = 0;
  GpdFit fit;
};

namespace detail {

inline double weighted_nll(double scale, double shape, std::span<const double> values,
                           std::span<const double> counts) {
  const bool weighted = !counts.empty();
  double total = 0.0;
  double acc = 0.0;
  if (std::abs(shape) < kSmallShape) {
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double c = weighted ? counts[k] : 1.0;
      acc += c * values[k];
      total += c;
    }
    return total * std::log(scale) + acc / scale;
  }
  const double theta = shape / scale;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double c = weighted ? counts[k] : 1.0;
    const double z = theta * values[k];
    if (z <= -1.0) return std::numeric_limits<double>::infinity();
    acc += c * std::log1p(z);
    total += c;
  }
  return total * std::log(scale) + (1.0 + 1.0 / shape) * acc;
}

// Means of log(1 + t y), y / (1 + t y) and its square, for y scaled to (0, 1].
struct ProfileTerms {
  double a = 0.0;   // xi(t)
  double da = 0.0;  // d xi / dt
  double d2a = 0.0;
};

inline ProfileTerms profile_terms(double t, std::span<const double> y, std::span<const double> w,
                                  double total) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  const bool weighted = !w.empty();
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double c = weighted ? w[k] : 1.0;
    const double z = t * y[k];
    const double r = y[k] / (1.0 + z);
    s0 += c * std::log1p(z);
    s1 += c * r;
    s2 += c * r * r;
  }
  return {s0 / total, s1 / total, -s2 / total};
}

// Derivative of the per-observation profile log-likelihood
//   l(t) = -log(xi(t) / t) - xi(t) - 1
// and its second derivative.
inline std::array<double, 2> profile_score(double t, const ProfileTerms& p) {
  const double g = 1.0 / t - p.da * (1.0 + 1.0 / p.a);
  const double dg = -1.0 / (t * t) - p.d2a * (1.0 + 1.0 / p.a) + (p.da * p.da) / (p.a * p.a);
  return {g, dg};
}

inline GpdFit fit_profile(std::span<const double> values, std::span<const double> counts,
                          std::size_t n, const FitOptions& opts) {
  const bool weighted = !counts.empty();
  double total = 0.0, ymax = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    total += weighted ? counts[k] : 1.0;
    ymax = std::max(ymax, values[k]);
  }
  std::vector<double> y(values.begin(), values.end());
  for (auto& v : y) v /= ymax;

  double m1 = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double c = weighted ? counts[k] : 1.0;
    m1 += c * y[k];
    m2 += c * y[k] * y[k];
  }
  m1 /= total;
  m2 /= total;
  const double var = m2 - m1 * m1;

  // Method-of-moments start.
  double t = -0.5;
  if (var > 1e-14 * m1 * m1) {
    const double ratio = m1 * m1 / var;
    const double xi0 = 0.5 * (1.0 - ratio);
    const double sigma0 = 0.5 * m1 * (ratio + 1.0);
    t = std::clamp(xi0 / sigma0, -0.95, 50.0);
    if (std::abs(t) < 1e-3) t = xi0 < 0.0 ? -1e-3 : 1e-3;
  }

  int evals = 0;
  auto eval = [&](double at) {
    ++evals;
    return profile_terms(at, y, counts, total);
  };

  GpdFit fit;
  fit.n_excess = n;
  bool interior = false;
  double t_hat = t;

  ProfileTerms cur = eval(t);
  auto score = profile_score(t, cur);
  // Bracket [lo, hi] with g(lo) > 0 > g(hi): the profile rises then falls.
  double lo = std::numeric_limits<double>::quiet_NaN();
  double hi = lo;
  bool bracket_ok = true;
  if (score[0] > 0.0) {
    lo = t;
    double probe = t;
    for (int i = 0; i < 60; ++i) {
      probe = (1.0 + probe) * 4.0 - 1.0;
      const auto pt = eval(probe);
      if (pt.a > kShapeUpper) { bracket_ok = false; break; }
      if (profile_score(probe, pt)[0] < 0.0) { hi = probe; break; }
      lo = probe;
    }
  } else if (score[0] < 0.0) {
    hi = t;
    double probe = t;
    for (int i = 0; i < 60; ++i) {
      probe = -1.0 + (1.0 + probe) / 4.0;
      const auto pt = eval(probe);
      if (pt.a <= kShapeLower) { bracket_ok = false; break; }
      if (profile_score(probe, pt)[0] > 0.0) { lo = probe; break; }
      hi = probe;
    }
  } else {
    lo = hi = t;
  }
  if (!std::isfinite(lo) || !std::isfinite(hi)) bracket_ok = false;

  if (bracket_ok) {
    bool done = lo == hi;
    if (!done) t = 0.5 * (lo + hi);
    for (int it = 0; it < 100 && !done; ++it) {
      if (t == 0.0) t = 1e-12;
      cur = eval(t);
      score = profile_score(t, cur);
      if (score[0] > 0.0) lo = t; else hi = t;
      double next = score[1] < 0.0 ? t - score[0] / score[1] : 0.5 * (lo + hi);
      if (!(next > std::min(lo, hi) && next < std::max(lo, hi))) next = 0.5 * (lo + hi);
      const double step = std::abs(next - t);
      t = next;
      if (step <= 1e-12 * std::max(1.0, std::abs(t)) || std::abs(hi - lo) <= 1e-14) done = true;
    }
    if (done) {
      cur = eval(t);
      if (cur.a > kShapeLower && cur.a < kShapeUpper) {
        interior = true;
        t_hat = t;
      }
    }
  }

  if (interior) {
    const double shape = cur.a;
    const double scale = (std::abs(t_hat) < 1e-300 ? m1 : shape / t_hat) * ymax;
    if (scale > 0.0 && std::isfinite(scale)) {
      fit.params = GpdParams(scale, shape);
      // sum log(1 + theta y) = total * xi at the optimum.
      fit.neg_log_lik = total * (std::log(scale) + shape + 1.0);
      fit.converged = std::isfinite(fit.neg_log_lik);
    }
  }

  // Candidate on the xi -> -1 edge: uniform-like fit with endpoint just above
  // max(y). Only competitive when the interior optimum is short-tailed.
  if (fit.converged && fit.params.shape() > -0.5) {
    fit.iterations = evals;
    return fit;
  }
  const double edge_scale = ymax * (-kShapeFloor) * (1.0 + 1e-9);
  const double edge_nll = weighted_nll(edge_scale, kShapeFloor, values, counts);
  if (edge_nll < fit.neg_log_lik) {
    fit.params = GpdParams(edge_scale, kShapeFloor);
    fit.neg_log_lik = edge_nll;
    fit.at_boundary = true;
    fit.converged = true;
  }
  fit.iterations = evals;
  (void)opts;
  return fit;
}

inline GpdFit fit_simplex(std::span<const double> values, std::span<const double> counts,
                          std::size_t n, const FitOptions& opts) {
  const bool weighted = !counts.empty();
  double total = 0.0, acc = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double c = weighted ? counts[k] : 1.0;
    total += c;
    acc += c * values[k];
  }
  const double log_mean = std::log(acc / total);

  using Point = std::array<double, 2>;  // (log sigma, xi)
  auto objective = [&](const Point& p) {
    if (!(p[1] > kShapeLower && p[1] < kShapeUpper)) return std::numeric_limits<double>::infinity();
    return weighted_nll(std::exp(p[0]), p[1], values, counts);
  };

  struct Run {
    Point best;
    double value;
    bool converged;
    int iterations;
  };

  auto nelder_mead = [&](Point start) {
    std::array<Point, 3> s{start, Point{start[0] + 0.1, start[1]}, Point{start[0], start[1] + 0.1}};
    std::array<double, 3> f{};
    for (int i = 0; i < 3; ++i) f[i] = objective(s[i]);
    int it = 0;
    bool converged = false;
    for (; it < opts.max_iterations; ++it) {
      std::array<int, 3> order{0, 1, 2};
      std::sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });
      const int b = order[0], m = order[1], w = order[2];
      const double spread = std::abs(f[w] - f[b]);
      double diameter = 0.0;
      for (int i = 0; i < 3; ++i)
        diameter = std::max(diameter, std::hypot(s[i][0] - s[b][0], s[i][1] - s[b][1]));
      if (std::isfinite(f[w]) && spread <= opts.tolerance * (1.0 + std::abs(f[b])) &&
          diameter <= 1e-6) {
        converged = true;
        break;
      }
      const Point c{0.5 * (s[b][0] + s[m][0]), 0.5 * (s[b][1] + s[m][1])};
      auto along = [&](double coef) {
        return Point{c[0] + coef * (s[w][0] - c[0]), c[1] + coef * (s[w][1] - c[1])};
      };
      const Point r = along(-1.0);
      const double fr = objective(r);
      if (fr < f[b]) {
        const Point e = along(-2.0);
        const double fe = objective(e);
        if (fe < fr) { s[w] = e; f[w] = fe; } else { s[w] = r; f[w] = fr; }
      } else if (fr < f[m]) {
        s[w] = r; f[w] = fr;
      } else {
        const Point k = fr < f[w] ? along(-0.5) : along(0.5);
        const double fk = objective(k);
        if (fk < std::min(fr, f[w])) {
          s[w] = k; f[w] = fk;
        } else {
          for (int i : {m, w}) {
            s[i] = Point{s[b][0] + 0.5 * (s[i][0] - s[b][0]), s[b][1] + 0.5 * (s[i][1] - s[b][1])};
            f[i] = objective(s[i]);
          }
        }
      }
    }
    const auto best = static_cast<std::size_t>(std::min_element(f.begin(), f.end()) - f.begin());
    return Run{s[best], f[best], converged, it};
  };

  const std::array<Point, 3> starts{Point{log_mean, 0.1}, Point{log_mean + 0.3, -0.2},
                                    Point{log_mean - 0.3, 0.4}};
  Run best{starts[0], std::numeric_limits<double>::infinity(), false, 0};
  int iterations = 0;
  for (const auto& st : starts) {
    const Run r = nelder_mead(st);
    iterations += r.iterations;
    if (r.value < best.value) best = r;
  }

  GpdFit fit;
  fit.n_excess = n;
  fit.iterations = iterations;
  if (std::isfinite(best.value)) {
    fit.params = GpdParams(std::exp(best.best[0]), best.best[1]);
    fit.neg_log_lik = best.value;
    fit.converged = best.converged;
    fit.at_boundary = best.best[1] - kShapeLower < 1e-4;
  }
  return fit;
}

inline GpdFit fit_dispatch(std::span<const double> values, std::span<const double> counts,
                           std::size_t n, const FitOptions& opts) {
  if (n < opts.min_excess)
    throw InfeasibleError("GPD fit needs at least " + std::to_string(opts.min_excess) +
                          " excesses, got " + std::to_string(n));
  return opts.optimizer == Optimizer::profile ? fit_profile(values, counts, n, opts)
                                              : fit_simplex(values, counts, n, opts);
}

}  // namespace detail

inline double neg_log_likelihood(const GpdParams& p, std::span<const double> excesses) {
  for (double y : excesses)
    if (!(y > 0.0)) throw InputError("excesses must be strictly positive");
  return detail::weighted_nll(p.scale(), p.shape(), excesses, {});
}

inline GpdFit fit_gpd(std::span<const double> excesses, const FitOptions& opts = {}) {
  for (double y : excesses)
    if (!(y > 0.0) || !std::isfinite(y)) throw InputError("excesses must be positive and finite");
  return detail::fit_dispatch(excesses, {}, excesses.size(), opts);
}

/// Fit to distinct positive values with multiplicities (a bootstrap resample).
inline GpdFit fit_gpd_weighted(std::span<const double> values, std::span<const double> counts,
                               const FitOptions& opts = {}) {
  double n = 0.0;
  for (double c : counts) n += c;
  return detail::fit_dispatch(values, counts, static_cast<std::size_t>(n), opts);
}

/// Excesses x - u of the values strictly above u, in ascending order so that
/// fits do not depend on the input order.
inline std::vector<double> excesses_over(std::span<const double> data, double u) {
  std::vector<double> out;
  for (double x : data)
    if (x > u) out.push_back(x - u);
  if (!std::is_sorted(out.begin(), out.end())) std::sort(out.begin(), out.end());
  return out;
}

inline ThresholdModel fit_threshold_model(std::span<const double> data, double u,
                                          const FitOptions& opts = {}) {
  if (data.empty()) throw InputError("no data");
  const auto ex = excesses_over(data, u);
  if (ex.size() < opts.min_excess)
    throw InfeasibleError("threshold " + std::to_string(u) + " has " + std::to_string(ex.size()) +
                          " exceedances; at least " + std::to_string(opts.min_excess) +
                          " are needed");
  ThresholdModel m;
  m.threshold = u;
  m.n_total = data.size();
  m.n_excess = ex.size();
  m.exceed_prob = static_cast<double>(ex.size()) / static_cast<double>(data.size());
  m.fit = fit_gpd(ex, opts);
  m.params = m.fit.params;
  return m;
}

/// Level exceeded with probability p: u + (sigma/xi)[(p/lambda)^(-xi) - 1].
inline double unconditional_quantile(const ThresholdModel& m, double p) {
  if (!(p > 0.0)) throw InputError("exceedance probability must be positive");
  if (!(p < m.exceed_prob))
    throw InfeasibleError("exceedance probability " + std::to_string(p) +
                          " is not below the threshold exceedance rate " +
                          std::to_string(m.exceed_prob));
  return m.threshold + detail::quantile_from_log_survival(std::log(p / m.exceed_prob), m.params);
}

}  // namespace eqd
