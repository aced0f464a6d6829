#pragma once

// Bootstrap uncertainty for tail summaries.
//
//   alg1  - parametric bootstrap of the GPD parameters at a known threshold;
//           the exceedance rate is held at its observed value.
//   alg1b - as alg1, but the number of excesses in each replicate is drawn
//           from Binomial(n, lambda), so the rate varies too.
//   alg2  - double bootstrap: resample the data, reselect the threshold by
//           EQD, then run alg1 on the resample. Propagates threshold
//           uncertainty into the summary.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eqd/empq.hpp"
#include "eqd/errors.hpp"
#include "eqd/fit.hpp"
#include "eqd/grid.hpp"
#include "eqd/parallel.hpp"
#include "eqd/rng.hpp"
#include "eqd/select.hpp"

namespace eqd {

/// A scalar summary s(u, lambda, sigma, xi) of a fitted tail model.
class SummarySpec {
 public:
  enum class Kind { quantile, return_level, scale, shape, threshold, exceed_prob };

  /// Level exceeded with probability p per observation.
  static SummarySpec quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InputError("quantile summary needs p in (0, 1)");
    return SummarySpec(Kind::quantile, p, 0.0);
  }
  /// T-year return level: the quantile at p = 1 / (T * obs_per_year).
  static SummarySpec return_level(double years, double obs_per_year) {
    if (!(years > 0.0) || !(obs_per_year > 0.0))
      throw InputError("return level needs positive period and observation rate");
    return SummarySpec(Kind::return_level, years, obs_per_year);
  }
  static SummarySpec scale() { return SummarySpec(Kind::scale, 0, 0); }
  static SummarySpec shape() { return SummarySpec(Kind::shape, 0, 0); }
  static SummarySpec threshold() { return SummarySpec(Kind::threshold, 0, 0); }
  static SummarySpec exceed_prob() { return SummarySpec(Kind::exceed_prob, 0, 0); }

  Kind kind() const { return kind_; }

  /// Exceedance probability targeted by quantile-type summaries.
  double probability() const {
    switch (kind_) {
      case Kind::quantile: return a_;
      case Kind::return_level: return 1.0 / (a_ * b_);
      default: return std::numeric_limits<double>::quiet_NaN();
    }
  }

  /// NaN when the summary is undefined for this model (quantile below u).
  double evaluate(double u, double lambda, const GpdParams& p) const {
    switch (kind_) {
      case Kind::quantile:
      case Kind::return_level: {
        const double prob = probability();
        if (!(prob < lambda)) return std::numeric_limits<double>::quiet_NaN();
        return u + detail::quantile_from_log_survival(std::log(prob / lambda), p);
      }
      case Kind::scale: return p.scale();
      case Kind::shape: return p.shape();
      case Kind::threshold: return u;
      case Kind::exceed_prob: return lambda;
    }
    return std::numeric_limits<double>::quiet_NaN();
  }

  std::string label() const {
    switch (kind_) {
      case Kind::quantile: return "quantile(p=" + std::to_string(a_) + ")";
      case Kind::return_level: return "return_level(T=" + std::to_string(a_) + ")";
      case Kind::scale: return "scale";
      case Kind::shape: return "shape";
      case Kind::threshold: return "threshold";
      case Kind::exceed_prob: return "exceed_prob";
    }
    return "?";
  }

 private:
  SummarySpec(Kind k, double a, double b) : kind_(k), a_(a), b_(b) {}
  Kind kind_;
  double a_;
  double b_;
};

enum class Algorithm { alg1, alg1b, alg2 };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::alg1: return "alg1";
    case Algorithm::alg1b: return "alg1b";
    case Algorithm::alg2: return "alg2";
  }
  return "?";
}

struct BootstrapSummary {
  std::vector<double> values;  // successful replicates, in replicate order
  std::size_t n_requested = 0;
  std::size_t n_failed = 0;
  Algorithm algorithm = Algorithm::alg1;
};

struct BootstrapOptions {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::size_t min_excess = 10;
  Optimizer optimizer = Optimizer::profile;
  /// Redraws allowed in alg1b when the binomial count is below min_excess.
  int retry_cap = 10;
  /// alg2 only. When false the outer loop reuses the data unchanged; this is
  /// a test hook that reduces alg2 to alg1 at the observed selection.
  bool resample_outer = true;

  FitOptions fit_options() const {
    FitOptions f;
    f.optimizer = optimizer;
    f.min_excess = 2;
    return f;
  }
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Percentile interval: the (1-level)/2 and (1+level)/2 empirical quantiles.
inline Interval percentile_ci(std::span<const double> values, double level) {
  if (values.empty()) throw InputError("no bootstrap values for an interval");
  if (!(level > 0.0 && level < 1.0)) throw InputError("confidence level must lie in (0, 1)");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  if (v.size() == 1) return {v[0], v[0]};
  return {detail::interpolate_sorted((1.0 - level) / 2.0, v),
          detail::interpolate_sorted((1.0 + level) / 2.0, v)};
}

inline Interval percentile_ci(const BootstrapSummary& s, double level) {
  return percentile_ci(s.values, level);
}

namespace detail {

// values[b * n_specs + k] holds replicate b of spec k, NaN if it failed.
inline std::vector<BootstrapSummary> collect(std::span<const double> values, std::size_t n_reps,
                                             std::size_t n_specs, Algorithm alg) {
  std::vector<BootstrapSummary> out(n_specs);
  for (std::size_t k = 0; k < n_specs; ++k) {
    out[k].algorithm = alg;
    out[k].n_requested = n_reps;
    for (std::size_t b = 0; b < n_reps; ++b) {
      const double v = values[b * n_specs + k];
      if (std::isfinite(v)) out[k].values.push_back(v);
      else ++out[k].n_failed;
    }
  }
  return out;
}

inline void evaluate_specs(std::span<const SummarySpec> specs, double u, double lambda,
                           const GpdParams& p, std::span<double> out) {
  for (std::size_t k = 0; k < specs.size(); ++k) out[k] = specs[k].evaluate(u, lambda, p);
}

// Parametric replicates at a fitted model; shared by alg1 and alg2's inner loop.
inline std::vector<double> parametric_replicates(const ThresholdModel& m, std::size_t n_boot,
                                                 std::span<const SummarySpec> specs,
                                                 std::uint64_t seed, unsigned threads,
                                                 const FitOptions& fo) {
  std::vector<double> values(n_boot * specs.size(), std::numeric_limits<double>::quiet_NaN());
  parallel_for(n_boot, threads, [&](std::size_t b) {
    Stream rng = substream(seed, StreamTag::alg1, {b});
    const auto y = gpd_sample(m.n_excess, m.params, rng);
    const GpdFit fit = fit_gpd(y, fo);
    if (!fit.usable()) return;
    evaluate_specs(specs, m.threshold, m.exceed_prob, fit.params,
                   std::span(values).subspan(b * specs.size(), specs.size()));
  });
  return values;
}

inline ThresholdModel initial_model(std::span<const double> data, double u,
                                    const BootstrapOptions& opts) {
  FitOptions fo = opts.fit_options();
  fo.min_excess = opts.min_excess;
  ThresholdModel m = fit_threshold_model(data, u, fo);
  if (!m.fit.usable()) throw NumericalError("initial GPD fit failed at threshold " + std::to_string(u));
  return m;
}

}  // namespace detail

inline std::vector<BootstrapSummary> alg1(std::span<const double> data, double u, std::size_t n_boot,
                                          std::span<const SummarySpec> specs,
                                          const BootstrapOptions& opts = {}) {
  if (n_boot < 1) throw InputError("B1 must be at least 1");
  const ThresholdModel m = detail::initial_model(data, u, opts);
  const auto values =
      detail::parametric_replicates(m, n_boot, specs, opts.seed, opts.threads, opts.fit_options());
  return detail::collect(values, n_boot, specs.size(), Algorithm::alg1);
}

inline BootstrapSummary alg1(std::span<const double> data, double u, std::size_t n_boot,
                             const SummarySpec& spec, const BootstrapOptions& opts = {}) {
  return alg1(data, u, n_boot, std::span(&spec, 1), opts).front();
}

inline std::vector<BootstrapSummary> alg1b(std::span<const double> data, double u,
                                           std::size_t n_boot, std::span<const SummarySpec> specs,
                                           const BootstrapOptions& opts = {}) {
  if (n_boot < 1) throw InputError("B1 must be at least 1");
  const ThresholdModel m = detail::initial_model(data, u, opts);
  const std::size_t n = m.n_total;
  std::vector<double> values(n_boot * specs.size(), std::numeric_limits<double>::quiet_NaN());
  parallel_for(n_boot, opts.threads, [&](std::size_t b) {
    Stream rng = substream(opts.seed, StreamTag::alg1b, {b});
    std::size_t n_b = 0;
    for (int attempt = 0; attempt <= opts.retry_cap; ++attempt) {
      n_b = 0;
      for (std::size_t i = 0; i < n; ++i) n_b += rng.uniform() < m.exceed_prob ? 1 : 0;
      if (n_b >= opts.min_excess) break;
    }
    if (n_b < opts.min_excess) return;
    const auto y = gpd_sample(n_b, m.params, rng);
    const GpdFit fit = fit_gpd(y, opts.fit_options());
    if (!fit.usable()) return;
    const double lambda_b = static_cast<double>(n_b) / static_cast<double>(n);
    detail::evaluate_specs(specs, m.threshold, lambda_b, fit.params,
                           std::span(values).subspan(b * specs.size(), specs.size()));
  });
  return detail::collect(values, n_boot, specs.size(), Algorithm::alg1b);
}

inline BootstrapSummary alg1b(std::span<const double> data, double u, std::size_t n_boot,
                              const SummarySpec& spec, const BootstrapOptions& opts = {}) {
  return alg1b(data, u, n_boot, std::span(&spec, 1), opts).front();
}

/// Seed used by alg2's inner parametric bootstrap for outer replicate b.
inline std::uint64_t alg2_inner_seed(std::uint64_t seed, std::size_t b) {
  return derive_seed(seed, StreamTag::alg2_inner, {b});
}

/// Double bootstrap. The grid is re-evaluated on every resample (quantile
/// grids move with the data; raw grids stay fixed). Values are ordered by
/// outer replicate, then inner replicate.
inline std::vector<BootstrapSummary> alg2(std::span<const double> data, const GridSpec& grid,
                                          const EqdConfig& cfg, std::size_t n_outer,
                                          std::size_t n_inner, std::span<const SummarySpec> specs,
                                          const BootstrapOptions& opts = {}) {
  if (n_outer < 1 || n_inner < 1) throw InputError("B1 and B2 must be at least 1");
  if (data.empty()) throw InputError("no data");
  cfg.validate();
  const std::size_t ns = specs.size();
  std::vector<double> values(n_outer * n_inner * ns, std::numeric_limits<double>::quiet_NaN());
  parallel_for(n_outer, opts.threads, [&](std::size_t b) {
    std::vector<double> xb;
    if (opts.resample_outer) {
      Stream rng = substream(opts.seed, StreamTag::alg2_outer, {b});
      xb = resample_with_replacement(data, rng);
    } else {
      xb.assign(data.begin(), data.end());
    }
    EqdConfig inner = cfg;
    inner.seed = derive_seed(opts.seed, StreamTag::alg2_select, {b});
    inner.threads = 1;
    ThresholdModel model;
    try {
      const auto sel = select_threshold(xb, quantile_grid(xb, grid), inner);
      model = sel.model;
    } catch (const InfeasibleError&) {
      return;
    } catch (const NumericalError&) {
      return;
    }
    if (!model.fit.usable()) return;
    const auto reps = detail::parametric_replicates(model, n_inner, specs,
                                                    alg2_inner_seed(opts.seed, b), 1,
                                                    opts.fit_options());
    std::copy(reps.begin(), reps.end(), values.begin() + static_cast<std::ptrdiff_t>(b * n_inner * ns));
  });
  return detail::collect(values, n_outer * n_inner, ns, Algorithm::alg2);
}

inline BootstrapSummary alg2(std::span<const double> data, const GridSpec& grid,
                             const EqdConfig& cfg, std::size_t n_outer, std::size_t n_inner,
                             const SummarySpec& spec, const BootstrapOptions& opts = {}) {
  return alg2(data, grid, cfg, n_outer, n_inner, std::span(&spec, 1), opts).front();
}

}  // namespace eqd
