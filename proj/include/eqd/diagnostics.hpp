#pragma once

// Data behind the usual threshold diagnostics: shape-parameter stability
// across candidates, QQ points with tolerance bounds, and return-level curves
// with parameter-only and threshold-aware bands.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "eqd/bootstrap.hpp"
#include "eqd/empq.hpp"
#include "eqd/errors.hpp"
#include "eqd/fit.hpp"
#include "eqd/gpd.hpp"
#include "eqd/grid.hpp"
#include "eqd/parallel.hpp"
#include "eqd/rng.hpp"
#include "eqd/select.hpp"

namespace eqd {

struct StabilityRow {
  double threshold = 0.0;
  std::size_t n_excess = 0;
  double xi_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct StabilityCurve {
  std::vector<StabilityRow> rows;
  std::vector<SkippedCandidate> skipped;
};

/// Shape estimate and alg1 percentile interval at every candidate. The
/// interval is widened, if needed, to contain the point estimate.
inline StabilityCurve parameter_stability(std::span<const double> data, const CandidateGrid& grid,
                                          std::size_t n_boot, double level,
                                          const BootstrapOptions& opts = {}) {
  if (grid.empty()) throw InputError("candidate grid is empty");
  StabilityCurve out;
  const SummarySpec shape = SummarySpec::shape();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    BootstrapOptions o = opts;
    o.seed = derive_seed(opts.seed, StreamTag::stability, {i});
    try {
      const ThresholdModel m = detail::initial_model(data, grid[i], o);
      const auto s = alg1(data, grid[i], n_boot, shape, o);
      if (s.values.empty()) {
        out.skipped.push_back({grid[i], "every bootstrap replicate failed to fit"});
        continue;
      }
      const Interval ci = percentile_ci(s, level);
      const double xi = m.params.shape();
      out.rows.push_back({grid[i], m.n_excess, xi, std::min(ci.lo, xi), std::max(ci.hi, xi)});
    } catch (const InfeasibleError& e) {
      out.skipped.push_back({grid[i], e.what()});
    } catch (const NumericalError& e) {
      out.skipped.push_back({grid[i], e.what()});
    }
  }
  return out;
}

struct QqRow {
  double plotting_prob = 0.0;
  double model_q = 0.0;
  double empirical_q = 0.0;
  double tol_lo = 0.0;
  double tol_hi = 0.0;
};

/// QQ points for the excesses against the fitted GPD. Model quantiles use
/// i / (n + 1) so the top point stays finite under an unbounded tail; the
/// tolerance bounds are pointwise percentiles of order statistics from B
/// samples of size n drawn from the fitted model.
inline std::vector<QqRow> qq_data(const GpdParams& fitted, std::span<const double> excesses,
                                  std::size_t n_boot, double level, std::uint64_t seed,
                                  unsigned threads = 1) {
  if (n_boot < 20) throw InputError("QQ tolerance bounds need at least 20 simulations");
  if (!(level > 0.0 && level < 1.0)) throw InputError("tolerance level must lie in (0, 1)");
  const std::size_t n = excesses.size();
  if (n < 2) throw InputError("QQ data needs at least two excesses");
  std::vector<double> obs(excesses.begin(), excesses.end());
  std::sort(obs.begin(), obs.end());

  std::vector<double> sims(n_boot * n);
  parallel_for(n_boot, threads, [&](std::size_t b) {
    Stream rng = substream(seed, StreamTag::qq_envelope, {b});
    auto y = gpd_sample(n, fitted, rng);
    std::sort(y.begin(), y.end());
    std::copy(y.begin(), y.end(), sims.begin() + static_cast<std::ptrdiff_t>(b * n));
  });

  std::vector<QqRow> rows(n);
  std::vector<double> column(n_boot);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t b = 0; b < n_boot; ++b) column[b] = sims[b * n + i];
    const Interval env = percentile_ci(column, level);
    const double q = static_cast<double>(i + 1) / static_cast<double>(n + 1);
    rows[i] = {q, gpd_quantile(q, fitted), obs[i], env.lo, env.hi};
  }
  return rows;
}

struct ReturnLevelRange {
  double t_min = 2.0;
  double t_max = 1000.0;
  std::size_t n_points = 25;
  double obs_per_year = 1.0;

  std::vector<double> periods() const {
    if (!(t_min > 0.0 && t_max >= t_min)) throw InputError("return periods need 0 < T_min <= T_max");
    if (n_points < 1) throw InputError("need at least one return period");
    if (!(obs_per_year > 0.0)) throw InputError("observations per year must be positive");
    std::vector<double> t(n_points);
    if (n_points == 1) {
      t[0] = t_min;
      return t;
    }
    const double a = std::log(t_min), b = std::log(t_max);
    for (std::size_t k = 0; k < n_points; ++k)
      t[k] = std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(n_points - 1));
    t.front() = t_min;
    t.back() = t_max;
    return t;
  }
};

struct ReturnLevelRow {
  double period = 0.0;
  double point = 0.0;
  double alg1_lo = 0.0;
  double alg1_hi = 0.0;
  double alg2_lo = 0.0;
  double alg2_hi = 0.0;
};

struct ReturnLevelCurve {
  ThresholdSelection selection;
  std::vector<ReturnLevelRow> rows;
};

/// Return levels at arbitrary periods: point estimates at the selected
/// threshold, alg1 bands there, and alg2 bands from the double bootstrap.
/// Periods whose level falls below the threshold give NaN entries.
inline ReturnLevelCurve return_levels(std::span<const double> data, const GridSpec& grid,
                                      const EqdConfig& cfg, std::span<const double> periods,
                                      double obs_per_year, std::size_t n_outer,
                                      std::size_t n_inner, double level,
                                      const BootstrapOptions& opts = {}) {
  if (periods.empty()) throw InputError("no return periods requested");
  ReturnLevelCurve out;
  out.selection = select_threshold(data, quantile_grid(data, grid), cfg);
  const ThresholdModel& m = out.selection.model;
  std::vector<SummarySpec> specs;
  for (double t : periods) specs.push_back(SummarySpec::return_level(t, obs_per_year));

  BootstrapOptions o1 = opts;
  o1.seed = derive_seed(opts.seed, StreamTag::alg1, {0});
  BootstrapOptions o2 = opts;
  o2.seed = derive_seed(opts.seed, StreamTag::alg2_outer, {0});
  const auto b1 = alg1(data, m.threshold, n_inner, specs, o1);
  const auto b2 = alg2(data, grid, cfg, n_outer, n_inner, specs, o2);

  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < specs.size(); ++k) {
    ReturnLevelRow r{periods[k], specs[k].evaluate(m.threshold, m.exceed_prob, m.params), nan, nan, nan, nan};
    if (!b1[k].values.empty()) {
      const Interval c = percentile_ci(b1[k], level);
      r.alg1_lo = c.lo;
      r.alg1_hi = c.hi;
    }
    if (!b2[k].values.empty()) {
      const Interval c = percentile_ci(b2[k], level);
      r.alg2_lo = c.lo;
      r.alg2_hi = c.hi;
    }
    out.rows.push_back(r);
  }
  return out;
}

/// Return-level curve over log-spaced periods.
inline ReturnLevelCurve return_level_curve(std::span<const double> data, const GridSpec& grid,
                                           const EqdConfig& cfg, const ReturnLevelRange& range,
                                           std::size_t n_outer, std::size_t n_inner, double level,
                                           const BootstrapOptions& opts = {}) {
  const auto t = range.periods();
  return return_levels(data, grid, cfg, t, range.obs_per_year, n_outer, n_inner, level, opts);
}

}  // namespace eqd
