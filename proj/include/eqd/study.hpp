#pragma once

// Monte Carlo studies over the simulation cases: threshold recovery,
// quantile recovery at p_j = 1 / (10^j n), and interval coverage for the
// bootstrap algorithms. Replicate r always uses substreams derived from
// (seed, r), so reports do not depend on the worker count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eqd/bootstrap.hpp"
#include "eqd/errors.hpp"
#include "eqd/fit.hpp"
#include "eqd/grid.hpp"
#include "eqd/parallel.hpp"
#include "eqd/rng.hpp"
#include "eqd/select.hpp"
#include "eqd/simcases.hpp"

namespace eqd {

/// Replaces EQD selection in a study (returns a threshold for the sample).
using ThresholdSelector = std::function<double(std::span<const double>)>;

struct StudyConfig {
  CaseSpec case_spec = CaseSpec::make(CaseId::case1);
  std::size_t n_reps = 100;
  GridSpec grid = GridSpec::parse("0(5)95");
  EqdConfig eqd;  // seed and threads inside are ignored
  std::size_t n_boot1 = 200;  // B1
  std::size_t n_boot2 = 200;  // B2
  std::vector<int> j_levels{0, 1, 2};
  std::vector<double> levels{0.5, 0.8, 0.95};
  std::vector<Algorithm> algorithms{Algorithm::alg1, Algorithm::alg1b, Algorithm::alg2};
  std::uint64_t seed = 0;
  unsigned threads = 1;
  ThresholdSelector selector;  // empty: EQD

  double target_probability(int j) const {
    return 1.0 / (std::pow(10.0, j) * static_cast<double>(case_spec.n_total()));
  }
};

enum class Preset { desk, full };

inline Preset parse_preset(std::string_view s) {
  if (s == "desk") return Preset::desk;
  if (s == "full") return Preset::full;
  throw InputError("unknown preset '" + std::string(s) + "' (expected desk or full)");
}

/// Default candidate grid for a case: 0(5)95 for the threshold cases,
/// 50(5)95 for Gaussian n = 2000 and 50(0.5)95 for larger Gaussian samples.
inline GridSpec default_grid(const CaseSpec& c) {
  if (c.id != CaseId::gaussian) return GridSpec::from_percents(0, 5, 95);
  return c.gaussian_n <= 2000 ? GridSpec::from_percents(50, 5, 95) : GridSpec::from_percents(50, 0.5, 95);
}

/// desk: 100 replicates, B = 50, B1 = B2 = 100. full: 500, 100, 200.
inline StudyConfig make_preset(const CaseSpec& c, Preset p) {
  StudyConfig s;
  s.case_spec = c;
  s.grid = default_grid(c);
  if (p == Preset::desk) {
    s.n_reps = 100;
    s.eqd.n_boot = 50;
    s.n_boot1 = s.n_boot2 = 100;
  } else {
    s.n_reps = 500;
    s.eqd.n_boot = 100;
    s.n_boot1 = s.n_boot2 = 200;
  }
  return s;
}

struct MetricRow {
  std::string case_name;
  std::string method;
  std::string target;  // "threshold" or "quantile_j<j>"
  double rmse = 0.0;
  double bias = 0.0;
  double variance = 0.0;
  std::size_t n_replicates = 0;
  std::size_t n_failed = 0;
};

struct CoverageRow {
  std::string case_name;
  Algorithm algorithm = Algorithm::alg1;
  double level = 0.95;
  int j = 0;
  double coverage = 0.0;
  double width_ratio = 0.0;  // mean over replicates of width / width(alg1)
  std::size_t n_replicates = 0;
  std::size_t n_failed = 0;
};

struct StudyReport {
  std::vector<MetricRow> metrics;
  std::vector<CoverageRow> coverage;
};

/// RMSE, bias and population variance of finite errors; NaNs count as failures.
inline MetricRow summarise_errors(std::span<const double> errors) {
  MetricRow r;
  std::vector<double> ok;
  for (double e : errors) {
    if (std::isfinite(e)) ok.push_back(e);
  }
  r.n_replicates = errors.size();
  r.n_failed = errors.size() - ok.size();
  if (ok.empty()) {
    r.rmse = r.bias = r.variance = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  const double n = static_cast<double>(ok.size());
  double sum = 0.0, sq = 0.0;
  for (double e : ok) sum += e;
  r.bias = sum / n;
  for (double e : ok) sq += (e - r.bias) * (e - r.bias);
  r.variance = sq / n;
  r.rmse = std::sqrt(r.bias * r.bias + r.variance);
  return r;
}

namespace detail {

enum StudyParts : unsigned { kThreshold = 1, kQuantile = 2, kCoverage = 4 };

struct ReplicateOutcome {
  bool selected = false;
  double threshold_error = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> quantile_error;  // per j
  // Interval bounds indexed [algorithm][level][j]; NaN when unavailable.
  std::vector<double> lo, hi;
};

inline ReplicateOutcome run_replicate(const StudyConfig& sc, std::size_t r, unsigned parts) {
  const std::size_t na = sc.algorithms.size(), nl = sc.levels.size(), nj = sc.j_levels.size();
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  ReplicateOutcome out;
  out.quantile_error.assign(nj, nan);
  out.lo.assign(na * nl * nj, nan);
  out.hi.assign(na * nl * nj, nan);

  Stream rng = substream(sc.seed, StreamTag::study_replicate, {r});
  const auto data = simulate_case(sc.case_spec, rng);

  EqdConfig cfg = sc.eqd;
  cfg.seed = derive_seed(sc.seed, StreamTag::study_select, {r});
  cfg.threads = 1;
  FitOptions fo = cfg.fit_options();
  fo.min_excess = cfg.min_excess;

  ThresholdModel model;
  try {
    if (sc.selector) {
      model = fit_threshold_model(data, sc.selector(data), fo);
    } else {
      model = select_threshold(data, quantile_grid(data, sc.grid), cfg).model;
    }
  } catch (const InfeasibleError&) {
    return out;
  } catch (const NumericalError&) {
    return out;
  }
  if (!model.fit.usable()) return out;
  out.selected = true;

  if (sc.case_spec.has_true_threshold())
    out.threshold_error = model.threshold - CaseSpec::true_threshold;

  std::vector<SummarySpec> specs;
  std::vector<double> truth;
  for (int j : sc.j_levels) {
    const double p = sc.target_probability(j);
    specs.push_back(SummarySpec::quantile(p));
    truth.push_back(true_quantile(sc.case_spec, p));
  }
  if (parts & kQuantile) {
    for (std::size_t k = 0; k < nj; ++k) {
      const double q = specs[k].evaluate(model.threshold, model.exceed_prob, model.params);
      out.quantile_error[k] = q - truth[k];
    }
  }
  if (!(parts & kCoverage)) return out;

  BootstrapOptions bo;
  bo.min_excess = cfg.min_excess;
  bo.optimizer = cfg.optimizer;
  bo.threads = 1;
  for (std::size_t a = 0; a < na; ++a) {
    bo.seed = derive_seed(sc.seed, StreamTag::study_boot, {r, a});
    std::vector<BootstrapSummary> s;
    try {
      switch (sc.algorithms[a]) {
        case Algorithm::alg1: s = alg1(data, model.threshold, sc.n_boot1, specs, bo); break;
        case Algorithm::alg1b: s = alg1b(data, model.threshold, sc.n_boot1, specs, bo); break;
        case Algorithm::alg2:
          s = alg2(data, sc.grid, cfg, sc.n_boot2, sc.n_boot1, specs, bo);
          break;
      }
    } catch (const InfeasibleError&) {
      continue;
    } catch (const NumericalError&) {
      continue;
    }
    for (std::size_t k = 0; k < nj; ++k) {
      if (s[k].values.empty()) continue;
      for (std::size_t l = 0; l < nl; ++l) {
        const Interval ci = percentile_ci(s[k], sc.levels[l]);
        out.lo[(a * nl + l) * nj + k] = ci.lo;
        out.hi[(a * nl + l) * nj + k] = ci.hi;
      }
    }
  }
  return out;
}

inline StudyReport run_study(const StudyConfig& sc, unsigned parts) {
  if (sc.n_reps < 1) throw InputError("a study needs at least one replicate");
  if (!sc.case_spec.has_true_threshold() && (parts & kThreshold) && !(parts & ~kThreshold))
    throw InputError("threshold study needs a case with a true threshold");
  sc.eqd.validate();
  for (double l : sc.levels)
    if (!(l > 0.0 && l < 1.0)) throw InputError("confidence levels must lie in (0, 1)");
  for (int j : sc.j_levels)
    if (j < 0) throw InputError("j levels must be non-negative");

  std::vector<ReplicateOutcome> outcomes(sc.n_reps);
  parallel_for(sc.n_reps, sc.threads,
               [&](std::size_t r) { outcomes[r] = run_replicate(sc, r, parts); });

  StudyReport rep;
  const std::string name = sc.case_spec.name();
  const std::string method = sc.selector ? "custom" : (sc.eqd.variant == Variant::eqd ? "eqd" : "varty");
  std::vector<double> err(sc.n_reps);

  if ((parts & kThreshold) && sc.case_spec.has_true_threshold()) {
    for (std::size_t r = 0; r < sc.n_reps; ++r) err[r] = outcomes[r].threshold_error;
    MetricRow m = summarise_errors(err);
    m.case_name = name;
    m.method = method;
    m.target = "threshold";
    rep.metrics.push_back(m);
  }
  if (parts & kQuantile) {
    for (std::size_t k = 0; k < sc.j_levels.size(); ++k) {
      for (std::size_t r = 0; r < sc.n_reps; ++r) err[r] = outcomes[r].quantile_error[k];
      MetricRow m = summarise_errors(err);
      m.case_name = name;
      m.method = method;
      m.target = "quantile_j" + std::to_string(sc.j_levels[k]);
      rep.metrics.push_back(m);
    }
  }
  if (parts & kCoverage) {
    const std::size_t nl = sc.levels.size(), nj = sc.j_levels.size();
    const auto base = std::find(sc.algorithms.begin(), sc.algorithms.end(), Algorithm::alg1);
    const std::size_t a1 = static_cast<std::size_t>(base - sc.algorithms.begin());
    for (std::size_t a = 0; a < sc.algorithms.size(); ++a) {
      for (std::size_t l = 0; l < nl; ++l) {
        for (std::size_t k = 0; k < nj; ++k) {
          const double truth = true_quantile(sc.case_spec, sc.target_probability(sc.j_levels[k]));
          const std::size_t idx = (a * nl + l) * nj + k;
          std::size_t ok = 0, hit = 0, n_ratio = 0;
          double ratio = 0.0;
          for (const auto& o : outcomes) {
            if (!std::isfinite(o.lo[idx])) continue;
            ++ok;
            if (o.lo[idx] <= truth && truth <= o.hi[idx]) ++hit;
            if (base != sc.algorithms.end()) {
              const std::size_t b = (a1 * nl + l) * nj + k;
              const double w1 = o.hi[b] - o.lo[b];
              if (std::isfinite(w1) && w1 > 0.0) {
                ratio += (o.hi[idx] - o.lo[idx]) / w1;
                ++n_ratio;
              }
            }
          }
          CoverageRow c;
          c.case_name = name;
          c.algorithm = sc.algorithms[a];
          c.level = sc.levels[l];
          c.j = sc.j_levels[k];
          c.n_replicates = sc.n_reps;
          c.n_failed = sc.n_reps - ok;
          c.coverage = ok > 0 ? static_cast<double>(hit) / static_cast<double>(ok)
                              : std::numeric_limits<double>::quiet_NaN();
          c.width_ratio = n_ratio > 0 ? ratio / static_cast<double>(n_ratio)
                                      : std::numeric_limits<double>::quiet_NaN();
          rep.coverage.push_back(c);
        }
      }
    }
  }
  return rep;
}

}  // namespace detail

/// Error of the selected threshold against the true threshold u = 1.
inline StudyReport threshold_study(const StudyConfig& sc) {
  if (!sc.case_spec.has_true_threshold())
    throw InputError("threshold study needs a case with a true threshold");
  return detail::run_study(sc, detail::kThreshold);
}

/// Error of the estimated quantile at p_j = 1 / (10^j n) for each j.
inline StudyReport quantile_study(const StudyConfig& sc) {
  return detail::run_study(sc, detail::kQuantile);
}

/// Coverage and width ratios of percentile intervals for each algorithm.
inline StudyReport coverage_study(const StudyConfig& sc) {
  return detail::run_study(sc, detail::kCoverage);
}

/// Every part in one pass over the replicates (each replicate selects once).
inline StudyReport full_study(const StudyConfig& sc) {
  unsigned parts = detail::kQuantile | detail::kCoverage;
  if (sc.case_spec.has_true_threshold()) parts |= detail::kThreshold;
  return detail::run_study(sc, parts);
}

/// Threshold and quantile metrics only (no bootstrap intervals).
inline StudyReport recovery_study(const StudyConfig& sc) {
  unsigned parts = detail::kQuantile;
  if (sc.case_spec.has_true_threshold()) parts |= detail::kThreshold;
  return detail::run_study(sc, parts);
}

}  // namespace eqd
