#pragma once

// Threshold selection by the expected quantile discrepancy (EQD).
//
// For a candidate u with excesses x_u, each of B bootstrap resamples x_u^b is
// fitted by maximum likelihood and scored by the mean absolute gap between
// model and sample quantiles at p_j = j / (m + 1), j = 1..m:
//
//   d_b(u) = (1/m) sum_j | Qmodel(p_j; sigma_b, xi_b) - Q(p_j; x_u^b) |
//
// The Varty variant compares on Exponential(1) margins instead. The score
// d_E(u) is the mean of d_b(u) over replicates; the selected threshold is the
// candidate with the smallest score.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "eqd/empq.hpp"
#include "eqd/errors.hpp"
#include "eqd/fit.hpp"
#include "eqd/gpd.hpp"
#include "eqd/grid.hpp"
#include "eqd/parallel.hpp"
#include "eqd/rng.hpp"

namespace eqd {

enum class Variant { eqd, varty };

/// Which sample supplies the empirical quantiles in d_b: the bootstrap
/// resample itself, or the observed excesses of the candidate.
enum class Calibration { bootstrap_sample, observed_sample };

struct EqdConfig {
  std::size_t n_boot = 100;  // B
  std::size_t n_eval = 500;  // m
  Variant variant = Variant::eqd;
  Calibration calibration = Calibration::bootstrap_sample;
  bool use_bootstrap = true;
  std::size_t min_excess = 10;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  Optimizer optimizer = Optimizer::profile;
  bool keep_replicates = false;

  void validate() const {
    if (n_boot < 1) throw InputError("number of bootstrap samples must be at least 1");
    if (n_eval < 2) throw InputError("number of evaluation probabilities must be at least 2");
    if (min_excess < 2) throw InputError("minimum excess count must be at least 2");
  }

  FitOptions fit_options() const {
    FitOptions f;
    f.optimizer = optimizer;
    f.min_excess = 2;
    return f;
  }
};

/// Evaluation probabilities p_j = j / (m + 1) with log(1 - p_j) cached.
class EvalGrid {
 public:
  explicit EvalGrid(std::size_t m) : probs_(m), log_surv_(m) {
    if (m < 2) throw InputError("number of evaluation probabilities must be at least 2");
    for (std::size_t j = 0; j < m; ++j) {
      probs_[j] = static_cast<double>(j + 1) / static_cast<double>(m + 1);
      log_surv_[j] = std::log1p(-probs_[j]);
    }
  }

  std::size_t size() const { return probs_.size(); }
  std::span<const double> probs() const { return probs_; }
  std::span<const double> log_survival() const { return log_surv_; }

 private:
  std::vector<double> probs_;
  std::vector<double> log_surv_;
};

/// T(x) = -log(1 - H(x; sigma, xi)): maps GPD excesses to Exponential(1).
inline double exp_margin_transform(double x, const GpdParams& p) {
  if (!(x >= 0.0)) throw InputError("margin transform needs a non-negative excess");
  const double t = detail::cumulative_hazard(x, p);
  if (!std::isfinite(t)) throw InputError("excess lies outside the support of the fitted GPD");
  return t;
}

namespace detail {

// `calibration` must be sorted ascending with at least two values.
inline double metric_sorted(std::span<const double> calibration, const GpdParams& fitted,
                            const EvalGrid& grid, Variant variant,
                            std::vector<double>& scratch) {
  if (!(fitted.shape() > -1.0)) throw InputError("fitted shape must exceed -1");
  const auto p = grid.probs();
  const auto ls = grid.log_survival();
  double acc = 0.0;
  if (variant == Variant::eqd) {
    for (std::size_t j = 0; j < p.size(); ++j)
      acc += std::abs(quantile_from_log_survival(ls[j], fitted) -
                      interpolate_sorted(p[j], calibration));
  } else {
    scratch.resize(calibration.size());
    for (std::size_t i = 0; i < calibration.size(); ++i) {
      scratch[i] = cumulative_hazard(calibration[i], fitted);
      if (!std::isfinite(scratch[i])) return std::numeric_limits<double>::infinity();
    }
    for (std::size_t j = 0; j < p.size(); ++j)
      acc += std::abs(-ls[j] - interpolate_sorted(p[j], scratch));
  }
  return acc / static_cast<double>(p.size());
}

}  // namespace detail

/// d_b for one calibration sample and one fitted model (EQD or Varty form).
inline double metric_d_b(std::span<const double> calibration, const GpdParams& fitted,
                         std::size_t m, Variant variant) {
  if (calibration.size() < 2) throw InputError("metric needs at least two excesses");
  std::vector<double> sorted(calibration.begin(), calibration.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> scratch;
  return detail::metric_sorted(sorted, fitted, EvalGrid(m), variant, scratch);
}

struct CandidateScore {
  double threshold = 0.0;
  double probability = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_excess = 0;
  double d_e = std::numeric_limits<double>::infinity();
  std::size_t n_replicates = 0;
  std::size_t n_failed = 0;
  GpdFit fit;                       // MLE on the observed excesses
  std::vector<double> replicates;  // per-replicate d_b when keep_replicates is set
};

struct SkippedCandidate {
  double threshold = 0.0;
  std::string reason;
};

struct ThresholdSelection {
  double chosen = 0.0;
  std::size_t chosen_index = 0;  // index into the candidate grid
  double chosen_probability = std::numeric_limits<double>::quiet_NaN();
  std::vector<CandidateScore> scores;  // one per evaluated candidate, grid order
  std::vector<SkippedCandidate> skipped;
  std::vector<std::string> warnings;
  ThresholdModel model;  // tail model fitted to all excesses of `chosen`

  const CandidateScore& chosen_score() const {
    for (const auto& s : scores)
      if (s.threshold == chosen) return s;
    throw std::logic_error("chosen threshold missing from scores");
  }
};

namespace detail {

struct ReplicateResult {
  double value = std::numeric_limits<double>::quiet_NaN();
  bool ok = false;
};

// One d_b replicate for candidate `cand` with ascending excesses `ex`.
inline ReplicateResult eqd_replicate(std::span<const double> ex, const EqdConfig& cfg,
                                     const EvalGrid& grid, std::size_t cand, std::size_t b) {
  ReplicateResult r;
  thread_local std::vector<double> scratch;
  Stream rng = substream(cfg.seed, StreamTag::eqd_replicate, {cand, b});
  const WeightedSample w = resample_sorted_counts(ex, rng);
  if (w.values.size() < 2) return r;
  const GpdFit fit = fit_gpd_weighted(w.values, w.counts, cfg.fit_options());
  if (!fit.usable() || !(fit.params.shape() > -1.0)) return r;
  double d;
  if (cfg.calibration == Calibration::bootstrap_sample) {
    const auto sample = w.expanded();
    d = metric_sorted(sample, fit.params, grid, cfg.variant, scratch);
  } else {
    d = metric_sorted(ex, fit.params, grid, cfg.variant, scratch);
  }
  if (!std::isfinite(d)) return r;
  return {d, true};
}

inline ReplicateResult eqd_observed(std::span<const double> ex, const GpdFit& fit,
                                    const EqdConfig& cfg, const EvalGrid& grid) {
  std::vector<double> scratch;
  if (!fit.usable() || !(fit.params.shape() > -1.0)) return {};
  const double d = metric_sorted(ex, fit.params, grid, cfg.variant, scratch);
  if (!std::isfinite(d)) return {};
  return {d, true};
}

inline void finish_score(CandidateScore& s, std::span<const ReplicateResult> reps, bool keep) {
  double acc = 0.0;
  std::size_t ok = 0;
  for (const auto& r : reps) {
    if (!r.ok) continue;
    acc += r.value;
    ++ok;
    if (keep) s.replicates.push_back(r.value);
  }
  s.n_replicates = reps.size();
  s.n_failed = reps.size() - ok;
  s.d_e = ok > 0 ? acc / static_cast<double>(ok) : std::numeric_limits<double>::infinity();
}

// Index of the smallest d_E; the first (lowest threshold) wins ties.
inline std::size_t lowest_minimum(std::span<const CandidateScore> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i].d_e < scores[best].d_e) best = i;
  return best;
}

}  // namespace detail

/// Score of one candidate threshold (d_E and failure bookkeeping). Uses the
/// same substreams as candidate index `cand` inside select_threshold.
inline CandidateScore score_threshold(std::span<const double> data, double u, const EqdConfig& cfg,
                                      std::size_t cand = 0) {
  cfg.validate();
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  const auto ex = excesses_over(sorted, u);
  if (ex.size() < cfg.min_excess)
    throw InfeasibleError("threshold has " + std::to_string(ex.size()) + " exceedances; at least " +
                          std::to_string(cfg.min_excess) + " are needed");
  const EvalGrid grid(cfg.n_eval);
  CandidateScore s;
  s.threshold = u;
  s.n_excess = ex.size();
  s.fit = fit_gpd(ex, cfg.fit_options());
  std::vector<detail::ReplicateResult> reps;
  if (!cfg.use_bootstrap) {
    reps.push_back(detail::eqd_observed(ex, s.fit, cfg, grid));
  } else {
    reps.resize(cfg.n_boot);
    parallel_for(cfg.n_boot, cfg.threads,
                 [&](std::size_t b) { reps[b] = detail::eqd_replicate(ex, cfg, grid, cand, b); });
  }
  detail::finish_score(s, reps, cfg.keep_replicates);
  if (s.n_failed == s.n_replicates) throw NumericalError("every bootstrap replicate failed to fit");
  return s;
}

/// Evaluates every candidate with enough excesses and returns the one with the
/// smallest d_E (ties go to the lowest threshold).
inline ThresholdSelection select_threshold(std::span<const double> data, const CandidateGrid& grid,
                                           const EqdConfig& cfg) {
  cfg.validate();
  if (grid.empty()) throw InputError("candidate grid is empty");
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  const EvalGrid eval(cfg.n_eval);

  ThresholdSelection sel;
  std::vector<std::vector<double>> excesses(grid.size());
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    excesses[i] = excesses_over(sorted, grid[i]);
    if (excesses[i].size() < cfg.min_excess) {
      sel.skipped.push_back({grid[i], "too few excesses (" + std::to_string(excesses[i].size()) + ")"});
      continue;
    }
    active.push_back(i);
  }
  if (active.empty()) throw InfeasibleError("every candidate threshold was skipped");

  const std::size_t reps_per = cfg.use_bootstrap ? cfg.n_boot : 1;
  std::vector<GpdFit> fits(grid.size());
  std::vector<detail::ReplicateResult> reps(active.size() * reps_per);
  parallel_for(active.size(), cfg.threads, [&](std::size_t a) {
    const std::size_t i = active[a];
    fits[i] = fit_gpd(excesses[i], cfg.fit_options());
  });
  parallel_for(reps.size(), cfg.threads, [&](std::size_t k) {
    const std::size_t a = k / reps_per, b = k % reps_per;
    const std::size_t i = active[a];
    reps[k] = cfg.use_bootstrap ? detail::eqd_replicate(excesses[i], cfg, eval, i, b)
                                : detail::eqd_observed(excesses[i], fits[i], cfg, eval);
  });

  std::vector<std::size_t> kept;
  for (std::size_t a = 0; a < active.size(); ++a) {
    const std::size_t i = active[a];
    CandidateScore s;
    s.threshold = grid[i];
    s.probability = grid.probability(i);
    s.n_excess = excesses[i].size();
    s.fit = fits[i];
    detail::finish_score(s, std::span(reps).subspan(a * reps_per, reps_per), cfg.keep_replicates);
    if (s.n_failed == s.n_replicates) {
      sel.skipped.push_back({grid[i], "every bootstrap replicate failed to fit"});
      continue;
    }
    if (s.n_failed * 10 > s.n_replicates)
      sel.warnings.push_back("threshold " + std::to_string(grid[i]) + ": " +
                             std::to_string(s.n_failed) + " of " + std::to_string(s.n_replicates) +
                             " bootstrap fits failed");
    kept.push_back(i);
    sel.scores.push_back(std::move(s));
  }
  if (sel.scores.empty()) throw InfeasibleError("every candidate threshold was skipped");
  const std::size_t best = kept[detail::lowest_minimum(sel.scores)];

  sel.chosen = grid[best];
  sel.chosen_index = best;
  sel.chosen_probability = grid.probability(best);
  FitOptions fo = cfg.fit_options();
  fo.min_excess = cfg.min_excess;
  sel.model = fit_threshold_model(sorted, sel.chosen, fo);
  return sel;
}

}  // namespace eqd
