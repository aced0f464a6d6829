// eqd: threshold selection and tail inference for peaks-over-threshold data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "eqd/bootstrap.hpp"
#include "eqd/diagnostics.hpp"
#include "eqd/errors.hpp"
#include "eqd/fit.hpp"
#include "eqd/grid.hpp"
#include "eqd/io.hpp"
#include "eqd/select.hpp"
#include "eqd/simcases.hpp"
#include "eqd/study.hpp"

namespace {

using eqd::io::Report;
using eqd::io::Value;

enum Exit { kOk = 0, kInternal = 1, kInput = 2, kNumerical = 3, kInfeasible = 4 };

std::uint64_t default_seed() {
  const char* env = std::getenv("EQD_SEED");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0') throw eqd::InputError("EQD_SEED must be a non-negative integer");
  return v;
}

struct Common {
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string format = "csv";
  std::string output;
};

struct Selection {
  std::string grid = "0(5)95";
  std::size_t n_boot = 100;
  std::size_t n_eval = 500;
  std::string variant = "eqd";
  std::string calibration = "bootstrap";
  bool no_bootstrap = false;
  std::size_t min_excess = 10;
  std::string optimizer = "profile";

  eqd::EqdConfig config(const Common& c) const {
    eqd::EqdConfig cfg;
    cfg.n_boot = n_boot;
    cfg.n_eval = n_eval;
    cfg.variant = variant == "varty" ? eqd::Variant::varty : eqd::Variant::eqd;
    cfg.calibration = calibration == "observed" ? eqd::Calibration::observed_sample
                                                : eqd::Calibration::bootstrap_sample;
    cfg.use_bootstrap = !no_bootstrap;
    cfg.min_excess = min_excess;
    cfg.optimizer = optimizer == "simplex" ? eqd::Optimizer::simplex : eqd::Optimizer::profile;
    cfg.seed = c.seed;
    cfg.threads = c.threads;
    cfg.validate();
    return cfg;
  }

  eqd::BootstrapOptions boot(const Common& c) const {
    eqd::BootstrapOptions o;
    o.seed = c.seed;
    o.threads = c.threads;
    o.min_excess = min_excess;
    o.optimizer = optimizer == "simplex" ? eqd::Optimizer::simplex : eqd::Optimizer::profile;
    return o;
  }

  void add_to(CLI::App* app) {
    app->add_option("--grid", grid, "Candidate grid: A(B)C percents, a percent list, or @v1,v2 raw values")
        ->capture_default_str();
    app->add_option("--B", n_boot, "Bootstrap samples per candidate")->capture_default_str();
    app->add_option("--m", n_eval, "Evaluation probabilities in the metric")->capture_default_str();
    app->add_option("--variant", variant, "Metric variant")
        ->check(CLI::IsMember({"eqd", "varty"}))
        ->capture_default_str();
    app->add_option("--calibration", calibration, "Empirical quantiles from the bootstrap or observed sample")
        ->check(CLI::IsMember({"bootstrap", "observed"}))
        ->capture_default_str();
    app->add_flag("--no-bootstrap", no_bootstrap, "Score the observed fit only (B is ignored)");
    app->add_option("--min-excess", min_excess, "Fewest excesses for a usable candidate")
        ->capture_default_str();
    app->add_option("--optimizer", optimizer, "GPD likelihood maximiser")
        ->check(CLI::IsMember({"profile", "simplex"}))
        ->capture_default_str();
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Random seed (default: $EQD_SEED or 0)");
  app->add_option("--threads", c.threads, "Worker cap (0 = all cores)")->capture_default_str();
  app->add_option("--format", c.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app->add_option("--output,-o", c.output, "Output file (default: standard output)");
}

void emit(const Report& r, const Common& c) {
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  const auto f = eqd::io::parse_format(c.format);
  if (c.output.empty() || c.output == "-") {
    eqd::io::write_report(std::cout, r, f);
    return;
  }
  std::ofstream out(c.output, std::ios::binary);
  if (!out) throw eqd::InputError("cannot write '" + c.output + "'");
  eqd::io::write_report(out, r, f);
}

Value num(double x) { return x; }
Value count(std::size_t n) { return static_cast<std::int64_t>(n); }

// Empirical percentile of a threshold taken from a quantile grid, else NaN.
double percent_of(double prob) { return std::isfinite(prob) ? 100.0 * prob : prob; }

void add_model(Report& r, const eqd::ThresholdModel& m) {
  r.set("threshold", num(m.threshold));
  r.set("n_total", count(m.n_total));
  r.set("n_excess", count(m.n_excess));
  r.set("exceed_prob", num(m.exceed_prob));
  r.set("sigma", num(m.params.scale()));
  r.set("xi", num(m.params.shape()));
}

Report select_report(const eqd::ThresholdSelection& sel, const eqd::CandidateGrid& grid) {
  Report r;
  r.set("chosen", num(sel.chosen));
  r.set("chosen_percent", num(percent_of(sel.chosen_probability)));
  r.set("chosen_index", count(sel.chosen_index));
  r.set("n_candidates", count(grid.size()));
  add_model(r, sel.model);
  r.set("neg_log_lik", num(sel.model.fit.neg_log_lik));
  auto& t = r.table("candidates", {"threshold", "percent", "n_excess", "d_e", "n_replicates", "n_failed",
                                   "sigma", "xi", "chosen"});
  for (const auto& s : sel.scores)
    t.add({num(s.threshold), num(percent_of(s.probability)), count(s.n_excess), num(s.d_e),
           count(s.n_replicates), count(s.n_failed), num(s.fit.params.scale()), num(s.fit.params.shape()),
           count(s.threshold == sel.chosen ? 1 : 0)});
  auto& k = r.table("skipped", {"threshold", "reason"});
  for (const auto& s : sel.skipped) k.add({num(s.threshold), s.reason});
  r.warnings = sel.warnings;
  return r;
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> v = eqd::detail::parse_list(s, what);
  for (double x : v)
    if (!(x > 0.0)) throw eqd::InputError(std::string(what) + " values must be positive");
  return v;
}

std::vector<eqd::Algorithm> parse_algorithms(const std::string& s) {
  std::vector<eqd::Algorithm> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "1" || item == "alg1") out.push_back(eqd::Algorithm::alg1);
    else if (item == "1b" || item == "alg1b") out.push_back(eqd::Algorithm::alg1b);
    else if (item == "2" || item == "alg2") out.push_back(eqd::Algorithm::alg2);
    else throw eqd::InputError("unknown algorithm '" + item + "' (expected 1, 1b or 2)");
  }
  if (out.empty()) throw eqd::InputError("no algorithms requested");
  return out;
}

std::string fmt4(double x) {
  std::ostringstream o;
  o << std::setprecision(4) << x;
  return o.str();
}

void print_study_table(const eqd::StudyReport& rep, std::ostream& out) {
  if (!rep.metrics.empty()) {
    out << std::left << std::setw(10) << "case" << std::setw(8) << "method" << std::setw(14) << "target"
        << std::setw(12) << "rmse" << std::setw(12) << "bias" << std::setw(12) << "variance" << "failed\n";
    for (const auto& m : rep.metrics)
      out << std::setw(10) << m.case_name << std::setw(8) << m.method << std::setw(14) << m.target
          << std::setw(12) << fmt4(m.rmse) << std::setw(12) << fmt4(m.bias) << std::setw(12)
          << fmt4(m.variance) << m.n_failed << "/" << m.n_replicates << '\n';
  }
  if (!rep.coverage.empty()) {
    if (!rep.metrics.empty()) out << '\n';
    out << std::left << std::setw(10) << "case" << std::setw(8) << "alg" << std::setw(8) << "level"
        << std::setw(4) << "j" << std::setw(12) << "coverage" << std::setw(12) << "width/alg1" << "failed\n";
    for (const auto& c : rep.coverage)
      out << std::setw(10) << c.case_name << std::setw(8) << eqd::to_string(c.algorithm) << std::setw(8)
          << fmt4(c.level) << std::setw(4) << c.j << std::setw(12) << fmt4(c.coverage) << std::setw(12)
          << fmt4(c.width_ratio) << c.n_failed << "/" << c.n_replicates << '\n';
  }
}

Report study_report(const eqd::StudyReport& rep) {
  Report r;
  auto& m = r.table("metrics", {"case", "method", "target", "rmse", "bias", "variance", "n_replicates",
                                "n_failed"});
  for (const auto& x : rep.metrics)
    m.add({x.case_name, x.method, x.target, num(x.rmse), num(x.bias), num(x.variance),
           count(x.n_replicates), count(x.n_failed)});
  auto& c = r.table("coverage", {"case", "algorithm", "level", "j", "coverage", "width_ratio",
                                 "n_replicates", "n_failed"});
  for (const auto& x : rep.coverage)
    c.add({x.case_name, eqd::to_string(x.algorithm), num(x.level), static_cast<std::int64_t>(x.j),
           num(x.coverage), num(x.width_ratio), count(x.n_replicates), count(x.n_failed)});
  return r;
}

int run(int argc, char** argv) {
  CLI::App app{"Threshold selection and tail inference for peaks-over-threshold data"};
  app.require_subcommand(1);
  Common common;
  common.seed = default_seed();

  // select
  std::string input;
  Selection sel_opts;
  auto* select = app.add_subcommand("select", "Choose a threshold from a candidate grid");
  select->add_option("input", input, "Data file, one value per line ('-' for stdin)")->required();
  sel_opts.add_to(select);
  add_common(select, common);

  // fit
  double threshold = 0.0;
  std::size_t fit_min_excess = 10;
  std::string fit_optimizer = "profile";
  auto* fit = app.add_subcommand("fit", "Fit the GPD to excesses of a fixed threshold");
  fit->add_option("input", input, "Data file")->required();
  fit->add_option("--threshold,-u", threshold, "Threshold")->required();
  fit->add_option("--min-excess", fit_min_excess, "Fewest excesses for a fit")->capture_default_str();
  fit->add_option("--optimizer", fit_optimizer, "GPD likelihood maximiser")
      ->check(CLI::IsMember({"profile", "simplex"}))
      ->capture_default_str();
  add_common(fit, common);

  // rl
  std::string periods, probs, algs = "1,2";
  double obs_per_year = 1.0, level = 0.95;
  std::size_t b1 = 200, b2 = 200;
  auto* rl = app.add_subcommand("rl", "Return levels with bootstrap intervals");
  rl->add_option("input", input, "Data file")->required();
  auto* t_opt = rl->add_option("--T", periods, "Return periods in years, comma separated");
  rl->add_option("--p", probs, "Exceedance probabilities per observation, comma separated")->excludes(t_opt);
  rl->add_option("--alg", algs, "Algorithms: any of 1, 1b, 2, comma separated")->capture_default_str();
  rl->add_option("--obs-per-year", obs_per_year, "Observations per year")->capture_default_str();
  rl->add_option("--B1", b1, "Parametric bootstrap samples")->capture_default_str();
  rl->add_option("--B2", b2, "Outer resamples for algorithm 2")->capture_default_str();
  rl->add_option("--level", level, "Confidence level")->capture_default_str();
  sel_opts.add_to(rl);
  add_common(rl, common);

  // simulate
  std::string case_name = "case1";
  std::optional<double> sim_sigma, sim_xi;
  std::optional<std::size_t> sim_below, sim_above, sim_n;
  auto* simulate = app.add_subcommand("simulate", "Draw a sample from a simulation case");
  simulate->add_option("--case", case_name, "case0..case8, gaussian or gaussian20000")->capture_default_str();
  simulate->add_option("--sigma", sim_sigma, "Override the GPD scale");
  simulate->add_option("--xi", sim_xi, "Override the GPD shape");
  simulate->add_option("--n-below", sim_below, "Override the count below the threshold");
  simulate->add_option("--n-above", sim_above, "Override the count above the threshold");
  simulate->add_option("--n", sim_n, "Override the Gaussian sample size");
  add_common(simulate, common);

  // diag
  std::string kind = "stability";
  std::optional<double> diag_threshold;
  double t_min = 2.0, t_max = 1000.0;
  std::size_t n_points = 25, n_sim = 200;
  auto* diag = app.add_subcommand("diag", "Data for stability, QQ and return-level plots");
  diag->add_option("input", input, "Data file")->required();
  diag->add_option("--kind", kind, "Diagnostic")
      ->check(CLI::IsMember({"stability", "qq", "rl-curve"}))
      ->capture_default_str();
  diag->add_option("--threshold,-u", diag_threshold, "QQ threshold (default: selected)");
  diag->add_option("--B1", b1, "Parametric bootstrap samples")->capture_default_str();
  diag->add_option("--B2", b2, "Outer resamples for algorithm 2")->capture_default_str();
  diag->add_option("--nsim", n_sim, "Simulations behind QQ tolerance bounds")->capture_default_str();
  diag->add_option("--level", level, "Confidence or tolerance level")->capture_default_str();
  diag->add_option("--tmin", t_min, "Shortest return period")->capture_default_str();
  diag->add_option("--tmax", t_max, "Longest return period")->capture_default_str();
  diag->add_option("--npoints", n_points, "Return periods on the curve")->capture_default_str();
  diag->add_option("--obs-per-year", obs_per_year, "Observations per year")->capture_default_str();
  sel_opts.add_to(diag);
  add_common(diag, common);

  // study
  std::string preset = "desk", parts = "all", study_algs = "1,1b,2";
  std::optional<std::size_t> reps;
  std::optional<std::string> study_grid;
  std::optional<std::size_t> study_b, study_b1, study_b2;
  auto* study = app.add_subcommand("study", "Simulation study over replicated samples");
  study->add_option("--case", case_name, "Simulation case")->capture_default_str();
  study->add_option("--preset", preset, "desk or full")->check(CLI::IsMember({"desk", "full"}))->capture_default_str();
  study->add_option("--reps", reps, "Override the number of replicates");
  study->add_option("--parts", parts, "all, recovery, threshold, quantile or coverage")
      ->check(CLI::IsMember({"all", "recovery", "threshold", "quantile", "coverage"}))
      ->capture_default_str();
  study->add_option("--alg", study_algs, "Algorithms for coverage")->capture_default_str();
  study->add_option("--grid", study_grid, "Override the candidate grid");
  study->add_option("--B", study_b, "Override bootstrap samples per candidate");
  study->add_option("--B1", study_b1, "Override parametric bootstrap samples");
  study->add_option("--B2", study_b2, "Override outer resamples for algorithm 2");
  add_common(study, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInput;
  }

  if (*select) {
    const auto data = eqd::io::read_values(input);
    const auto grid = eqd::quantile_grid(data, eqd::GridSpec::parse(sel_opts.grid));
    const auto sel = eqd::select_threshold(data, grid, sel_opts.config(common));
    emit(select_report(sel, grid), common);
  } else if (*fit) {
    const auto data = eqd::io::read_values(input);
    eqd::FitOptions fo;
    fo.min_excess = fit_min_excess;
    fo.optimizer = fit_optimizer == "simplex" ? eqd::Optimizer::simplex : eqd::Optimizer::profile;
    const auto m = eqd::fit_threshold_model(data, threshold, fo);
    if (!m.fit.usable()) throw eqd::NumericalError("GPD fit did not converge");
    Report r;
    add_model(r, m);
    r.set("neg_log_lik", num(m.fit.neg_log_lik));
    r.set("converged", count(m.fit.converged ? 1 : 0));
    r.set("at_boundary", count(m.fit.at_boundary ? 1 : 0));
    emit(r, common);
  } else if (*rl) {
    const auto data = eqd::io::read_values(input);
    const auto algorithms = parse_algorithms(algs);
    std::vector<double> xs;
    std::vector<eqd::SummarySpec> specs;
    if (!probs.empty()) {
      xs = parse_list(probs, "probability");
      for (double p : xs) specs.push_back(eqd::SummarySpec::quantile(p));
    } else {
      xs = parse_list(periods.empty() ? std::string("10,100,1000") : periods, "period");
      for (double t : xs) specs.push_back(eqd::SummarySpec::return_level(t, obs_per_year));
    }
    if (!(level > 0.0 && level < 1.0)) throw eqd::InputError("--level must lie in (0, 1)");
    const auto cfg = sel_opts.config(common);
    const auto spec = eqd::GridSpec::parse(sel_opts.grid);
    const auto sel = eqd::select_threshold(data, eqd::quantile_grid(data, spec), cfg);
    const auto& m = sel.model;

    Report r;
    r.set("chosen_percent", num(percent_of(sel.chosen_probability)));
    add_model(r, m);
    r.set("level", num(level));
    std::vector<std::string> cols{probs.empty() ? "T" : "p", "prob", "point"};
    const bool intervals = b1 >= 2;
    std::vector<std::vector<eqd::BootstrapSummary>> results;
    if (intervals) {
      for (auto a : algorithms) {
        auto o = sel_opts.boot(common);
        o.seed = eqd::derive_seed(common.seed, eqd::StreamTag::alg1, {static_cast<std::size_t>(a)});
        switch (a) {
          case eqd::Algorithm::alg1: results.push_back(eqd::alg1(data, m.threshold, b1, specs, o)); break;
          case eqd::Algorithm::alg1b: results.push_back(eqd::alg1b(data, m.threshold, b1, specs, o)); break;
          case eqd::Algorithm::alg2: results.push_back(eqd::alg2(data, spec, cfg, b2, b1, specs, o)); break;
        }
        const std::string n = eqd::to_string(a);
        cols.insert(cols.end(), {n + "_lo", n + "_hi", n + "_width", n + "_n"});
      }
    }
    const auto a1 = std::find(algorithms.begin(), algorithms.end(), eqd::Algorithm::alg1);
    const auto a2 = std::find(algorithms.begin(), algorithms.end(), eqd::Algorithm::alg2);
    const bool ratio = intervals && a1 != algorithms.end() && a2 != algorithms.end();
    if (ratio) cols.push_back("width_ratio");
    auto& t = r.table("return_levels", cols);
    for (std::size_t k = 0; k < specs.size(); ++k) {
      std::vector<Value> row{num(xs[k]), num(specs[k].probability()),
                             num(specs[k].evaluate(m.threshold, m.exceed_prob, m.params))};
      std::vector<double> widths;
      for (const auto& res : results) {
        const auto& s = res[k];
        if (s.values.empty()) {
          row.insert(row.end(), {num(NAN), num(NAN), num(NAN), count(0)});
          widths.push_back(NAN);
          continue;
        }
        const auto ci = eqd::percentile_ci(s, level);
        row.insert(row.end(), {num(ci.lo), num(ci.hi), num(ci.width()), count(s.values.size())});
        widths.push_back(ci.width());
      }
      if (ratio)
        row.push_back(num(widths[static_cast<std::size_t>(a2 - algorithms.begin())] /
                          widths[static_cast<std::size_t>(a1 - algorithms.begin())]));
      t.add(std::move(row));
    }
    r.warnings = sel.warnings;
    emit(r, common);
  } else if (*simulate) {
    auto c = eqd::CaseSpec::parse(case_name);
    if (sim_sigma) c.sigma = *sim_sigma;
    if (sim_xi) c.xi = *sim_xi;
    if (sim_below) c.n_below = *sim_below;
    if (sim_above) c.n_above = *sim_above;
    if (sim_n) c.gaussian_n = *sim_n;
    eqd::GpdParams{c.sigma, c.xi};  // validates the overrides
    eqd::Stream rng = eqd::substream(common.seed, eqd::StreamTag::simulate, {0});
    const auto values = eqd::simulate_case(c, rng);
    Report r;
    auto& t = r.table("values", {"value"});
    for (double v : values) t.add({num(v)});
    emit(r, common);
  } else if (*diag) {
    const auto data = eqd::io::read_values(input);
    const auto spec = eqd::GridSpec::parse(sel_opts.grid);
    Report r;
    if (kind == "stability") {
      const auto grid = eqd::quantile_grid(data, spec);
      const auto curve = eqd::parameter_stability(data, grid, b1, level, sel_opts.boot(common));
      auto& t = r.table("stability", {"threshold", "n_excess", "xi", "ci_lo", "ci_hi"});
      for (const auto& row : curve.rows)
        t.add({num(row.threshold), count(row.n_excess), num(row.xi_hat), num(row.ci_lo), num(row.ci_hi)});
      for (const auto& s : curve.skipped)
        r.warnings.push_back("threshold " + eqd::io::format_number(s.threshold) + " skipped: " + s.reason);
    } else if (kind == "qq") {
      eqd::ThresholdModel m;
      if (diag_threshold) {
        eqd::FitOptions fo;
        fo.min_excess = sel_opts.min_excess;
        m = eqd::fit_threshold_model(data, *diag_threshold, fo);
      } else {
        m = eqd::select_threshold(data, eqd::quantile_grid(data, spec), sel_opts.config(common)).model;
      }
      if (!m.fit.usable()) throw eqd::NumericalError("GPD fit did not converge");
      const auto ex = eqd::excesses_over(data, m.threshold);
      const auto rows = eqd::qq_data(m.params, ex, n_sim, level,
                                     eqd::derive_seed(common.seed, eqd::StreamTag::qq_envelope, {0}),
                                     common.threads);
      auto& t = r.table("qq", {"plotting_prob", "model_q", "empirical_q", "tol_lo", "tol_hi"});
      for (const auto& q : rows)
        t.add({num(q.plotting_prob), num(q.model_q), num(q.empirical_q), num(q.tol_lo), num(q.tol_hi)});
    } else {
      eqd::ReturnLevelRange range{t_min, t_max, n_points, obs_per_year};
      const auto curve = eqd::return_level_curve(data, spec, sel_opts.config(common), range, b2, b1, level,
                                                 sel_opts.boot(common));
      auto& t = r.table("rl_curve", {"T", "point", "alg1_lo", "alg1_hi", "alg2_lo", "alg2_hi"});
      for (const auto& row : curve.rows)
        t.add({num(row.period), num(row.point), num(row.alg1_lo), num(row.alg1_hi), num(row.alg2_lo),
               num(row.alg2_hi)});
      r.warnings = curve.selection.warnings;
    }
    emit(r, common);
  } else if (*study) {
    auto sc = eqd::make_preset(eqd::CaseSpec::parse(case_name), eqd::parse_preset(preset));
    if (reps) sc.n_reps = *reps;
    if (study_grid) sc.grid = eqd::GridSpec::parse(*study_grid);
    if (study_b) sc.eqd.n_boot = *study_b;
    if (study_b1) sc.n_boot1 = *study_b1;
    if (study_b2) sc.n_boot2 = *study_b2;
    sc.algorithms = parse_algorithms(study_algs);
    sc.seed = common.seed;
    sc.threads = common.threads;
    eqd::StudyReport rep;
    if (parts == "all") rep = eqd::full_study(sc);
    else if (parts == "recovery") rep = eqd::recovery_study(sc);
    else if (parts == "threshold") rep = eqd::threshold_study(sc);
    else if (parts == "quantile") rep = eqd::quantile_study(sc);
    else rep = eqd::coverage_study(sc);
    if (!common.output.empty() && common.output != "-") print_study_table(rep, std::cout);
    emit(study_report(rep), common);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const eqd::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  } catch (const eqd::InfeasibleError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInfeasible;
  } catch (const eqd::NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}
