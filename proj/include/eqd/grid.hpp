#pragma once

// Candidate threshold grids. A grid is usually a set of sample quantiles at
// equally spaced probabilities, written "start(increment)end" in percent,
// e.g. "0(5)95" for the 0%, 5%, ..., 95% sample quantiles.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eqd/empq.hpp"
#include "eqd/errors.hpp"

namespace eqd {

/// Strictly increasing candidate thresholds, each optionally tagged with the
/// sample-quantile probability it was generated from (NaN for raw values).
class CandidateGrid {
 public:
  CandidateGrid() = default;

  explicit CandidateGrid(std::vector<double> thresholds, std::vector<double> probabilities = {})
      : thresholds_(std::move(thresholds)), probabilities_(std::move(probabilities)) {
    if (probabilities_.empty())
      probabilities_.assign(thresholds_.size(), std::numeric_limits<double>::quiet_NaN());
    if (probabilities_.size() != thresholds_.size())
      throw InputError("grid probabilities and thresholds differ in length");
    for (std::size_t i = 0; i < thresholds_.size(); ++i) {
      if (!std::isfinite(thresholds_[i])) throw InputError("grid thresholds must be finite");
      if (i > 0 && !(thresholds_[i] > thresholds_[i - 1]))
        throw InputError("grid thresholds must be strictly increasing");
    }
  }

  std::size_t size() const { return thresholds_.size(); }
  bool empty() const { return thresholds_.empty(); }
  double operator[](std::size_t i) const { return thresholds_[i]; }
  std::span<const double> thresholds() const { return thresholds_; }
  /// Probability in [0, 1] behind candidate i, or NaN for raw thresholds.
  double probability(std::size_t i) const { return probabilities_[i]; }

  CandidateGrid scaled(double c) const {
    std::vector<double> t(thresholds_);
    for (auto& v : t) v *= c;
    return CandidateGrid(std::move(t), probabilities_);
  }

 private:
  std::vector<double> thresholds_;
  std::vector<double> probabilities_;
};

/// Parsed grid description: either sample-quantile probabilities or raw
/// thresholds in data units.
struct GridSpec {
  std::vector<double> probabilities;  // in [0, 1)
  std::vector<double> raw;            // data units
  bool is_raw = false;

  static GridSpec from_percents(double start, double step, double end);
  static GridSpec parse(std::string_view text);
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

inline std::vector<double> parse_list(std::string_view s, std::string_view what) {
  std::vector<double> out;
  while (true) {
    const auto comma = s.find(',');
    const auto item = s.substr(0, comma);
    const auto v = parse_number(item);
    if (!v) throw InputError("malformed " + std::string(what) + " entry '" + std::string(trim(item)) + "'");
    out.push_back(*v);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace detail

inline GridSpec GridSpec::from_percents(double start, double step, double end) {
  if (!(start >= 0.0 && start <= end && end < 100.0))
    throw InputError("grid range must satisfy 0 <= start <= end < 100");
  if (!(step > 0.0)) throw InputError("grid increment must be positive");
  GridSpec g;
  const auto count = static_cast<std::size_t>(std::floor((end - start) / step + 1e-9)) + 1;
  for (std::size_t k = 0; k < count; ++k)
    g.probabilities.push_back((start + static_cast<double>(k) * step) / 100.0);
  return g;
}

/// Grammar: "A(B)C" percent range, "p1,p2,..." percent list, or "@v1,v2,..."
/// raw thresholds.
inline GridSpec GridSpec::parse(std::string_view text) {
  auto s = detail::trim(text);
  if (s.empty()) throw InputError("empty grid specification");
  if (s.front() == '@') {
    GridSpec g;
    g.is_raw = true;
    g.raw = detail::parse_list(s.substr(1), "threshold");
    for (std::size_t i = 1; i < g.raw.size(); ++i)
      if (!(g.raw[i] > g.raw[i - 1])) throw InputError("raw thresholds must be strictly increasing");
    return g;
  }
  const auto open = s.find('(');
  if (open != std::string_view::npos) {
    const auto close = s.find(')', open);
    if (close == std::string_view::npos) throw InputError("malformed grid specification '" + std::string(s) + "'");
    const auto a = detail::parse_number(s.substr(0, open));
    const auto b = detail::parse_number(s.substr(open + 1, close - open - 1));
    const auto c = detail::parse_number(s.substr(close + 1));
    if (!a || !b || !c) throw InputError("malformed grid specification '" + std::string(s) + "'");
    return from_percents(*a, *b, *c);
  }
  GridSpec g;
  for (double pct : detail::parse_list(s, "grid percent")) {
    if (!(pct >= 0.0 && pct < 100.0)) throw InputError("grid percents must lie in [0, 100)");
    if (!g.probabilities.empty() && !(pct / 100.0 > g.probabilities.back()))
      throw InputError("grid percents must be strictly increasing");
    g.probabilities.push_back(pct / 100.0);
  }
  return g;
}

/// Candidate thresholds for `data` under `spec`. Quantile-based grids are
/// evaluated with the interpolated sample quantile function on all the data;
/// repeated thresholds are dropped, keeping the first.
inline CandidateGrid quantile_grid(std::span<const double> data, const GridSpec& spec) {
  if (spec.is_raw) return CandidateGrid(spec.raw);
  if (spec.probabilities.empty()) throw InputError("grid specification has no probabilities");
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.size() < 2) throw InputError("quantile grid needs at least two data values");
  std::vector<double> t, p;
  for (double prob : spec.probabilities) {
    const double q = sample_quantile_sorted(prob, sorted);
    if (!t.empty() && !(q > t.back())) continue;
    t.push_back(q);
    p.push_back(prob);
  }
  return CandidateGrid(std::move(t), std::move(p));
}

}  // namespace eqd
