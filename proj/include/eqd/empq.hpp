#pragma once

// Empirical quantile function: linear interpolation through the points
// (q_i, x_(i)) with q_i = (i - 1) / (n - 1).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "eqd/errors.hpp"
#include "eqd/rng.hpp"

namespace eqd {

/// An ascending sample with at least two values. Ties are kept as separate
/// interpolation nodes, which gives flat segments between equal values.
class SortedSample {
 public:
  explicit SortedSample(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) throw InputError("quantile function needs at least two values");
    std::sort(values_.begin(), values_.end());
  }

  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }

 private:
  std::vector<double> values_;
};

inline std::vector<double> plotting_points(std::size_t n) {
  if (n < 2) throw InputError("plotting points need n >= 2");
  std::vector<double> q(n);
  const double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) q[i] = static_cast<double>(i) / denom;
  q.back() = 1.0;
  return q;
}

namespace detail {

// Caller guarantees sorted.size() >= 2 and p in [0, 1].
inline double interpolate_sorted(double p, std::span<const double> sorted) {
  const std::size_t last = sorted.size() - 1;
  double h = p * static_cast<double>(last);
  // Snap rounding noise so plotting points hit their order statistics exactly.
  const double r = std::round(h);
  if (std::abs(h - r) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, r)) h = r;
  const auto i = static_cast<std::size_t>(h);
  if (i >= last) return sorted[last];
  const double frac = h - static_cast<double>(i);
  if (frac == 0.0) return sorted[i];
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

}  // namespace detail

inline double sample_quantile(double p, const SortedSample& s) {
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("sample quantile probability outside [0, 1]");
  return detail::interpolate_sorted(p, s.values());
}

/// Same as above for data already known to be sorted ascending.
inline double sample_quantile_sorted(double p, std::span<const double> sorted) {
  if (sorted.size() < 2) throw InputError("quantile function needs at least two values");
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("sample quantile probability outside [0, 1]");
  return detail::interpolate_sorted(p, sorted);
}

inline std::vector<double> resample_with_replacement(std::span<const double> s, Stream& rng) {
  if (s.empty()) throw InputError("cannot resample an empty sample");
  std::vector<double> out(s.size());
  for (auto& v : out) v = s[rng.index(s.size())];
  return out;
}

/// Bootstrap resample of an ascending sample, returned as distinct values with
/// multiplicities (still ascending). Uses the same draws as
/// resample_with_replacement, so the expanded result is its sorted version.
struct WeightedSample {
  std::vector<double> values;
  std::vector<double> counts;
  std::size_t total = 0;

  std::vector<double> expanded() const {
    std::vector<double> out;
    out.reserve(total);
    for (std::size_t k = 0; k < values.size(); ++k)
      out.insert(out.end(), static_cast<std::size_t>(counts[k]), values[k]);
    return out;
  }
};

inline WeightedSample resample_sorted_counts(std::span<const double> sorted, Stream& rng) {
  if (sorted.empty()) throw InputError("cannot resample an empty sample");
  std::vector<unsigned> hits(sorted.size(), 0);
  for (std::size_t i = 0; i < sorted.size(); ++i) ++hits[rng.index(sorted.size())];
  WeightedSample w;
  w.total = sorted.size();
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (hits[k] == 0) continue;
    // Equal neighbouring values merge into one node.
    if (!w.values.empty() && w.values.back() == sorted[k]) {
      w.counts.back() += hits[k];
    } else {
      w.values.push_back(sorted[k]);
      w.counts.push_back(hits[k]);
    }
  }
  return w;
}

}  // namespace eqd
