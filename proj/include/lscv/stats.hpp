#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "lscv/types.hpp"

namespace lscv {

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7).
inline double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) throw ConfigError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("quantile level must lie in [0, 1]");
  std::sort(xs.begin(), xs.end());
  const double pos = p * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

inline double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

/// The five levels drawn in a box plot: whiskers at 5% and 95%.
struct BoxStats {
  double q05 = 0.0;
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
  double q95 = 0.0;
};

inline BoxStats box_stats(const std::vector<double>& xs) {
  return {quantile(xs, 0.05), quantile(xs, 0.25), quantile(xs, 0.5), quantile(xs, 0.75), quantile(xs, 0.95)};
}

/// Equal-width histogram over [lo, hi]; the last bin is closed on the right
/// and values outside the range are not counted.
struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
};

inline Histogram histogram(std::span<const double> xs, double lo, double hi, std::size_t bins) {
  if (bins == 0 || !(hi > lo)) throw ConfigError("histogram needs at least one bin and lo < hi");
  Histogram h;
  h.counts.assign(bins, 0);
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
  h.edges.back() = hi;
  for (double x : xs) {
    if (!(x >= lo && x <= hi)) continue;
    auto k = static_cast<std::size_t>((x - lo) / width);
    k = std::min(k, bins - 1);
    ++h.counts[k];
  }
  return h;
}

}  // namespace lscv
