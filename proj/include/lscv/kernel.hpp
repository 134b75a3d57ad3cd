#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "lscv/types.hpp"

namespace lscv {

/// Symmetric kernel supported on [-1/2, 1/2] together with the two moments
/// that enter the bias-variance decomposition.
class Kernel {
 public:
  using Fn = double (*)(double);

  Kernel(std::string name, Fn fn, double mu_k, double d_k, double lipschitz)
      : name_(std::move(name)), fn_(fn), mu_k_(mu_k), d_k_(d_k), lipschitz_(lipschitz) {}

  double operator()(double x) const { return fn_(x); }
  double evaluate(double x) const { return fn_(x); }

  /// Integral of K^2.
  double mu_k() const { return mu_k_; }
  /// Integral of x^2 K(x).
  double d_k() const { return d_k_; }
  double lipschitz() const { return lipschitz_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  Fn fn_;
  double mu_k_;
  double d_k_;
  double lipschitz_;
};

namespace detail {
inline double epanechnikov_fn(double x) {
  if (std::abs(x) >= 0.5) return 0.0;
  return 1.5 * (1.0 - 4.0 * x * x);
}
}  // namespace detail

/// K(x) = 3/2 (1 - (2x)^2) on [-1/2, 1/2].
inline Kernel epanechnikov() {
  return Kernel("epanechnikov", &detail::epanechnikov_fn, 6.0 / 5.0, 1.0 / 20.0, 6.0);
}

/// Nonzero part of the localizing weights K_h(t/n - u) for t = 1..n.
///
/// Indices are 1-based to match the observation index t. Entries outside
/// [first, last()] are zero.
struct KernelWindow {
  std::size_t first = 1;
  std::vector<double> weights;

  bool empty() const { return weights.empty(); }
  std::size_t last() const { return first + weights.size() - 1; }
  double weight(std::size_t t) const {
    if (weights.empty() || t < first || t > last()) return 0.0;
    return weights[t - first];
  }
};

inline void check_bandwidth(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("bandwidth h must be positive, got " + std::to_string(h));
}

inline KernelWindow make_window(const Kernel& kernel, std::size_t n, double u, double h) {
  check_bandwidth(h);
  KernelWindow w;
  if (n == 0) return w;
  const double nd = static_cast<double>(n);
  // Support of K_h(t/n - u) is |t/n - u| < h/2.
  const double lo = std::floor(nd * (u - 0.5 * h));
  const double hi = std::ceil(nd * (u + 0.5 * h));
  const auto first = static_cast<std::size_t>(std::max(1.0, lo));
  const auto last = static_cast<std::size_t>(std::min(nd, std::max(hi, 0.0)));
  std::size_t t0 = 0;
  for (std::size_t t = first; t <= last; ++t) {
    const double k = kernel((static_cast<double>(t) / nd - u) / h) / h;
    if (k > 0.0) {
      if (w.weights.empty()) t0 = t;
      // Interior zeros cannot occur for a unimodal kernel, so the run is contiguous.
      w.weights.resize(t - t0 + 1, 0.0);
      w.weights[t - t0] = k;
    }
  }
  w.first = w.weights.empty() ? 1 : t0;
  return w;
}

/// Full weight vector: entry t-1 equals (1/h) K((t/n - u)/h).
inline std::vector<double> kernel_weights(const Kernel& kernel, std::size_t n, double u, double h) {
  const KernelWindow w = make_window(kernel, n, u, h);
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < w.weights.size(); ++i) out[w.first - 1 + i] = w.weights[i];
  return out;
}

/// Indicator weight 1_{[a,b]} on rescaled time.
class WeightFn {
 public:
  WeightFn(double a, double b) : a_(a), b_(b) {}

  double a() const { return a_; }
  double b() const { return b_; }
  double length() const { return b_ - a_; }
  double operator()(double u) const { return contains(u) ? 1.0 : 0.0; }
  bool contains(double u) const { return u >= a_ && u <= b_; }

  /// Observation indices t (1-based) with t/n inside the support.
  std::vector<std::size_t> support_points(std::size_t n) const {
    std::vector<std::size_t> out;
    const double nd = static_cast<double>(n);
    for (std::size_t t = 1; t <= n; ++t) {
      if (contains(static_cast<double>(t) / nd)) out.push_back(t);
    }
    return out;
  }

 private:
  double a_;
  double b_;
};

inline WeightFn make_weight(double a, double b) {
  if (!(a >= 0.0 && b <= 1.0 && a < b)) {
    throw ConfigError("weight support must satisfy 0 <= a < b <= 1");
  }
  return {a, b};
}

/// Finite set of candidate bandwidths inside (0, 1).
class BandwidthGrid {
 public:
  explicit BandwidthGrid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.empty()) throw ConfigError("bandwidth grid needs at least one point");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (!(points_[i] > 0.0 && points_[i] <= 1.0)) throw ConfigError("bandwidth grid points must lie in (0, 1]");
      if (i > 0 && !(points_[i] > points_[i - 1])) throw ConfigError("bandwidth grid must be strictly increasing");
    }
  }

  static BandwidthGrid log_spaced(double h_min, double h_max, std::size_t count = 40) {
    if (count == 0) throw ConfigError("bandwidth grid needs at least one point");
    if (!(h_min > 0.0 && h_max >= h_min)) throw ConfigError("bandwidth grid needs 0 < h_min <= h_max");
    if (count == 1) return BandwidthGrid({h_min});
    if (h_max == h_min) throw ConfigError("bandwidth grid with several points needs h_min < h_max");
    std::vector<double> pts(count);
    const double step = std::log(h_max / h_min) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) pts[i] = h_min * std::exp(step * static_cast<double>(i));
    pts.front() = h_min;
    pts.back() = h_max;
    return BandwidthGrid(std::move(pts));
  }

  double h_min() const { return points_.front(); }
  double h_max() const { return points_.back(); }
  std::size_t size() const { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }
  const std::vector<double>& points() const { return points_; }

  /// Index of the grid point closest to h on the log scale; ties go to the smaller point.
  std::size_t nearest(double h) const {
    std::size_t best = 0;
    double best_d = std::abs(std::log(points_[0] / h));
    for (std::size_t i = 1; i < points_.size(); ++i) {
      const double d = std::abs(std::log(points_[i] / h));
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }

 private:
  std::vector<double> points_;
};

}  // namespace lscv
