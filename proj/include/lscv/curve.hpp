#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <utility>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "lscv/types.hpp"

namespace lscv {

/// Vector-valued function of rescaled time u in [0, 1].
///
/// Derivatives in u are optional. When they are absent, d1/d2 fall back to
/// central differences with step 1e-4, shifted inward near the ends of [0, 1].
class ParamCurve {
 public:
  using Fn = std::function<Vec(double)>;

  static constexpr double kFdStep = 1e-4;

  ParamCurve(int dim, Fn value, Fn d1 = {}, Fn d2 = {})
      : dim_(dim), value_(std::move(value)), d1_(std::move(d1)), d2_(std::move(d2)) {
    if (dim_ <= 0 || dim_ > kMaxDim) throw ConfigError("curve dimension out of range");
    if (!value_) throw ConfigError("curve needs a value function");
  }

  int dim() const { return dim_; }
  Vec operator()(double u) const { return value_(u); }
  Vec eval(double u) const { return value_(u); }
  bool has_d1() const { return static_cast<bool>(d1_); }
  bool has_d2() const { return static_cast<bool>(d2_); }

  Vec d1(double u) const {
    if (d1_) return d1_(u);
    const double c = centre(u);
    return (value_(c + kFdStep) - value_(c - kFdStep)) / (2.0 * kFdStep);
  }

  Vec d2(double u) const {
    if (d2_) return d2_(u);
    const double c = centre(u);
    return (value_(c + kFdStep) - 2.0 * value_(c) + value_(c - kFdStep)) / (kFdStep * kFdStep);
  }

  static ParamCurve constant(const Vec& theta) {
    const int p = static_cast<int>(theta.size());
    Vec zero = Vec::Zero(p);
    return ParamCurve(
        p, [theta](double) { return theta; }, [zero](double) { return zero; },
        [zero](double) { return zero; });
  }

  /// Cubic B-spline through values sampled on the uniform grid u_i = i/(m-1).
  /// columns[j] holds the samples of coordinate j.
  static ParamCurve from_table(const std::vector<std::vector<double>>& columns) {
    if (columns.empty()) throw ConfigError("curve table: no columns");
    const std::size_t m = columns.front().size();
    if (m < 5) throw ConfigError("curve table: need at least 5 samples per column");
    using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;
    auto splines = std::make_shared<std::vector<Spline>>();
    const double step = 1.0 / static_cast<double>(m - 1);
    for (const auto& col : columns) {
      if (col.size() != m) throw ConfigError("curve table: columns differ in length");
      splines->emplace_back(col.begin(), col.end(), 0.0, step);
    }
    const int p = static_cast<int>(columns.size());
    auto clampu = [](double u) { return std::clamp(u, 0.0, 1.0); };
    return ParamCurve(
        p,
        [splines, p, clampu](double u) {
          Vec v(p);
          for (int j = 0; j < p; ++j) v[j] = (*splines)[j](clampu(u));
          return v;
        },
        [splines, p, clampu](double u) {
          Vec v(p);
          for (int j = 0; j < p; ++j) v[j] = (*splines)[j].prime(clampu(u));
          return v;
        },
        [splines, p, clampu](double u) {
          Vec v(p);
          for (int j = 0; j < p; ++j) v[j] = (*splines)[j].double_prime(clampu(u));
          return v;
        });
  }

 private:
  static double centre(double u) { return std::clamp(u, kFdStep, 1.0 - kFdStep); }

  int dim_;
  Fn value_;
  Fn d1_;
  Fn d2_;
};

namespace detail {

/// c0 + c1 sin(2 pi u) + c2 cos(2 pi u) with analytic derivatives.
struct Trig {
  double c0 = 0.0;
  double s = 0.0;
  double c = 0.0;

  double value(double u) const {
    const double w = 2.0 * std::numbers::pi * u;
    return c0 + s * std::sin(w) + c * std::cos(w);
  }
  double d1(double u) const {
    const double k = 2.0 * std::numbers::pi;
    return k * (s * std::cos(k * u) - c * std::sin(k * u));
  }
  double d2(double u) const {
    const double k = 2.0 * std::numbers::pi;
    return -k * k * (s * std::sin(k * u) + c * std::cos(k * u));
  }
};

inline ParamCurve trig_curve(std::vector<Trig> parts) {
  const int p = static_cast<int>(parts.size());
  return ParamCurve(
      p,
      [parts, p](double u) {
        Vec v(p);
        for (int j = 0; j < p; ++j) v[j] = parts[j].value(u);
        return v;
      },
      [parts, p](double u) {
        Vec v(p);
        for (int j = 0; j < p; ++j) v[j] = parts[j].d1(u);
        return v;
      },
      [parts, p](double u) {
        Vec v(p);
        for (int j = 0; j < p; ++j) v[j] = parts[j].d2(u);
        return v;
      });
}

}  // namespace detail

}  // namespace lscv
