#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "lscv/curve.hpp"
#include "lscv/model.hpp"
#include "lscv/rng.hpp"
#include "lscv/types.hpp"

namespace lscv {

/// Warm-up steps run with the curve frozen at u = 0 before t = 1.
inline constexpr std::size_t kBurnIn = 500;

/// One realization X_{1,n}, ..., X_{n,n} of a triangular array.
struct SimulatedSeries {
  std::vector<double> values;
  /// eps_1..eps_n, filled only when requested.
  std::vector<double> innovations;
  ModelSpec spec;
  ParamCurve curve;
  StreamSeed seed;

  std::size_t n() const { return values.size(); }
};

namespace detail {

inline void check_theta(const ModelSpec& spec, const Vec& theta, double u) {
  const auto where = " at u=" + std::to_string(u);
  if (theta.size() != spec.dim()) throw ConfigError(spec.name() + ": curve dimension does not match the model");
  for (int i = 0; i < theta.size(); ++i) {
    if (!std::isfinite(theta[i])) throw ConfigError(spec.name() + ": non-finite curve value" + where);
  }
  switch (spec.family) {
    case Family::TvAR:
    case Family::TvMA1:
    case Family::TvTAR1:
      if (!(theta[theta.size() - 1] > 0.0)) throw ConfigError(spec.name() + ": sigma must be positive" + where);
      break;
    case Family::TvARCH:
      if (!(theta[0] >= kRhoMin)) throw ConfigError(spec.name() + ": a_0 below rho_min" + where);
      for (int i = 1; i < theta.size(); ++i) {
        if (theta[i] < 0.0) throw ConfigError(spec.name() + ": negative ARCH coefficient" + where);
      }
      break;
  }
  if (!spec.theta_box.contains(theta)) throw ConfigError(spec.name() + ": curve leaves the parameter box" + where);
}

/// Runs the recursion; theta_at(t) must return the parameter for index t,
/// where t <= 0 denotes burn-in.
template <class ThetaAt>
SimulatedSeries run_recursion(const ModelSpec& spec, const ParamCurve& curve, ThetaAt theta_at, std::size_t n,
                              StreamSeed seed, bool keep_innovations) {
  spec.validate();
  SimulatedSeries out{{}, {}, spec, curve, seed};
  out.values.resize(n);
  if (keep_innovations) out.innovations.resize(n);

  Philox4x32 eng = seed.engine();
  InnovationSampler draw(spec.innovation);
  const int r = spec.family == Family::TvTAR1 || spec.family == Family::TvMA1 ? 1 : spec.order;
  std::vector<double> lag(static_cast<std::size_t>(r), 0.0);  // lag[j] = X_{t-1-j}
  double prev_eps = 0.0;
  double prev_sigma = 0.0;

  const auto total = static_cast<long long>(kBurnIn + n);
  for (long long step = 0; step < total; ++step) {
    const long long t = step - static_cast<long long>(kBurnIn) + 1;
    const Vec theta = theta_at(t);
    const double eps = draw(eng);
    double x = 0.0;
    switch (spec.family) {
      case Family::TvAR: {
        for (int j = 0; j < r; ++j) x += theta[j] * lag[static_cast<std::size_t>(j)];
        x += theta[r] * eps;
        break;
      }
      case Family::TvMA1: {
        x = theta[1] * eps + theta[0] * prev_sigma * prev_eps;
        prev_sigma = theta[1];
        break;
      }
      case Family::TvARCH: {
        double v = theta[0];
        for (int j = 0; j < r; ++j) v += theta[j + 1] * lag[static_cast<std::size_t>(j)] * lag[static_cast<std::size_t>(j)];
        x = std::sqrt(v) * eps;
        break;
      }
      case Family::TvTAR1: {
        const double y = lag[0];
        x = theta[0] * std::max(y, 0.0) + theta[1] * std::max(-y, 0.0) + theta[2] * eps;
        break;
      }
    }
    prev_eps = eps;
    if (!std::isfinite(x)) throw NumericalError(spec.name() + ": simulation diverged at t=" + std::to_string(t));
    for (int j = r - 1; j > 0; --j) lag[static_cast<std::size_t>(j)] = lag[static_cast<std::size_t>(j - 1)];
    lag[0] = x;
    if (t >= 1) {
      out.values[static_cast<std::size_t>(t - 1)] = x;
      if (keep_innovations) out.innovations[static_cast<std::size_t>(t - 1)] = eps;
    }
  }
  return out;
}

inline void check_stability(const ModelSpec& spec, const std::vector<Vec>& thetas) {
  if (spec.family == Family::TvARCH) {
    double sum = 0.0;
    for (int i = 1; i <= spec.order; ++i) {
      double sup = 0.0;
      for (const auto& th : thetas) sup = std::max(sup, th[i]);
      sum += sup;
    }
    if (!(sum < 1.0)) throw ConfigError("tvARCH: sum of sup a_i must be below 1");
  }
  if (spec.family == Family::TvTAR1) {
    for (const auto& th : thetas) {
      if (!(std::max(std::abs(th[0]), std::abs(th[1])) < 1.0)) throw ConfigError("tvTAR1: |a_1| or |a_2| reaches 1");
    }
  }
}

inline SimulatedSeries simulate_curve(const ModelSpec& spec, const ParamCurve& curve, std::size_t n, StreamSeed seed,
                                      bool keep_innovations) {
  if (n == 0) throw ConfigError("series length n must be positive");
  const double nd = static_cast<double>(n);
  std::vector<Vec> thetas(n + 1);
  for (std::size_t t = 0; t <= n; ++t) {
    const double u = static_cast<double>(t) / nd;
    thetas[t] = curve(u);
    check_theta(spec, thetas[t], u);
  }
  check_stability(spec, thetas);
  return run_recursion(
      spec, curve, [&](long long t) -> const Vec& { return thetas[static_cast<std::size_t>(std::max(t, 0LL))]; }, n,
      seed, keep_innovations);
}

inline void require_family(const ModelSpec& spec, Family f) {
  if (spec.family != f) throw ConfigError("model family mismatch: expected " + to_string(f) + ", got " + spec.name());
}

}  // namespace detail

/// X_t = sum_j alpha_j(t/n) X_{t-j} + sigma(t/n) eps_t.
inline SimulatedSeries simulate_tvar(const ModelSpec& spec, const ParamCurve& curve, std::size_t n, StreamSeed seed,
                                     bool keep_innovations = false) {
  detail::require_family(spec, Family::TvAR);
  return detail::simulate_curve(spec, curve, n, seed, keep_innovations);
}

/// X_t = sigma(t/n) eps_t + alpha(t/n) sigma((t-1)/n) eps_{t-1}.
inline SimulatedSeries simulate_tvma1(const ModelSpec& spec, const ParamCurve& curve, std::size_t n, StreamSeed seed,
                                      bool keep_innovations = false) {
  detail::require_family(spec, Family::TvMA1);
  return detail::simulate_curve(spec, curve, n, seed, keep_innovations);
}

/// X_t = (a_0(t/n) + sum_i a_i(t/n) X_{t-i}^2)^{1/2} eps_t.
inline SimulatedSeries simulate_tvarch(const ModelSpec& spec, const ParamCurve& curve, std::size_t n, StreamSeed seed,
                                       bool keep_innovations = false) {
  detail::require_family(spec, Family::TvARCH);
  return detail::simulate_curve(spec, curve, n, seed, keep_innovations);
}

/// X_t = a_1(t/n) X_{t-1}^+ + a_2(t/n) X_{t-1}^- + sigma(t/n) eps_t.
inline SimulatedSeries simulate_tvtar1(const ModelSpec& spec, const ParamCurve& curve, std::size_t n, StreamSeed seed,
                                       bool keep_innovations = false) {
  detail::require_family(spec, Family::TvTAR1);
  return detail::simulate_curve(spec, curve, n, seed, keep_innovations);
}

inline SimulatedSeries simulate(const ModelSpec& spec, const ParamCurve& curve, std::size_t n, StreamSeed seed,
                                bool keep_innovations = false) {
  return detail::simulate_curve(spec, curve, n, seed, keep_innovations);
}

/// Stationary process with theta frozen; same burn-in and stream layout as
/// simulate(), so a constant curve reproduces it element-wise.
inline SimulatedSeries simulate_stationary(const ModelSpec& spec, const Vec& theta, std::size_t n, StreamSeed seed,
                                           bool keep_innovations = false) {
  if (n == 0) throw ConfigError("series length n must be positive");
  detail::check_theta(spec, theta, 0.0);
  detail::check_stability(spec, {theta});
  return detail::run_recursion(
      spec, ParamCurve::constant(theta), [&](long long) -> const Vec& { return theta; }, n, seed, keep_innovations);
}

}  // namespace lscv
