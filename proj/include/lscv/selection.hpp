#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lscv/curve.hpp"
#include "lscv/estimator.hpp"
#include "lscv/info.hpp"
#include "lscv/kernel.hpp"
#include "lscv/likelihood.hpp"
#include "lscv/model.hpp"
#include "lscv/parallel.hpp"
#include "lscv/types.hpp"

namespace lscv {

/// CV(h) together with the full-sample fit it was built from.
struct BandwidthEvaluation {
  double h = 0.0;
  /// (1/n) sum_s ell_s(theta_hat_{h,-s}(s/n)) w(s/n); +inf when poisoned.
  double cv = 0.0;
  /// Some leave-one-out solve failed, so CV(h) is unusable.
  bool poisoned = false;
  std::size_t loo_failures = 0;
  LocalFit fit;
};

/// Evaluates CV(h) exactly: one leave-one-out solve per support point s,
/// each warm-started at theta_hat_h(s/n).
template <class Obj>
BandwidthEvaluation evaluate_bandwidth(const Obj& obj, std::span<const double> xs, const Kernel& kernel,
                                       const WeightFn& weight, double h, const Box& box,
                                       const EstimatorOptions& opt = {}) {
  BandwidthEvaluation ev;
  ev.h = h;
  ev.fit = fit_curve(obj, xs, kernel, h, weight, box, opt);
  double sum = 0.0;
  for (std::size_t i = 0; i < ev.fit.size(); ++i) {
    const std::size_t s = ev.fit.indices[i];
    const LocalEstimate loo = fit_leave_one_out(obj, xs, kernel, h, s, box, opt, ev.fit.estimates[i]);
    if (!loo.diag.converged) {
      ++ev.loo_failures;
      continue;
    }
    sum += term_value(obj, xs, s, loo.theta);
  }
  ev.poisoned = ev.loo_failures > 0 || !std::isfinite(sum);
  ev.cv = ev.poisoned ? std::numeric_limits<double>::infinity() : sum / static_cast<double>(xs.size());
  return ev;
}

inline BandwidthEvaluation evaluate_bandwidth(const AnyObjective& obj, std::span<const double> xs, const Kernel& kernel,
                                              const WeightFn& weight, double h, const Box& box,
                                              const EstimatorOptions& opt = {}) {
  return std::visit([&](const auto& o) { return evaluate_bandwidth(o, xs, kernel, weight, h, box, opt); }, obj);
}

/// CV(h); an empty weight support gives the empty sum 0.
template <class Obj>
double cv_functional(const Obj& obj, std::span<const double> xs, const Kernel& kernel, const WeightFn& weight, double h,
                     const Box& box, const EstimatorOptions& opt = {}) {
  return evaluate_bandwidth(obj, xs, kernel, weight, h, box, opt).cv;
}

/// Grid index of the smallest finite value; ties go to the smaller h.
inline std::size_t select_from_values(std::span<const double> cv_values) {
  std::size_t best = cv_values.size();
  for (std::size_t i = 0; i < cv_values.size(); ++i) {
    if (!std::isfinite(cv_values[i])) continue;
    if (best == cv_values.size() || cv_values[i] < cv_values[best]) best = i;
  }
  if (best == cv_values.size()) throw NumericalError("no bandwidth on the grid has a finite criterion value");
  return best;
}

/// Outputs of the bandwidth search over one series.
struct SelectionReport {
  std::vector<double> grid;
  std::vector<double> cv_values;
  std::vector<char> poisoned;
  std::vector<std::size_t> loo_failures;
  std::size_t n = 0;
  std::size_t h_hat_index = 0;
  double h_hat = 0.0;
  /// Filled when the true curve is known.
  std::vector<double> d_A_values;
  std::optional<std::size_t> h_star_index;
  std::optional<double> h_star;
  /// Filled when the plug-in bandwidth is available.
  std::optional<double> h_0;
  std::optional<double> V0;
  std::optional<double> B0;
  /// Full-sample fits, one per grid point.
  std::vector<LocalFit> fits;
};

/// Evaluates CV on every grid point (concurrently over h when workers > 1)
/// and returns the grid argmin as h_hat.
inline SelectionReport select_bandwidth(const AnyObjective& obj, std::span<const double> xs, const Kernel& kernel,
                                        const WeightFn& weight, const BandwidthGrid& grid, const Box& box,
                                        const EstimatorOptions& opt = {}, unsigned workers = 1) {
  std::vector<BandwidthEvaluation> evals(grid.size());
  parallel_for(grid.size(), workers,
               [&](std::size_t i) { evals[i] = evaluate_bandwidth(obj, xs, kernel, weight, grid[i], box, opt); });
  SelectionReport rep;
  rep.n = xs.size();
  rep.grid = grid.points();
  for (auto& ev : evals) {
    rep.cv_values.push_back(ev.cv);
    rep.poisoned.push_back(ev.poisoned ? 1 : 0);
    rep.loo_failures.push_back(ev.loo_failures);
    rep.fits.push_back(std::move(ev.fit));
  }
  rep.h_hat_index = select_from_values(rep.cv_values);
  rep.h_hat = rep.grid[rep.h_hat_index];
  return rep;
}

/// theta_0(t/n) and V(theta_0(t/n)) at the weighted observation times.
struct TruthTable {
  std::size_t n = 0;
  std::vector<std::size_t> indices;
  std::vector<Vec> theta;
  std::vector<Mat> V;
};

inline TruthTable make_truth(const ParamCurve& truth, const InfoMatrices& info, const WeightFn& weight, std::size_t n,
                             unsigned workers = 1) {
  TruthTable tt;
  tt.n = n;
  tt.indices = weight.support_points(n);
  tt.theta.resize(tt.indices.size());
  tt.V.resize(tt.indices.size());
  parallel_for(tt.indices.size(), workers, [&](std::size_t i) {
    const double u = static_cast<double>(tt.indices[i]) / static_cast<double>(n);
    tt.theta[i] = truth(u);
    tt.V[i] = info.V(tt.theta[i]);
  });
  return tt;
}

/// d_A = (1/n) sum_t |theta_hat(t/n) - theta_0(t/n)|^2_{V(theta_0(t/n))} w(t/n).
inline double distance_dA(const LocalFit& fit, const TruthTable& truth) {
  if (fit.n != truth.n || fit.indices != truth.indices) {
    throw ConfigError("fit and truth do not share evaluation points");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < fit.size(); ++i) {
    const Vec d = fit.estimates[i] - truth.theta[i];
    sum += d.dot(truth.V[i] * d);
  }
  return sum / static_cast<double>(fit.n);
}

inline double distance_dA(const LocalFit& fit, const ParamCurve& truth, const InfoMatrices& info,
                          const WeightFn& weight) {
  return distance_dA(fit, make_truth(truth, info, weight, fit.n));
}

/// Fills d_A_values and the grid-optimal h_star.
inline void attach_oracle(SelectionReport& rep, const TruthTable& truth) {
  rep.d_A_values.clear();
  for (const auto& fit : rep.fits) rep.d_A_values.push_back(distance_dA(fit, truth));
  std::size_t best = 0;
  for (std::size_t i = 1; i < rep.d_A_values.size(); ++i) {
    if (rep.d_A_values[i] < rep.d_A_values[best]) best = i;
  }
  rep.h_star_index = best;
  rep.h_star = rep.grid[best];
}

/// d_M**(h) = mu_K V0 / (n h) + h^4 / 4 d_K^2 B0.
inline double dM_star_star(double h, std::size_t n, double V0, double B0, const Kernel& kernel) {
  if (!(h > 0.0)) throw ConfigError("dM_star_star: h must be positive");
  const double dk = kernel.d_k();
  return kernel.mu_k() * V0 / (static_cast<double>(n) * h) + 0.25 * std::pow(h, 4) * dk * dk * B0;
}

/// Integrated squared bias below this counts as degenerate.
inline constexpr double kDegenerateBias = 1e-12;

/// h0 = (V0 mu_K / (B0 d_K^2))^{1/5} n^{-1/5}, the minimizer of d_M**.
inline double h0_formula(double V0, double B0, std::size_t n, const Kernel& kernel) {
  if (!(B0 > kDegenerateBias)) throw DegenerateBias("integrated squared bias B0 vanishes; d_M** has no finite minimizer");
  if (!(V0 > 0.0) || !std::isfinite(V0)) throw NumericalError("V0 must be positive and finite for the plug-in bandwidth");
  const double dk = kernel.d_k();
  return std::pow(V0 * kernel.mu_k() / (B0 * dk * dk), 0.2) * std::pow(static_cast<double>(n), -0.2);
}

struct PluginResult {
  double V0 = 0.0;
  double B0 = 0.0;
  double h0 = 0.0;
};

namespace detail {

inline double ar1_bias_integrand(const Vec& th, const Vec& d1, const Vec& d2) {
  const double a = th[0], s = th[1];
  const double da = d1[0], ds = d1[1];
  const double dda = d2[0], dds = d2[1];
  const double q = 1.0 - a * a;
  const double ta = dda + 4.0 * (a * da * da / q + da * ds / s);
  const double ts = dds + s * (da * da / q + (ds / s) * (ds / s));
  return ta * ta / q + 2.0 / (s * s) * ts * ts;
}

inline double ma1_bias_integrand(const Vec& th, const Vec& d1, const Vec& d2) {
  const double a = th[0], s = th[1];
  const double da = d1[0], ds = d1[1];
  const double dda = d2[0], dds = d2[1];
  const double q = 1.0 - a * a;
  const double ta = dda + 2.0 * (-a * da * da / q + 2.0 * da * ds / s);
  const double ts = dds + s * (da * da / q + (ds / s) * (ds / s));
  return ta * ta / q + 2.0 / (s * s) * ts * ts;
}

/// Composite Simpson rule on values at equally spaced nodes (odd count).
inline double simpson_values(double a, double b, const std::vector<double>& values) {
  const std::size_t m = values.size() - 1;
  const double step = (b - a) / static_cast<double>(m);
  double sum = values.front() + values.back();
  for (std::size_t i = 1; i < m; ++i) sum += (i % 2 == 1 ? 4.0 : 2.0) * values[i];
  return sum * step / 3.0;
}

}  // namespace detail

/// Composite Simpson rule for f on [a, b] with `points` nodes (odd, >= 3).
template <class Fn>
double simpson(Fn&& f, double a, double b, std::size_t points = 2001) {
  if (points < 3 || points % 2 == 0) throw ConfigError("Simpson rule needs an odd number of nodes >= 3");
  std::vector<double> v(points);
  const double step = (b - a) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) v[i] = f(a + step * static_cast<double>(i));
  return detail::simpson_values(a, b, v);
}

/// Quadrature nodes for V0 and B0 over the weight support.
inline constexpr std::size_t kPluginNodes = 2001;
/// Step of the central difference for P(u) = d/du V(theta_0(u)) in tvARCH.
inline constexpr double kArchPStep = 1e-3;

/// V0 = int tr(V^{-1} I) w du and B0 = int |bias(u)|^2 w du by Simpson's rule.
inline PluginResult plugin_constants(const ParamCurve& truth, const InfoMatrices& info, const WeightFn& weight,
                                     unsigned workers = 1) {
  const ModelSpec& spec = info.spec();
  const bool ar1 = spec.family == Family::TvAR && spec.order == 1;
  const bool ma1 = spec.family == Family::TvMA1;
  const bool arch = spec.family == Family::TvARCH;
  if (!(ar1 || ma1 || arch)) throw ConfigError(spec.name() + ": no plug-in bandwidth for this family");
  const double a = weight.a(), b = weight.b();
  const std::size_t m = kPluginNodes;
  const double step = (b - a) / static_cast<double>(m - 1);
  std::vector<double> trace(m), bias(m);
  parallel_for(m, workers, [&](std::size_t i) {
    const double u = a + step * static_cast<double>(i);
    const Vec th = truth(u);
    const Vec d1 = truth.d1(u);
    const Vec d2 = truth.d2(u);
    const InfoPair here = info.at(th);
    trace[i] = InfoMatrices::trace_vinv_i(here);
    if (ar1) {
      bias[i] = detail::ar1_bias_integrand(th, d1, d2);
    } else if (ma1) {
      bias[i] = detail::ma1_bias_integrand(th, d1, d2);
    } else {
      // |theta'' + 2 V^{-1} P theta'|_V^2 with P from common-random-number differences.
      const double lo = std::max(0.0, u - kArchPStep);
      const double hi = std::min(1.0, u + kArchPStep);
      const Mat P = (info.V(truth(hi)) - info.V(truth(lo))) / (hi - lo);
      const Vec g = d2 + 2.0 * here.V.ldlt().solve(P * d1);
      bias[i] = g.dot(here.V * g);
    }
  });
  PluginResult res;
  res.V0 = detail::simpson_values(a, b, trace);
  res.B0 = detail::simpson_values(a, b, bias);
  return res;
}

/// Asymptotically optimal bandwidth h0 for sample size n.
inline PluginResult plugin_h0(const ParamCurve& truth, const Kernel& kernel, const WeightFn& weight, std::size_t n,
                              const InfoMatrices& info, unsigned workers = 1) {
  PluginResult res = plugin_constants(truth, info, weight, workers);
  res.h0 = h0_formula(res.V0, res.B0, n, kernel);
  return res;
}

/// Pseudo-true tvAR(1) curve when tvMA(1) or tvARCH(1) data are fitted with tvAR(1):
///   tvMA(1):   alpha_ms = alpha / (1 + alpha^2),
///              sigma_ms = sigma ((1 + alpha^2 + alpha^4) / (1 + alpha^2))^{1/2}
///   tvARCH(1): alpha_ms = 0, sigma_ms = (a_0 / (1 - a_1))^{1/2}
inline ParamCurve misspecified_target(const ModelSpec& source, const ParamCurve& curve) {
  if (source.family == Family::TvMA1) {
    return ParamCurve(2, [curve](double u) {
      const Vec th = curve(u);
      const double a2 = th[0] * th[0];
      Vec out(2);
      out[0] = th[0] / (1.0 + a2);
      out[1] = th[1] * std::sqrt((1.0 + a2 + a2 * a2) / (1.0 + a2));
      return out;
    });
  }
  if (source.family == Family::TvARCH && source.order == 1) {
    return ParamCurve(2, [curve](double u) {
      const Vec th = curve(u);
      Vec out(2);
      out[0] = 0.0;
      out[1] = std::sqrt(th[0] / (1.0 - th[1]));
      return out;
    });
  }
  throw ConfigError("misspecified target defined only for tvMA(1) and tvARCH(1) sources");
}

}  // namespace lscv
