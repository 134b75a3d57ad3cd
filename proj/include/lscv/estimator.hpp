#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "lscv/kernel.hpp"
#include "lscv/likelihood.hpp"
#include "lscv/model.hpp"
#include "lscv/parallel.hpp"
#include "lscv/types.hpp"

namespace lscv {

struct SolverOptions {
  /// Stop once the projected gradient has infinity norm at most this.
  double grad_tol = 1e-8;
  int max_iter = 100;
  double armijo_c = 1e-4;
  /// First nonzero Levenberg shift; doubled until the Hessian block factors.
  double lambda0 = 1e-10;
  int max_backtracks = 60;
  int golden_iters = 100;
};

struct FitDiagnostics {
  bool converged = false;
  int iterations = 0;
  double objective = std::numeric_limits<double>::quiet_NaN();
  /// Infinity norm of the projected gradient at the returned point.
  double grad_inf = std::numeric_limits<double>::quiet_NaN();
  bool closed_form = false;
  bool golden_fallback = false;
  /// Per coordinate: -1 at the lower bound, +1 at the upper bound, 0 inside.
  std::array<int, kMaxDim> bound{};
  /// Gradient at the returned point; its sign on active coordinates gives the KKT check.
  Vec grad;
  std::string message;
};

struct LocalEstimate {
  Vec theta;
  FitDiagnostics diag;
};

enum class StartMode { Warm, Cold };

struct EstimatorOptions {
  SolverOptions solver;
  /// Use the normal-equation solution for tvAR objectives.
  bool closed_form = true;
  StartMode start = StartMode::Warm;
  /// Threads for cold-start sweeps; warm-start sweeps are sequential.
  unsigned workers = 1;
};

namespace detail {

inline void record_bounds(const Box& box, const Vec& th, FitDiagnostics& d) {
  d.bound.fill(0);
  for (int i = 0; i < th.size(); ++i) {
    if (th[i] <= box.lo[i]) d.bound[static_cast<std::size_t>(i)] = -1;
    else if (th[i] >= box.hi[i]) d.bound[static_cast<std::size_t>(i)] = 1;
  }
}

/// Coordinates that are not held at a bound by an outward-pointing gradient.
inline std::array<bool, kMaxDim> free_set(const Box& box, const Vec& th, const Vec& g) {
  std::array<bool, kMaxDim> free{};
  for (int i = 0; i < th.size(); ++i) {
    const bool held_lo = th[i] <= box.lo[i] && g[i] > 0.0;
    const bool held_hi = th[i] >= box.hi[i] && g[i] < 0.0;
    free[static_cast<std::size_t>(i)] = !(held_lo || held_hi);
  }
  return free;
}

inline double projected_grad_inf(const std::array<bool, kMaxDim>& free, const Vec& g) {
  double m = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    if (free[static_cast<std::size_t>(i)]) m = std::max(m, std::abs(g[i]));
  }
  return m;
}

/// Regularized Newton direction on the free coordinates, zero elsewhere.
inline Vec newton_direction(const LocalValue& v, const std::array<bool, kMaxDim>& free, const SolverOptions& opt) {
  const int p = static_cast<int>(v.grad.size());
  std::array<int, kMaxDim> idx{};
  int m = 0;
  for (int i = 0; i < p; ++i) {
    if (free[static_cast<std::size_t>(i)]) idx[static_cast<std::size_t>(m++)] = i;
  }
  Mat H(m, m);
  Vec g(m);
  for (int a = 0; a < m; ++a) {
    g[a] = v.grad[idx[static_cast<std::size_t>(a)]];
    for (int b = 0; b < m; ++b) H(a, b) = v.hess(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
  }
  Vec step = -g;
  if (H.allFinite()) {
    double lambda = 0.0;
    while (lambda < 1e20) {
      Eigen::LLT<Mat> llt(H + lambda * Mat::Identity(m, m));
      if (llt.info() == Eigen::Success) {
        step = -llt.solve(g);
        break;
      }
      lambda = lambda == 0.0 ? opt.lambda0 : 2.0 * lambda;
    }
  }
  Vec d = Vec::Zero(p);
  for (int a = 0; a < m; ++a) d[idx[static_cast<std::size_t>(a)]] = step[a];
  return d;
}

/// Backtracking along the projected path with the Armijo test.
///
/// Near the optimum the predicted decrease falls below the rounding level of
/// L; the full step is then also taken when L does not rise beyond rounding
/// and the projected gradient shrinks. Backtracked steps must lower L.
enum class StepResult { Rejected, Full, ValueOnly };

/// On StepResult::Full, cur holds value, gradient and Hessian at the new point.
template <class Problem>
StepResult projected_line_search(const Problem& prob, const Box& box, Vec& th, LocalValue& cur, const Vec& dir,
                                 const SolverOptions& opt) {
  const double slack = 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(cur.value));
  double t = 1.0;
  for (int k = 0; k < opt.max_backtracks; ++k, t *= 0.5) {
    const Vec cand = box.project(th + t * dir);
    const Vec delta = cand - th;
    if (delta.cwiseAbs().maxCoeff() == 0.0) return StepResult::Rejected;
    if (k == 0) {
      LocalValue next = prob.evaluate(cand, Order::Hessian);
      if (!std::isfinite(next.value)) continue;
      const bool armijo = next.value <= cur.value + opt.armijo_c * cur.grad.dot(delta) && next.value < cur.value;
      const bool flat = next.value <= cur.value + slack &&
                        projected_grad_inf(free_set(box, cand, next.grad), next.grad) <
                            projected_grad_inf(free_set(box, th, cur.grad), cur.grad);
      if (armijo || flat) {
        th = cand;
        cur = std::move(next);
        return StepResult::Full;
      }
      continue;
    }
    const double val = prob.value(cand);
    if (!std::isfinite(val)) continue;
    if (val <= cur.value + opt.armijo_c * cur.grad.dot(delta) && val < cur.value) {
      th = cand;
      cur.value = val;
      return StepResult::ValueOnly;
    }
  }
  return StepResult::Rejected;
}

/// One golden-section pass per free coordinate over its box interval.
template <class Problem>
bool golden_refine(const Problem& prob, const Box& box, Vec& th, double& value, const std::array<bool, kMaxDim>& free,
                   const SolverOptions& opt) {
  constexpr double kInvPhi = 0.6180339887498949;
  bool improved = false;
  for (int i = 0; i < th.size(); ++i) {
    if (!free[static_cast<std::size_t>(i)]) continue;
    Vec probe = th;
    auto f = [&](double x) {
      probe[i] = x;
      const double v = prob.value(probe);
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    double a = box.lo[i];
    double b = box.hi[i];
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int k = 0; k < opt.golden_iters && b - a > 1e-15 * (1.0 + std::abs(a)); ++k) {
      if (fc <= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - kInvPhi * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + kInvPhi * (b - a);
        fd = f(d);
      }
    }
    const double x = fc <= fd ? c : d;
    const double fx = std::min(fc, fd);
    if (fx < value) {
      th[i] = x;
      value = fx;
      improved = true;
    }
  }
  return improved;
}

}  // namespace detail

/// Projected Newton minimization of a prepared local problem over the box.
template <class Obj>
LocalEstimate minimize_local(const LocalProblem<Obj>& prob, const Vec& init, const Box& box,
                             const SolverOptions& opt = {}) {
  const int p = prob.dim();
  if (init.size() != p || box.dim() != p) throw ConfigError("initial value or box has the wrong dimension");
  if (!box.contains(init)) throw ConfigError("initial value lies outside the parameter box");
  LocalEstimate out{init, {}};
  FitDiagnostics& d = out.diag;
  if (prob.empty()) {
    d.message = "empty kernel window";
    d.objective = 0.0;
    d.grad = Vec::Zero(p);
    detail::record_bounds(box, init, d);
    return out;
  }
  Vec th = init;
  LocalValue cur = prob.evaluate(th, Order::Hessian);
  if (!std::isfinite(cur.value)) {
    d.message = "objective is not finite at the initial value";
    d.grad = cur.grad;
    detail::record_bounds(box, th, d);
    return out;
  }
  for (int it = 0;; ++it) {
    const auto free = detail::free_set(box, th, cur.grad);
    d.iterations = it;
    d.objective = cur.value;
    d.grad_inf = detail::projected_grad_inf(free, cur.grad);
    if (d.grad_inf <= opt.grad_tol) {
      d.converged = true;
      break;
    }
    if (it >= opt.max_iter) {
      d.message = "iteration limit reached";
      break;
    }
    const Vec dir = detail::newton_direction(cur, free, opt);
    const auto step = detail::projected_line_search(prob, box, th, cur, dir, opt);
    if (step == detail::StepResult::Rejected) {
      if (!detail::golden_refine(prob, box, th, cur.value, free, opt)) {
        d.message = "no descent step found";
        break;
      }
      d.golden_fallback = true;
    }
    if (step != detail::StepResult::Full) cur = prob.evaluate(th, Order::Hessian);
  }
  out.theta = th;
  d.grad = cur.grad;
  detail::record_bounds(box, th, d);
  return out;
}

/// Minimizes L_{n,h}(u, .) (or L_{n,h,-s}) over the box from theta_init.
template <class Obj>
LocalEstimate fit_local(const Obj& obj, std::span<const double> xs, const Kernel& kernel, double u, double h,
                        const Vec& theta_init, const Box& box, const SolverOptions& opt = {},
                        std::optional<std::size_t> leave_out = std::nullopt) {
  return minimize_local(LocalProblem<Obj>(obj, xs, kernel, u, h, leave_out), theta_init, box, opt);
}

/// Kernel-weighted normal equations of a tvAR(r) window, sums over t >= r+1.
struct TvArNormalEquations {
  Mat gram;
  Vec cross;
  double mass = 0.0;
  std::size_t terms = 0;

  void add(double w, double x, const double* z, int r, double sign = 1.0) {
    for (int j = 0; j < r; ++j) {
      cross[j] += sign * w * x * z[j];
      for (int k = 0; k < r; ++k) gram(j, k) += sign * w * z[j] * z[k];
    }
    mass += sign * w;
  }
};

/// alpha = Gamma^{-1} gamma and sigma^2 = weighted residual sum / weight mass.
///
/// With leave_out = s the term s is removed from the accumulated sums by a
/// rank-one downdate before solving.
inline Vec fit_tvar_closed_form(std::span<const double> xs, const Kernel& kernel, double u, double h, int r,
                                std::optional<std::size_t> leave_out = std::nullopt) {
  if (r < 1 || r + 1 > kMaxDim) throw ConfigError("tvAR: order out of range");
  const std::size_t n = xs.size();
  if (leave_out && (*leave_out < 1 || *leave_out > n)) throw ConfigError("leave-out index outside 1..n");
  const KernelWindow win = make_window(kernel, n, u, h);
  const auto first = std::max(win.first, static_cast<std::size_t>(r) + 1);
  if (win.empty() || win.last() < first) throw DegenerateWindow("tvAR closed form: empty kernel window");
  const double inv_n = 1.0 / static_cast<double>(n);

  TvArNormalEquations ne{Mat::Zero(r, r), Vec::Zero(r), 0.0, 0};
  double z[kMaxDim];
  auto lags = [&](std::size_t t) {
    for (int j = 0; j < r; ++j) z[j] = xs[t - 2 - static_cast<std::size_t>(j)];
  };
  for (std::size_t t = first; t <= win.last(); ++t) {
    lags(t);
    ne.add(win.weight(t) * inv_n, xs[t - 1], z, r);
  }
  const bool drop = leave_out && *leave_out >= first && *leave_out <= win.last();
  if (drop) {
    lags(*leave_out);
    ne.add(win.weight(*leave_out) * inv_n, xs[*leave_out - 1], z, r, -1.0);
  }
  if (!(ne.mass > 0.0)) throw DegenerateWindow("tvAR closed form: zero kernel mass");

  Eigen::SelfAdjointEigenSolver<Mat> eig(ne.gram, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmin > 0.0) || !(lmax / lmin < 1e12)) throw DegenerateWindow("tvAR closed form: singular Gamma_h(u)");
  const Vec alpha = ne.gram.ldlt().solve(ne.cross);

  double rss = 0.0;
  for (std::size_t t = first; t <= win.last(); ++t) {
    if (drop && t == *leave_out) continue;
    lags(t);
    double e = xs[t - 1];
    for (int j = 0; j < r; ++j) e -= alpha[j] * z[j];
    rss += win.weight(t) * inv_n * e * e;
  }
  Vec th(r + 1);
  th.head(r) = alpha;
  th[r] = std::sqrt(rss / ne.mass);
  return th;
}

/// Lattice search over the box: m points per axis at cell midpoints with
/// m^p <= 4096 (m = 8 when possible); ties keep the lexicographically first.
template <class Problem>
Vec lattice_start(const Problem& prob, const Box& box) {
  const int p = box.dim();
  int m = 8;
  while (m > 1 && std::pow(static_cast<double>(m), p) > 4096.0) --m;
  std::array<int, kMaxDim> k{};
  Vec cand(p);
  Vec best = box.project(0.5 * (box.lo + box.hi));
  double best_val = std::numeric_limits<double>::infinity();
  for (;;) {
    for (int i = 0; i < p; ++i) {
      cand[i] = box.lo[i] + (k[static_cast<std::size_t>(i)] + 0.5) / m * (box.hi[i] - box.lo[i]);
    }
    const double v = prob.value(cand);
    if (std::isfinite(v) && v < best_val) {
      best_val = v;
      best = cand;
    }
    int i = p - 1;
    while (i >= 0 && ++k[static_cast<std::size_t>(i)] == m) k[static_cast<std::size_t>(i--)] = 0;
    if (i < 0) break;
  }
  return best;
}

/// Estimate at a single point u, dispatching to the tvAR closed form when
/// enabled. `init` seeds the Newton path; without it the lattice search is used.
template <class Obj>
LocalEstimate fit_point(const Obj& obj, std::span<const double> xs, const Kernel& kernel, double u, double h,
                        const Box& box, const EstimatorOptions& opt, const std::optional<Vec>& init = std::nullopt,
                        std::optional<std::size_t> leave_out = std::nullopt) {
  const LocalProblem<Obj> prob(obj, xs, kernel, u, h, leave_out);
  std::optional<Vec> start = init;
  if constexpr (std::is_same_v<Obj, TvArObjective>) {
    if (opt.closed_form) {
      try {
        const Vec th = fit_tvar_closed_form(xs, kernel, u, h, obj.order(), leave_out);
        if (th.allFinite() && box.contains(th)) {
          LocalEstimate est{th, {}};
          est.diag.converged = true;
          est.diag.closed_form = true;
          est.diag.objective = prob.value(th);
          detail::record_bounds(box, th, est.diag);
          return est;
        }
        if (th.allFinite()) start = box.project(th);
      } catch (const DegenerateWindow&) {
      }
    }
  }
  if (!start) start = lattice_start(prob, box);
  return minimize_local(prob, box.project(*start), box, opt.solver);
}

/// Pointwise estimates over the observation times inside the weight support.
struct LocalFit {
  double h = 0.0;
  std::size_t n = 0;
  /// Observation indices t with w(t/n) = 1.
  std::vector<std::size_t> indices;
  std::vector<double> eval_points;
  std::vector<Vec> estimates;
  std::vector<FitDiagnostics> diagnostics;

  std::size_t size() const { return estimates.size(); }
  bool empty() const { return estimates.empty(); }
  bool converged(std::size_t i) const { return diagnostics[i].converged; }
  int newton_iters(std::size_t i) const { return diagnostics[i].iterations; }
  std::size_t failures() const {
    return static_cast<std::size_t>(
        std::count_if(diagnostics.begin(), diagnostics.end(), [](const FitDiagnostics& d) { return !d.converged; }));
  }
};

/// theta_hat_h(t/n) at every t/n in the weight support.
///
/// Warm mode visits the points in order, starting each solve at the previous
/// estimate and the first at the lattice search. Cold mode starts every point
/// at its own lattice search and may use several workers.
template <class Obj>
LocalFit fit_curve(const Obj& obj, std::span<const double> xs, const Kernel& kernel, double h, const WeightFn& weight,
                   const Box& box, const EstimatorOptions& opt = {}) {
  check_bandwidth(h);
  LocalFit fit;
  fit.h = h;
  fit.n = xs.size();
  fit.indices = weight.support_points(xs.size());
  const std::size_t m = fit.indices.size();
  const double nd = static_cast<double>(xs.size());
  fit.eval_points.resize(m);
  for (std::size_t i = 0; i < m; ++i) fit.eval_points[i] = static_cast<double>(fit.indices[i]) / nd;
  fit.estimates.resize(m);
  fit.diagnostics.resize(m);
  auto store = [&](std::size_t i, LocalEstimate&& est) {
    fit.estimates[i] = std::move(est.theta);
    fit.diagnostics[i] = std::move(est.diag);
  };
  if (opt.start == StartMode::Warm) {
    std::optional<Vec> prev;
    for (std::size_t i = 0; i < m; ++i) {
      LocalEstimate est = fit_point(obj, xs, kernel, fit.eval_points[i], h, box, opt, prev);
      prev = est.theta;
      store(i, std::move(est));
    }
  } else {
    parallel_for(m, opt.workers,
                 [&](std::size_t i) { store(i, fit_point(obj, xs, kernel, fit.eval_points[i], h, box, opt)); });
  }
  return fit;
}

/// theta_hat_{h,-s}(s/n), warm-started at theta_hat_h(s/n). When no warm
/// start is given the full-sample estimate is computed first.
template <class Obj>
LocalEstimate fit_leave_one_out(const Obj& obj, std::span<const double> xs, const Kernel& kernel, double h,
                                std::size_t s, const Box& box, const EstimatorOptions& opt = {},
                                const std::optional<Vec>& warm = std::nullopt) {
  if (s < 1 || s > xs.size()) throw ConfigError("leave-out index outside 1..n");
  const double u = static_cast<double>(s) / static_cast<double>(xs.size());
  std::optional<Vec> start = warm;
  if (!start) start = fit_point(obj, xs, kernel, u, h, box, opt).theta;
  return fit_point(obj, xs, kernel, u, h, box, opt, start, s);
}

inline LocalFit fit_curve(const AnyObjective& obj, std::span<const double> xs, const Kernel& kernel, double h,
                          const WeightFn& weight, const Box& box, const EstimatorOptions& opt = {}) {
  return std::visit([&](const auto& o) { return fit_curve(o, xs, kernel, h, weight, box, opt); }, obj);
}

inline LocalEstimate fit_local(const AnyObjective& obj, std::span<const double> xs, const Kernel& kernel, double u,
                               double h, const Vec& theta_init, const Box& box, const SolverOptions& opt = {},
                               std::optional<std::size_t> leave_out = std::nullopt) {
  return std::visit([&](const auto& o) { return fit_local(o, xs, kernel, u, h, theta_init, box, opt, leave_out); },
                    obj);
}

inline LocalEstimate fit_leave_one_out(const AnyObjective& obj, std::span<const double> xs, const Kernel& kernel,
                                       double h, std::size_t s, const Box& box, const EstimatorOptions& opt = {},
                                       const std::optional<Vec>& warm = std::nullopt) {
  return std::visit([&](const auto& o) { return fit_leave_one_out(o, xs, kernel, h, s, box, opt, warm); }, obj);
}

}  // namespace lscv
