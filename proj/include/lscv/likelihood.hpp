#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <variant>

#include "lscv/kernel.hpp"
#include "lscv/model.hpp"
#include "lscv/types.hpp"

namespace lscv {

enum class Order { Value = 0, Gradient = 1, Hessian = 2 };

/// ell, its gradient and Hessian in theta for one observation.
struct TermEval {
  double value = 0.0;
  Vec grad;
  Mat hess;
};

/// Observed past (X_{t-1}, X_{t-2}, ..., X_1, 0, 0, ...). Index k >= 1 returns
/// the k-th lag; lags beyond the available history are exactly zero.
class TruncatedPast {
 public:
  /// Past of observation t (1-based) in the series xs = (X_1, ..., X_n).
  static TruncatedPast of_series(std::span<const double> xs, std::size_t t) {
    if (t == 0 || t > xs.size() + 1) throw ConfigError("observation index outside 1..n+1");
    return TruncatedPast(xs.first(t - 1), true);
  }

  /// Explicit lags: values[0] is lag 1, values[1] lag 2, and so on.
  static TruncatedPast of_values(std::span<const double> values) { return TruncatedPast(values, false); }

  double operator[](std::size_t k) const {
    if (k == 0 || k > data_.size()) return 0.0;
    return chronological_ ? data_[data_.size() - k] : data_[k - 1];
  }

  std::size_t available() const { return data_.size(); }

 private:
  TruncatedPast(std::span<const double> data, bool chronological) : data_(data), chronological_(chronological) {}

  std::span<const double> data_;
  bool chronological_;
};

namespace detail {

inline const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

/// Gaussian conditional-mean objective with mean <coef, mu> and scale sigma;
/// theta = (coef_1..coef_q, sigma).
inline void mean_term(double x, const double* mu, int q, const Vec& th, Order order, TermEval& out) {
  const double sigma = th[q];
  double e = x;
  for (int j = 0; j < q; ++j) e -= th[j] * mu[j];
  const double s2 = sigma * sigma;
  out.value = kHalfLog2Pi + std::log(sigma) + 0.5 * e * e / s2;
  if (order == Order::Value) return;
  const int p = q + 1;
  out.grad.resize(p);
  for (int j = 0; j < q; ++j) out.grad[j] = -e * mu[j] / s2;
  out.grad[q] = 1.0 / sigma - e * e / (s2 * sigma);
  if (order == Order::Gradient) return;
  out.hess.resize(p, p);
  for (int j = 0; j < q; ++j) {
    for (int k = 0; k <= j; ++k) out.hess(j, k) = out.hess(k, j) = mu[j] * mu[k] / s2;
    out.hess(j, q) = out.hess(q, j) = 2.0 * e * mu[j] / (s2 * sigma);
  }
  out.hess(q, q) = -1.0 / s2 + 3.0 * e * e / (s2 * s2);
}

/// Gaussian conditional-variance objective with variance <theta, mu>.
inline void variance_term(double x, const double* mu, int p, const Vec& th, Order order, TermEval& out) {
  double v = 0.0;
  for (int j = 0; j < p; ++j) v += th[j] * mu[j];
  const double x2 = x * x;
  out.value = kHalfLog2Pi + 0.5 * std::log(v) + 0.5 * x2 / v;
  if (order == Order::Value) return;
  const double gs = (v - x2) / (2.0 * v * v);
  out.grad.resize(p);
  for (int j = 0; j < p; ++j) out.grad[j] = gs * mu[j];
  if (order == Order::Gradient) return;
  const double hs = (2.0 * x2 - v) / (2.0 * v * v * v);
  out.hess.resize(p, p);
  for (int j = 0; j < p; ++j) {
    for (int k = 0; k <= j; ++k) out.hess(j, k) = out.hess(k, j) = hs * mu[j] * mu[k];
  }
}

}  // namespace detail

/// tvAR(r): ell = 1/2 log(2 pi sigma^2) + (x - sum_j alpha_j y_j)^2 / (2 sigma^2).
///
/// Local sums start at t = r + 1.
class TvArObjective {
 public:
  explicit TvArObjective(int r = 1) : r_(r) {
    if (r < 1 || r + 1 > kMaxDim) throw ConfigError("tvAR: order out of range");
  }

  Family family() const { return Family::TvAR; }
  int order() const { return r_; }
  int dim() const { return r_ + 1; }
  std::size_t first_term() const { return static_cast<std::size_t>(r_) + 1; }
  bool in_domain(const Vec& th) const { return th.size() == dim() && th[r_] > 0.0; }

  void term(double x, const TruncatedPast& past, const Vec& th, Order order, TermEval& out) const {
    double mu[kMaxDim];
    for (int j = 0; j < r_; ++j) mu[j] = past[static_cast<std::size_t>(j) + 1];
    detail::mean_term(x, mu, r_, th, order, out);
  }

  template <class Fn>
  void for_each_term(std::span<const double> xs, std::size_t first, std::size_t last, const Vec& th, Order order,
                     Fn&& fn) const {
    TermEval ev;
    double mu[kMaxDim];
    for (std::size_t t = std::max(first, first_term()); t <= last; ++t) {
      for (int j = 0; j < r_; ++j) mu[j] = xs[t - 2 - static_cast<std::size_t>(j)];
      detail::mean_term(xs[t - 1], mu, r_, th, order, ev);
      fn(t, ev);
    }
  }

 private:
  int r_;
};

/// tvTAR(1): conditional mean a_1 y^+ + a_2 y^-, theta = (a_1, a_2, sigma).
class TvTar1Objective {
 public:
  Family family() const { return Family::TvTAR1; }
  int dim() const { return 3; }
  std::size_t first_term() const { return 1; }
  bool in_domain(const Vec& th) const { return th.size() == 3 && th[2] > 0.0; }

  static void regressors(double y, double* mu) {
    mu[0] = std::max(y, 0.0);
    mu[1] = std::max(-y, 0.0);
  }

  void term(double x, const TruncatedPast& past, const Vec& th, Order order, TermEval& out) const {
    double mu[2];
    regressors(past[1], mu);
    detail::mean_term(x, mu, 2, th, order, out);
  }

  template <class Fn>
  void for_each_term(std::span<const double> xs, std::size_t first, std::size_t last, const Vec& th, Order order,
                     Fn&& fn) const {
    TermEval ev;
    double mu[2];
    for (std::size_t t = std::max<std::size_t>(first, 1); t <= last; ++t) {
      regressors(t >= 2 ? xs[t - 2] : 0.0, mu);
      detail::mean_term(xs[t - 1], mu, 2, th, order, ev);
      fn(t, ev);
    }
  }
};

/// tvARCH(r): conditional variance a_0 + sum_i a_i y_i^2, theta = (a_0..a_r).
class TvArchObjective {
 public:
  explicit TvArchObjective(int r = 1) : r_(r) {
    if (r < 1 || r + 1 > kMaxDim) throw ConfigError("tvARCH: order out of range");
  }

  Family family() const { return Family::TvARCH; }
  int order() const { return r_; }
  int dim() const { return r_ + 1; }
  std::size_t first_term() const { return 1; }
  bool in_domain(const Vec& th) const {
    if (th.size() != dim() || !(th[0] > 0.0)) return false;
    for (int i = 1; i <= r_; ++i) {
      if (th[i] < 0.0) return false;
    }
    return true;
  }

  void term(double x, const TruncatedPast& past, const Vec& th, Order order, TermEval& out) const {
    double mu[kMaxDim];
    mu[0] = 1.0;
    for (int j = 1; j <= r_; ++j) {
      const double y = past[static_cast<std::size_t>(j)];
      mu[j] = y * y;
    }
    detail::variance_term(x, mu, r_ + 1, th, order, out);
  }

  template <class Fn>
  void for_each_term(std::span<const double> xs, std::size_t first, std::size_t last, const Vec& th, Order order,
                     Fn&& fn) const {
    TermEval ev;
    double mu[kMaxDim];
    mu[0] = 1.0;
    for (std::size_t t = std::max<std::size_t>(first, 1); t <= last; ++t) {
      for (int j = 1; j <= r_; ++j) {
        const double y = t > static_cast<std::size_t>(j) ? xs[t - 1 - static_cast<std::size_t>(j)] : 0.0;
        mu[j] = y * y;
      }
      detail::variance_term(xs[t - 1], mu, r_ + 1, th, order, ev);
      fn(t, ev);
    }
  }

 private:
  int r_;
};

/// tvMA(1) through its inverse filter: e_t = sum_k (-alpha)^k X_{t-k},
/// ell = 1/2 log(2 pi sigma^2) + e_t^2 / (2 sigma^2), theta = (alpha, sigma).
class TvMa1Objective {
 public:
  /// Filter terms with |alpha|^k below this are dropped.
  static constexpr double kFilterCutoff = 1e-12;

  Family family() const { return Family::TvMA1; }
  int dim() const { return 2; }
  std::size_t first_term() const { return 1; }
  bool in_domain(const Vec& th) const { return th.size() == 2 && std::abs(th[0]) < 1.0 && th[1] > 0.0; }

  /// Number of filter terms kept: k = 0..K-1 with |alpha|^k >= cutoff.
  static std::size_t filter_length(double alpha) {
    const double a = std::abs(alpha);
    std::size_t k = 1;
    double pw = a;
    while (pw >= kFilterCutoff) {
      pw *= a;
      ++k;
    }
    return k;
  }

  /// Inverse-filter coefficients gamma(k) = (-alpha)^k / sigma for k < count.
  static std::vector<double> filter_coefficients(double alpha, double sigma, std::size_t count) {
    std::vector<double> g(count);
    double pw = 1.0;
    for (std::size_t k = 0; k < count; ++k) {
      g[k] = pw / sigma;
      pw *= -alpha;
    }
    return g;
  }

  void term(double x, const TruncatedPast& past, const Vec& th, Order order, TermEval& out) const {
    const double alpha = th[0];
    const std::size_t len = std::min(filter_length(alpha), past.available() + 1);
    // e = sum (-a)^k z_{k+1}; de/da = sum -k (-a)^{k-1} z_{k+1}; d2e/da2 = sum k (k-1) (-a)^{k-2} z_{k+1}.
    double e = 0.0;
    double de = 0.0;
    double dde = 0.0;
    double pk = 1.0;    // (-a)^k
    double pk1 = 0.0;   // (-a)^{k-1}
    double pk2 = 0.0;   // (-a)^{k-2}
    for (std::size_t k = 0; k < len; ++k) {
      const double z = k == 0 ? x : past[k];
      const auto kd = static_cast<double>(k);
      e += pk * z;
      de -= kd * pk1 * z;
      dde += kd * (kd - 1.0) * pk2 * z;
      pk2 = pk1;
      pk1 = pk;
      pk *= -alpha;
    }
    finish(e, de, dde, th[1], order, out);
  }

  template <class Fn>
  void for_each_term(std::span<const double> xs, std::size_t first, std::size_t last, const Vec& th, Order order,
                     Fn&& fn) const {
    const double alpha = th[0];
    const std::size_t len = filter_length(alpha);
    first = std::max<std::size_t>(first, 1);
    const std::size_t start = first > len ? first - len + 1 : 1;
    double e = 0.0;
    double de = 0.0;
    double dde = 0.0;
    TermEval ev;
    for (std::size_t t = start; t <= last; ++t) {
      const double dde_new = -2.0 * de - alpha * dde;
      const double de_new = -e - alpha * de;
      e = xs[t - 1] - alpha * e;
      de = de_new;
      dde = dde_new;
      if (t >= first) {
        finish(e, de, dde, th[1], order, ev);
        fn(t, ev);
      }
    }
  }

 private:
  static void finish(double e, double de, double dde, double sigma, Order order, TermEval& out) {
    const double s2 = sigma * sigma;
    out.value = detail::kHalfLog2Pi + std::log(sigma) + 0.5 * e * e / s2;
    if (order == Order::Value) return;
    out.grad.resize(2);
    out.grad[0] = e * de / s2;
    out.grad[1] = 1.0 / sigma - e * e / (s2 * sigma);
    if (order == Order::Gradient) return;
    out.hess.resize(2, 2);
    out.hess(0, 0) = (de * de + e * dde) / s2;
    out.hess(0, 1) = out.hess(1, 0) = -2.0 * e * de / (s2 * sigma);
    out.hess(1, 1) = -1.0 / s2 + 3.0 * e * e / (s2 * s2);
  }
};

using AnyObjective = std::variant<TvArObjective, TvMa1Objective, TvArchObjective, TvTar1Objective>;

inline AnyObjective make_objective(const ModelSpec& spec) {
  switch (spec.family) {
    case Family::TvAR: return TvArObjective(spec.order);
    case Family::TvMA1: return TvMa1Objective{};
    case Family::TvARCH: return TvArchObjective(spec.order);
    case Family::TvTAR1: return TvTar1Objective{};
  }
  return TvArObjective(1);
}

template <class Obj>
TermEval evaluate_term(const Obj& obj, double x, const TruncatedPast& past, const Vec& th, Order order = Order::Hessian) {
  if (th.size() != obj.dim()) throw ConfigError("theta has wrong dimension");
  if (!obj.in_domain(th)) throw ConfigError(to_string(obj.family()) + ": theta outside the objective's domain");
  TermEval out;
  obj.term(x, past, th, order, out);
  return out;
}

inline double ell_tvar(double x, const TruncatedPast& past, const Vec& th) {
  return evaluate_term(TvArObjective(static_cast<int>(th.size()) - 1), x, past, th, Order::Value).value;
}

inline double ell_tvma1(double x, const TruncatedPast& past, const Vec& th) {
  return evaluate_term(TvMa1Objective{}, x, past, th, Order::Value).value;
}

inline double ell_tvarch(double x, const TruncatedPast& past, const Vec& th) {
  return evaluate_term(TvArchObjective(static_cast<int>(th.size()) - 1), x, past, th, Order::Value).value;
}

inline double ell_tvtar1(double x, const TruncatedPast& past, const Vec& th) {
  return evaluate_term(TvTar1Objective{}, x, past, th, Order::Value).value;
}

/// Value, gradient and Hessian of a localized likelihood sum.
struct LocalValue {
  double value = 0.0;
  Vec grad;
  Mat hess;
  /// (1/n) sum of the kernel weights that entered the sum.
  double mass = 0.0;
  std::size_t terms = 0;
};

/// L_{n,h}(u, theta) (or L_{n,h,-s}) for one (u, h), with the kernel window
/// computed once and reused across theta evaluations.
template <class Obj>
class LocalProblem {
 public:
  LocalProblem(const Obj& obj, std::span<const double> xs, const Kernel& kernel, double u, double h,
               std::optional<std::size_t> leave_out = std::nullopt)
      : obj_(&obj), xs_(xs), u_(u), h_(h), leave_out_(leave_out) {
    if (leave_out && (*leave_out < 1 || *leave_out > xs.size())) throw ConfigError("leave-out index outside 1..n");
    window_ = make_window(kernel, xs.size(), u, h);
  }

  const Obj& objective() const { return *obj_; }
  int dim() const { return obj_->dim(); }
  double u() const { return u_; }
  double h() const { return h_; }
  std::span<const double> series() const { return xs_; }
  const KernelWindow& window() const { return window_; }
  std::optional<std::size_t> leave_out() const { return leave_out_; }
  bool empty() const { return window_.empty() || window_.last() < obj_->first_term(); }

  LocalValue evaluate(const Vec& th, Order order) const {
    const int p = dim();
    LocalValue out;
    if (order != Order::Value) out.grad = Vec::Zero(p);
    if (order == Order::Hessian) out.hess = Mat::Zero(p, p);
    if (window_.empty()) return out;
    const double inv_n = 1.0 / static_cast<double>(xs_.size());
    obj_->for_each_term(xs_, window_.first, window_.last(), th, order, [&](std::size_t t, const TermEval& ev) {
      if (leave_out_ && t == *leave_out_) return;
      const double w = window_.weight(t) * inv_n;
      if (w == 0.0) return;
      out.value += w * ev.value;
      out.mass += w;
      ++out.terms;
      if (order != Order::Value) out.grad.noalias() += w * ev.grad;
      if (order == Order::Hessian) out.hess.noalias() += w * ev.hess;
    });
    return out;
  }

  double value(const Vec& th) const { return evaluate(th, Order::Value).value; }

 private:
  const Obj* obj_;
  std::span<const double> xs_;
  double u_;
  double h_;
  std::optional<std::size_t> leave_out_;
  KernelWindow window_;
};

/// (1/n) sum_t K_h(t/n - u) ell_{t,n}(theta), skipping t = leave_out if given.
template <class Obj>
LocalValue local_likelihood(const Obj& obj, std::span<const double> xs, const Kernel& kernel, double u, double h,
                            const Vec& th, Order order = Order::Value,
                            std::optional<std::size_t> leave_out = std::nullopt) {
  if (!obj.in_domain(th)) throw ConfigError(to_string(obj.family()) + ": theta outside the objective's domain");
  return LocalProblem<Obj>(obj, xs, kernel, u, h, leave_out).evaluate(th, order);
}

/// ell_{t,n}(theta) for observation t of the series.
template <class Obj>
double term_value(const Obj& obj, std::span<const double> xs, std::size_t t, const Vec& th) {
  TermEval ev;
  obj.term(xs[t - 1], TruncatedPast::of_series(xs, t), th, Order::Value, ev);
  return ev.value;
}

}  // namespace lscv
