#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "lscv/likelihood.hpp"
#include "lscv/processes.hpp"

namespace {

using lscv::Mat;
using lscv::Order;
using lscv::TruncatedPast;
using lscv::Vec;

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

struct Draw {
  std::mt19937_64 gen;
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
  double normal() { return std::normal_distribution<double>()(gen); }
};

Vec random_theta(lscv::Family f, int order, Draw& d) {
  switch (f) {
    case lscv::Family::TvAR: {
      Vec th(order + 1);
      for (int j = 0; j < order; ++j) th[j] = d.uniform(-0.9, 0.9) / order;
      th[order] = d.uniform(0.3, 2.0);
      return th;
    }
    case lscv::Family::TvMA1: return vec({d.uniform(-0.9, 0.9), d.uniform(0.3, 2.0)});
    case lscv::Family::TvARCH: {
      Vec th(order + 1);
      th[0] = d.uniform(0.1, 2.0);
      for (int j = 1; j <= order; ++j) th[j] = d.uniform(0.05, 0.9);
      return th;
    }
    case lscv::Family::TvTAR1: return vec({d.uniform(-0.9, 0.9), d.uniform(-0.9, 0.9), d.uniform(0.3, 2.0)});
  }
  return {};
}

template <class Obj>
void check_derivatives(const Obj& obj, lscv::Family family, int order, std::uint64_t seed) {
  Draw d{std::mt19937_64(seed)};
  for (int rep = 0; rep < 100; ++rep) {
    const Vec th = random_theta(family, order, d);
    std::vector<double> lags(1 + rep % 40);
    for (double& y : lags) y = d.normal();
    const double x = 1.5 * d.normal();
    const auto past = TruncatedPast::of_values(lags);
    const auto ev = lscv::evaluate_term(obj, x, past, th, Order::Hessian);
    const int p = static_cast<int>(th.size());
    Vec g_fd(p);
    Mat h_fd(p, p);
    for (int i = 0; i < p; ++i) {
      const double step = 1e-5 * std::max(1.0, std::abs(th[i]));
      Vec up = th, dn = th;
      up[i] += step;
      dn[i] -= step;
      const auto eu = lscv::evaluate_term(obj, x, past, up, Order::Gradient);
      const auto ed = lscv::evaluate_term(obj, x, past, dn, Order::Gradient);
      g_fd[i] = (eu.value - ed.value) / (2.0 * step);
      h_fd.col(i) = (eu.grad - ed.grad) / (2.0 * step);
    }
    const double g_scale = std::max(1.0, ev.grad.template lpNorm<Eigen::Infinity>());
    const double h_scale = std::max(1.0, ev.hess.template lpNorm<Eigen::Infinity>());
    EXPECT_LE((ev.grad - g_fd).template lpNorm<Eigen::Infinity>(), 1e-6 * g_scale) << "rep " << rep;
    EXPECT_LE((ev.hess - h_fd).template lpNorm<Eigen::Infinity>(), 1e-5 * h_scale) << "rep " << rep;
    EXPECT_LE((ev.hess - ev.hess.transpose()).template lpNorm<Eigen::Infinity>(), 1e-14 * h_scale);
  }
}

TEST(Derivatives, TvAr1) { check_derivatives(lscv::TvArObjective(1), lscv::Family::TvAR, 1, 1); }
TEST(Derivatives, TvAr3) { check_derivatives(lscv::TvArObjective(3), lscv::Family::TvAR, 3, 2); }
TEST(Derivatives, TvMa1) { check_derivatives(lscv::TvMa1Objective{}, lscv::Family::TvMA1, 1, 3); }
TEST(Derivatives, TvArch1) { check_derivatives(lscv::TvArchObjective(1), lscv::Family::TvARCH, 1, 4); }
TEST(Derivatives, TvArch2) { check_derivatives(lscv::TvArchObjective(2), lscv::Family::TvARCH, 2, 5); }
TEST(Derivatives, TvTar1) { check_derivatives(lscv::TvTar1Objective{}, lscv::Family::TvTAR1, 1, 6); }

double gaussian_nll(double e, double var) { return 0.5 * std::log(2.0 * std::numbers::pi * var) + 0.5 * e * e / var; }

TEST(TermValue, TvArMatchesGaussianDensity) {
  const std::vector<double> lags = {0.7, -1.2};
  const Vec th = vec({0.3, -0.1, 0.9});
  const double x = 0.4;
  const double e = x - 0.3 * 0.7 - (-0.1) * (-1.2);
  EXPECT_NEAR(lscv::ell_tvar(x, TruncatedPast::of_values(lags), th), gaussian_nll(e, 0.81), 1e-14);
}

TEST(TermValue, TvArchMatchesGaussianDensity) {
  const std::vector<double> lags = {1.3};
  const Vec th = vec({0.4, 0.2});
  const double v = 0.4 + 0.2 * 1.69;
  EXPECT_NEAR(lscv::ell_tvarch(-0.8, TruncatedPast::of_values(lags), th), gaussian_nll(-0.8, v), 1e-14);
}

TEST(TermValue, TvTar1UsesSignedRegressors) {
  const Vec th = vec({0.5, -0.3, 1.2});
  const std::vector<double> neg = {-2.0};
  const std::vector<double> pos = {2.0};
  EXPECT_NEAR(lscv::ell_tvtar1(0.1, TruncatedPast::of_values(neg), th), gaussian_nll(0.1 - (-0.3) * 2.0, 1.44), 1e-14);
  EXPECT_NEAR(lscv::ell_tvtar1(0.1, TruncatedPast::of_values(pos), th), gaussian_nll(0.1 - 0.5 * 2.0, 1.44), 1e-14);
}

TEST(TermValue, TvMa1InvertsTheFilter) {
  // Residuals from e_t = x_t - alpha e_{t-1} started at zero before the first observation.
  const std::vector<double> xs = {0.3, -1.1, 0.8, 2.0, -0.5, 0.1};
  const double alpha = -0.6, sigma = 1.3;
  double e = 0.0;
  for (std::size_t t = 1; t <= xs.size(); ++t) {
    e = xs[t - 1] - alpha * e;
    const double got = lscv::term_value(lscv::TvMa1Objective{}, xs, t, vec({alpha, sigma}));
    EXPECT_NEAR(got, gaussian_nll(e, sigma * sigma), 1e-13) << "t=" << t;
  }
}

TEST(TermValue, MaFilterCoefficients) {
  const double alpha = 0.7, sigma = 2.0;
  const auto g = lscv::TvMa1Objective::filter_coefficients(alpha, sigma, 12);
  // Power series of 1 / (sigma (1 + alpha z)).
  double c = 1.0 / sigma;
  for (std::size_t k = 0; k < g.size(); ++k) {
    EXPECT_NEAR(g[k], c, 1e-15);
    c *= -alpha;
  }
  EXPECT_EQ(lscv::TvMa1Objective::filter_length(0.0), 1u);
  const std::size_t len = lscv::TvMa1Objective::filter_length(0.5);
  EXPECT_GE(std::pow(0.5, len - 1), 1e-12);
  EXPECT_LT(std::pow(0.5, len), 1e-12);
}

TEST(TruncatedPast, ZeroPaddedLags) {
  const std::vector<double> xs = {1.0, 2.0, 3.0};
  const auto p = TruncatedPast::of_series(xs, 3);
  EXPECT_EQ(p[1], 2.0);
  EXPECT_EQ(p[2], 1.0);
  EXPECT_EQ(p[3], 0.0);
  EXPECT_EQ(p[0], 0.0);
  EXPECT_THROW(TruncatedPast::of_series(xs, 0), lscv::ConfigError);
}

TEST(TermValue, DomainChecked) {
  const std::vector<double> lags = {1.0};
  EXPECT_THROW(lscv::ell_tvar(0.0, TruncatedPast::of_values(lags), vec({0.5, -1.0})), lscv::ConfigError);
  EXPECT_THROW(lscv::ell_tvma1(0.0, TruncatedPast::of_values(lags), vec({1.0, 1.0})), lscv::ConfigError);
  EXPECT_THROW(lscv::ell_tvarch(0.0, TruncatedPast::of_values(lags), vec({0.0, 0.2})), lscv::ConfigError);
}

template <class Obj>
double brute_local(const Obj& obj, const std::vector<double>& xs, double u, double h, const Vec& th,
                   std::size_t first, std::size_t skip = 0) {
  const auto k = lscv::epanechnikov();
  const double n = static_cast<double>(xs.size());
  double s = 0.0;
  for (std::size_t t = first; t <= xs.size(); ++t) {
    if (t == skip) continue;
    const double w = k((t / n - u) / h) / h;
    if (w == 0.0) continue;
    s += w * lscv::term_value(obj, xs, t, th);
  }
  return s / n;
}

template <class Obj>
void check_local_sum(const Obj& obj, const lscv::ModelSpec& spec, const Vec& th, std::size_t first) {
  const auto xs = lscv::simulate_stationary(spec, th, 80, {3, 0}).values;
  const auto k = lscv::epanechnikov();
  for (double u : {0.0, 0.3, 0.77, 1.0}) {
    for (double h : {0.05, 0.4}) {
      const double got = lscv::local_likelihood(obj, xs, k, u, h, th).value;
      EXPECT_NEAR(got, brute_local(obj, xs, u, h, th, first), 1e-10 * (1.0 + std::abs(got)));
      const double loo = lscv::local_likelihood(obj, xs, k, u, h, th, Order::Value, 40).value;
      EXPECT_NEAR(loo, brute_local(obj, xs, u, h, th, first, 40), 1e-10 * (1.0 + std::abs(loo)));
    }
  }
}

TEST(LocalLikelihood, MatchesBruteForceSums) {
  check_local_sum(lscv::TvArObjective(1), lscv::ModelSpec::tvar(1), vec({0.5, 0.9}), 2);
  check_local_sum(lscv::TvArObjective(2), lscv::ModelSpec::tvar(2), vec({0.3, 0.2, 0.9}), 3);
  check_local_sum(lscv::TvMa1Objective{}, lscv::ModelSpec::tvma1(), vec({0.6, 1.1}), 1);
  check_local_sum(lscv::TvArchObjective(1), lscv::ModelSpec::tvarch(1), vec({0.4, 0.3}), 1);
  check_local_sum(lscv::TvTar1Objective{}, lscv::ModelSpec::tvtar1(), vec({0.4, -0.5, 1.0}), 1);
}

TEST(LocalLikelihood, SingleObservation) {
  const std::vector<double> xs = {0.5};
  const auto k = lscv::epanechnikov();
  const auto v = lscv::local_likelihood(lscv::TvArchObjective(1), xs, k, 1.0, 0.5, vec({0.4, 0.2}));
  EXPECT_NEAR(v.value, (k(0.0) / 0.5) * gaussian_nll(0.5, 0.4), 1e-14);
  EXPECT_EQ(v.terms, 1u);
}

TEST(LocalLikelihood, GradientMatchesFiniteDifference) {
  const auto xs = lscv::simulate_stationary(lscv::ModelSpec::tvma1(), vec({0.5, 1.0}), 200, {4, 0}).values;
  const auto k = lscv::epanechnikov();
  const lscv::LocalProblem<lscv::TvMa1Objective> prob(lscv::TvMa1Objective{}, xs, k, 0.4, 0.3);
  const Vec th = vec({0.3, 0.8});
  const auto v = prob.evaluate(th, Order::Hessian);
  for (int i = 0; i < 2; ++i) {
    Vec up = th, dn = th;
    up[i] += 1e-6;
    dn[i] -= 1e-6;
    EXPECT_NEAR(v.grad[i], (prob.value(up) - prob.value(dn)) / 2e-6, 1e-6 * std::max(1.0, std::abs(v.grad[i])));
  }
}

}  // namespace
