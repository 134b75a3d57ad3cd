#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "lscv/selection.hpp"

namespace {

using lscv::Mat;
using lscv::ModelSpec;
using lscv::Vec;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

/// Leave-one-out kernel-weighted least squares for tvAR(1) on the explicit design.
Vec loo_wls(const std::vector<double>& xs, double u, double h, std::size_t skip) {
  const auto k = lscv::epanechnikov();
  const double n = static_cast<double>(xs.size());
  double szz = 0, szx = 0, mass = 0;
  for (std::size_t t = 2; t <= xs.size(); ++t) {
    const double w = k((t / n - u) / h) / h;
    if (w == 0.0 || t == skip) continue;
    szz += w * xs[t - 2] * xs[t - 2];
    szx += w * xs[t - 2] * xs[t - 1];
    mass += w;
  }
  const double a = szx / szz;
  double rss = 0;
  for (std::size_t t = 2; t <= xs.size(); ++t) {
    const double w = k((t / n - u) / h) / h;
    if (w == 0.0 || t == skip) continue;
    const double e = xs[t - 1] - a * xs[t - 2];
    rss += w * e * e;
  }
  return vec({a, std::sqrt(rss / mass)});
}

double brute_force_cv(const std::vector<double>& xs, double h, const lscv::WeightFn& weight) {
  const double n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (std::size_t s = 1; s <= xs.size(); ++s) {
    const double u = s / n;
    if (!weight.contains(u)) continue;
    const Vec th = loo_wls(xs, u, h, s);
    const double e = xs[s - 1] - th[0] * (s >= 2 ? xs[s - 2] : 0.0);
    sum += 0.5 * std::log(kTwoPi * th[1] * th[1]) + 0.5 * e * e / (th[1] * th[1]);
  }
  return sum / n;
}

TEST(Cv, MatchesBruteForceTvAr) {
  const auto spec = ModelSpec::tvar(1);
  const auto xs = lscv::simulate(spec, lscv::preset_curve(lscv::ModelId::A), 50, {12, 1}).values;
  const auto k = lscv::epanechnikov();
  const auto w = lscv::make_weight(0.05, 0.95);
  // Wide enough that no local estimate is held at a bound.
  const lscv::Box open{vec({-5.0, 1e-3}), vec({5.0, 100.0})};
  for (double h : {0.2, 0.35, 0.6, 1.0}) {
    const double got = lscv::cv_functional(lscv::TvArObjective(1), xs, k, w, h, open);
    EXPECT_NEAR(got, brute_force_cv(xs, h, w), 1e-10) << "h=" << h;
  }
}

TEST(Cv, NewtonPathMatchesClosedForm) {
  const auto spec = ModelSpec::tvar(1);
  const auto xs = lscv::simulate(spec, lscv::preset_curve(lscv::ModelId::A), 80, {13, 1}).values;
  const auto k = lscv::epanechnikov();
  const auto w = lscv::make_weight(0.05, 0.95);
  lscv::EstimatorOptions newton;
  newton.closed_form = false;
  const auto a = lscv::evaluate_bandwidth(lscv::TvArObjective(1), xs, k, w, 0.4, spec.theta_box);
  const auto b = lscv::evaluate_bandwidth(lscv::TvArObjective(1), xs, k, w, 0.4, spec.theta_box, newton);
  EXPECT_FALSE(b.poisoned);
  EXPECT_NEAR(a.cv, b.cv, 1e-9);
}

TEST(Cv, ArchLeaveOneOutFromColdStarts) {
  const auto spec = ModelSpec::tvarch(1);
  const auto xs = lscv::simulate(spec, lscv::preset_curve(lscv::ModelId::C), 60, {14, 1}).values;
  const auto k = lscv::epanechnikov();
  const auto w = lscv::make_weight(0.05, 0.95);
  const lscv::TvArchObjective obj(1);
  const double h = 0.5;
  double sum = 0.0;
  for (std::size_t s : w.support_points(xs.size())) {
    const double u = static_cast<double>(s) / 60.0;
    const lscv::LocalProblem<lscv::TvArchObjective> prob(obj, xs, k, u, h, s);
    const auto est = lscv::minimize_local(prob, spec.theta_box.project(vec({0.5, 0.3})), spec.theta_box);
    ASSERT_TRUE(est.diag.converged);
    sum += lscv::term_value(obj, xs, s, est.theta);
  }
  const auto ev = lscv::evaluate_bandwidth(obj, xs, k, w, h, spec.theta_box);
  EXPECT_FALSE(ev.poisoned);
  EXPECT_NEAR(ev.cv, sum / 60.0, 1e-8);
}

TEST(Cv, EmptySupportGivesZero) {
  const std::vector<double> xs = {0.1, -0.3, 0.2, 0.5};
  const auto w = lscv::make_weight(0.3, 0.4);
  EXPECT_EQ(lscv::cv_functional(lscv::TvArchObjective(1), xs, lscv::epanechnikov(), w, 0.5,
                                ModelSpec::tvarch(1).theta_box),
            0.0);
}

TEST(Select, TiesGoToSmallerBandwidth) {
  const std::vector<double> v = {3.0, 1.0, 2.0, 1.0};
  EXPECT_EQ(lscv::select_from_values(v), 1u);
  const std::vector<double> poisoned = {kInf, NAN, 2.0, 5.0};
  EXPECT_EQ(lscv::select_from_values(poisoned), 2u);
  const std::vector<double> none = {kInf, kInf};
  EXPECT_THROW(lscv::select_from_values(none), lscv::NumericalError);
}

TEST(Select, OnePointGrid) {
  const auto spec = ModelSpec::tvar(1);
  const auto xs = lscv::simulate(spec, lscv::preset_curve(lscv::ModelId::A), 100, {1, 1}).values;
  const auto grid = lscv::BandwidthGrid::log_spaced(0.3, 0.3, 1);
  const auto rep = lscv::select_bandwidth(lscv::make_objective(spec), xs, lscv::epanechnikov(),
                                          lscv::make_weight(0.05, 0.95), grid, spec.theta_box);
  EXPECT_EQ(rep.h_hat, 0.3);
  EXPECT_EQ(rep.cv_values.size(), 1u);
}

TEST(Select, WorkersDoNotChangeTheResult) {
  const auto spec = ModelSpec::tvma1();
  const auto xs = lscv::simulate(spec, lscv::preset_curve(lscv::ModelId::B), 150, {2, 1}).values;
  const auto grid = lscv::BandwidthGrid::log_spaced(0.1, 0.8, 5);
  const auto w = lscv::make_weight(0.05, 0.95);
  const auto a = lscv::select_bandwidth(lscv::make_objective(spec), xs, lscv::epanechnikov(), w, grid,
                                        spec.theta_box, {}, 1);
  const auto b = lscv::select_bandwidth(lscv::make_objective(spec), xs, lscv::epanechnikov(), w, grid,
                                        spec.theta_box, {}, 3);
  EXPECT_EQ(a.cv_values, b.cv_values);
  EXPECT_EQ(a.h_hat_index, b.h_hat_index);
}

TEST(Distance, ZeroAtTruthAndWeightedOtherwise) {
  const auto spec = ModelSpec::tvar(1);
  const auto curve = lscv::preset_curve(lscv::ModelId::A);
  const auto xs = lscv::simulate(spec, curve, 100, {1, 1}).values;
  const auto w = lscv::make_weight(0.05, 0.95);
  auto fit = lscv::fit_curve(lscv::TvArObjective(1), xs, lscv::epanechnikov(), 0.3, w, spec.theta_box);
  const lscv::InfoMatrices info(spec);
  const auto truth = lscv::make_truth(curve, info, w, 100);
  for (std::size_t i = 0; i < fit.size(); ++i) fit.estimates[i] = truth.theta[i];
  EXPECT_EQ(lscv::distance_dA(fit, truth), 0.0);
  double expect = 0.0;
  for (std::size_t i = 0; i < fit.size(); ++i) {
    fit.estimates[i][0] += 0.1;
    const double a = truth.theta[i][0];
    expect += 0.01 / (1.0 - a * a);
  }
  EXPECT_NEAR(lscv::distance_dA(fit, truth), expect / 100.0, 1e-14);
  EXPECT_NEAR(lscv::distance_dA(fit, curve, info, w), expect / 100.0, 1e-14);
}

TEST(Plugin, H0ScalesAsNToMinusOneFifth) {
  const auto k = lscv::epanechnikov();
  const double a = lscv::h0_formula(1.8, 8954.0, 100, k);
  const double b = lscv::h0_formula(1.8, 8954.0, 3200, k);
  EXPECT_NEAR(b / a, 0.5, 1e-14);
}

TEST(Plugin, H0MinimizesDmStarStar) {
  const auto k = lscv::epanechnikov();
  const double V0 = 1.8, B0 = 8954.0;
  const std::size_t n = 500;
  const double h0 = lscv::h0_formula(V0, B0, n, k);
  const auto grid = lscv::BandwidthGrid::log_spaced(0.01, 1.0, 400);
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (lscv::dM_star_star(grid[i], n, V0, B0, k) < lscv::dM_star_star(grid[best], n, V0, B0, k)) best = i;
  }
  const double step = grid[1] / grid[0];
  EXPECT_LE(std::abs(std::log(grid[best] / h0)), std::log(step));
  // First-order condition mu_K V0 / (n h^2) = h^3 d_K^2 B0.
  EXPECT_NEAR(k.mu_k() * V0 / (n * h0 * h0), std::pow(h0, 3) * k.d_k() * k.d_k() * B0, 1e-9);
}

TEST(Plugin, DegenerateBiasThrows) {
  const auto k = lscv::epanechnikov();
  EXPECT_THROW(lscv::h0_formula(1.8, 0.0, 500, k), lscv::DegenerateBias);
  EXPECT_THROW(lscv::h0_formula(0.0, 1.0, 500, k), lscv::NumericalError);
  const auto spec = ModelSpec::tvar(1);
  const lscv::InfoMatrices info(spec);
  EXPECT_THROW(lscv::plugin_h0(lscv::ParamCurve::constant(vec({0.5, 1.0})), k, lscv::make_weight(0.05, 0.95), 500,
                               info),
               lscv::DegenerateBias);
}

TEST(Plugin, NoPluginForThresholdModel) {
  const auto spec = ModelSpec::tvtar1();
  const lscv::InfoMatrices info(spec, 1000);
  EXPECT_THROW(lscv::plugin_h0(lscv::preset_curve(lscv::ModelId::D), lscv::epanechnikov(),
                               lscv::make_weight(0.05, 0.95), 500, info),
               lscv::ConfigError);
}

TEST(Plugin, SimpsonExactOnCubics) {
  EXPECT_NEAR(lscv::simpson([](double x) { return x * x * x - 2 * x + 1; }, 0.0, 2.0, 11), 4.0 - 4.0 + 2.0, 1e-13);
  EXPECT_THROW(lscv::simpson([](double x) { return x; }, 0.0, 1.0, 4), lscv::ConfigError);
}

/// B0 for model (a) by adaptive quadrature with hand-differentiated curves.
TEST(Plugin, ModelAConstantsMatchQuadrature) {
  auto integrand = [](double u) {
    const double s = std::sin(kTwoPi * u), c = std::cos(kTwoPi * u);
    const double a = 0.9 * s, a1 = 0.9 * kTwoPi * c, a2 = -0.9 * kTwoPi * kTwoPi * s;
    const double sg = 0.3 * s + 0.5, sg1 = 0.3 * kTwoPi * c, sg2 = -0.3 * kTwoPi * kTwoPi * s;
    const double q = 1.0 - a * a;
    const double ta = a2 + 4.0 * (a * a1 * a1 / q + a1 * sg1 / sg);
    const double ts = sg2 + sg * (a1 * a1 / q + (sg1 / sg) * (sg1 / sg));
    return ta * ta / q + 2.0 / (sg * sg) * ts * ts;
  };
  const double B0 = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.05, 0.95, 10, 1e-13);
  const auto spec = lscv::preset_spec(lscv::ModelId::A);
  const lscv::InfoMatrices info(spec);
  const auto res = lscv::plugin_h0(lscv::preset_curve(lscv::ModelId::A), lscv::epanechnikov(),
                                   lscv::make_weight(0.05, 0.95), 500, info);
  EXPECT_NEAR(res.V0, 1.8, 1e-12);
  EXPECT_NEAR(res.B0, B0, 1e-8 * B0);
  EXPECT_NEAR(res.h0, std::pow(1.8 * 1.2 / (B0 * 0.0025), 0.2) * std::pow(500.0, -0.2), 1e-10);
}

/// P = d/du V(theta(u)) for tvARCH(1) from the pathwise derivative recursion
/// dX_t^2/dtheta_k = eps_t^2 (mu_k + a_1 dX_{t-1}^2/dtheta_k) on an independent path.
Mat arch_p_oracle(const Vec& th, const Vec& d1, std::size_t n) {
  const auto path = lscv::simulate_stationary(ModelSpec::tvarch(1), th, n, {0x0dd, 3}, true);
  const auto& x = path.values;
  const auto& eps = path.innovations;
  Mat dV = Mat::Zero(2, 2);
  double D0 = 0.0, D1 = 0.0;  // dX_{t-1}^2 / d a_0, d a_1
  for (std::size_t t = 1; t < n; ++t) {
    const double y = x[t - 1] * x[t - 1];
    const double e2 = eps[t - 1] * eps[t - 1];
    const double y_prev = t >= 2 ? x[t - 2] * x[t - 2] : 0.0;
    const double nD0 = e2 * (1.0 + th[1] * D0);
    const double nD1 = e2 * (y_prev + th[1] * D1);
    D0 = nD0;
    D1 = nD1;
    if (t < 100) continue;
    const double v = th[0] + th[1] * y;
    const double dy = d1[0] * D0 + d1[1] * D1;
    const double dv = d1[0] + d1[1] * y + th[1] * dy;
    Mat m(2, 2);
    m << 1.0, y, y, y * y;
    Mat dm(2, 2);
    dm << 0.0, dy, dy, 2.0 * y * dy;
    dV += 0.5 * (dm / (v * v) - 2.0 * m * dv / (v * v * v));
  }
  return dV / static_cast<double>(n - 100);
}

TEST(Plugin, ArchBiasMatchesPathwiseDerivativeOracle) {
  const auto spec = lscv::preset_spec(lscv::ModelId::C);
  const auto curve = lscv::preset_curve(lscv::ModelId::C);
  const lscv::InfoMatrices info(spec, 50000);
  const auto w = lscv::make_weight(0.05, 0.95);
  const auto res = lscv::plugin_constants(curve, info, w);
  const lscv::InfoMatrices oracle_info(spec, 50000, 0xfeed);
  const std::size_t m = 101;
  std::vector<double> vals(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double u = 0.05 + 0.9 * static_cast<double>(i) / (m - 1);
    const Vec th = curve(u), d1 = curve.d1(u), d2 = curve.d2(u);
    const Mat V = oracle_info.V(th);
    const Mat P = arch_p_oracle(th, d1, 50000);
    const Vec g = d2 + 2.0 * V.ldlt().solve(P * d1);
    vals[i] = g.dot(V * g);
  }
  const double B0 = lscv::detail::simpson_values(0.05, 0.95, vals);
  EXPECT_NEAR(res.V0, 1.8, 1e-9);
  EXPECT_NEAR(res.B0, B0, 0.05 * B0);
}

TEST(Misspecification, Ma1TargetsFromAutocovariances) {
  const auto src = ModelSpec::tvma1();
  const auto target = lscv::misspecified_target(src, lscv::ParamCurve::constant(vec({0.9, 0.8})));
  const Vec t = target(0.3);
  const double g0 = 0.64 * (1.0 + 0.81), g1 = 0.9 * 0.64;
  const double rho = g1 / g0;
  EXPECT_NEAR(t[0], rho, 1e-14);
  EXPECT_NEAR(t[1], std::sqrt(g0 * (1.0 - rho * rho)), 1e-14);
  EXPECT_NEAR(t[0], 0.497238, 1e-6);
  EXPECT_NEAR(t[1], 0.93374, 1e-4);
  const Vec half = lscv::misspecified_target(src, lscv::ParamCurve::constant(vec({0.5, 1.0})))(0.5);
  EXPECT_NEAR(half[0], 0.4, 1e-15);
}

TEST(Misspecification, ArchTargetIsWhiteNoise) {
  const auto target =
      lscv::misspecified_target(ModelSpec::tvarch(1), lscv::ParamCurve::constant(vec({0.4, 0.2})))(0.5);
  EXPECT_EQ(target[0], 0.0);
  EXPECT_NEAR(target[1], 0.70711, 1e-5);
  EXPECT_THROW(lscv::misspecified_target(ModelSpec::tvtar1(), lscv::preset_curve(lscv::ModelId::D)),
               lscv::ConfigError);
}

}  // namespace
