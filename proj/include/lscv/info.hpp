#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>

#include <Eigen/Cholesky>

#include "lscv/model.hpp"
#include "lscv/processes.hpp"
#include "lscv/rng.hpp"
#include "lscv/types.hpp"

namespace lscv {

enum class InfoSource { ClosedForm, MonteCarlo };

/// V(theta), the expected Hessian of ell, and I(theta), the score covariance.
struct InfoPair {
  Mat V;
  Mat I;
};

/// Information matrices of the stationary approximation for one model.
///
/// tvAR(1) and tvMA(1) use closed forms. tvAR(r > 1), tvARCH(r) and tvTAR(1)
/// average over a stationary path of length n_mc drawn from a fixed stream,
/// so evaluations at nearby theta share their random numbers.
class InfoMatrices {
 public:
  static constexpr std::size_t kDefaultMcLength = 100000;
  static constexpr std::uint64_t kDefaultMcSeed = 0x5eed1f0ULL;

  explicit InfoMatrices(ModelSpec spec, std::size_t n_mc = kDefaultMcLength, std::uint64_t mc_seed = kDefaultMcSeed)
      : spec_(std::move(spec)), n_mc_(n_mc), mc_seed_(mc_seed) {
    spec_.validate();
    if (n_mc_ < 10) throw ConfigError("Monte Carlo length for information matrices must be at least 10");
  }

  const ModelSpec& spec() const { return spec_; }
  std::size_t mc_length() const { return n_mc_; }
  std::uint64_t mc_seed() const { return mc_seed_; }

  InfoSource source() const {
    const bool closed = (spec_.family == Family::TvAR && spec_.order == 1) || spec_.family == Family::TvMA1;
    return closed ? InfoSource::ClosedForm : InfoSource::MonteCarlo;
  }

  InfoPair at(const Vec& th) const {
    if (th.size() != spec_.dim()) throw ConfigError("theta has wrong dimension for " + spec_.name());
    const auto [m3, m4] = innovation_moments(spec_.innovation);
    switch (spec_.family) {
      case Family::TvAR:
        if (spec_.order == 1) return ar1(th, m3, m4);
        return mean_model_mc(th, m3, m4);
      case Family::TvMA1: return ar1(th, m3, m4);
      case Family::TvTAR1: return mean_model_mc(th, m3, m4);
      case Family::TvARCH: return arch_mc(th, m4);
    }
    throw ConfigError("unsupported family");
  }

  Mat V(const Vec& th) const { return at(th).V; }
  Mat I(const Vec& th) const { return at(th).I; }

  /// tr(V^{-1} I).
  static double trace_vinv_i(const InfoPair& info) {
    if (!info.I.allFinite()) return std::numeric_limits<double>::infinity();
    return info.V.ldlt().solve(info.I).trace();
  }

 private:
  /// V = diag(1/(1-alpha^2), 2/sigma^2).
  static InfoPair ar1(const Vec& th, double, double m4) {
    const double a = th[0];
    const double s = th[1];
    InfoPair out{Mat::Zero(2, 2), Mat::Zero(2, 2)};
    out.V(0, 0) = 1.0 / (1.0 - a * a);
    out.V(1, 1) = 2.0 / (s * s);
    out.I(0, 0) = out.V(0, 0);
    out.I(1, 1) = (m4 - 1.0) / (s * s);
    return out;
  }

  SimulatedSeries stationary_path(const Vec& th) const {
    return simulate_stationary(spec_, th, n_mc_, StreamSeed{mc_seed_, 0});
  }

  /// Mean models with regressors mu: V = (1/sigma^2) blockdiag(W, 2) with
  /// W = E[mu mu'], I = (1/sigma^2) [[W, m3 E mu], [m3 E mu', m4 - 1]].
  InfoPair mean_model_mc(const Vec& th, double m3, double m4) const {
    const int q = static_cast<int>(th.size()) - 1;
    const double s2 = th[q] * th[q];
    const SimulatedSeries path = stationary_path(th);
    const auto& x = path.values;
    Mat W = Mat::Zero(q, q);
    Vec mean = Vec::Zero(q);
    Vec mu(q);
    std::size_t count = 0;
    for (std::size_t t = static_cast<std::size_t>(q); t < x.size(); ++t) {
      if (spec_.family == Family::TvTAR1) {
        mu[0] = std::max(x[t - 1], 0.0);
        mu[1] = std::max(-x[t - 1], 0.0);
      } else {
        for (int j = 0; j < q; ++j) mu[j] = x[t - 1 - static_cast<std::size_t>(j)];
      }
      W.noalias() += mu * mu.transpose();
      mean += mu;
      ++count;
    }
    W /= static_cast<double>(count);
    mean /= static_cast<double>(count);
    InfoPair out{Mat::Zero(q + 1, q + 1), Mat::Zero(q + 1, q + 1)};
    out.V.topLeftCorner(q, q) = W / s2;
    out.V(q, q) = 2.0 / s2;
    out.I.topLeftCorner(q, q) = W / s2;
    out.I.block(0, q, q, 1) = m3 * mean / s2;
    out.I.block(q, 0, 1, q) = m3 * mean.transpose() / s2;
    out.I(q, q) = (m4 - 1.0) / s2;
    return out;
  }

  /// V = 1/2 E[mu mu' / <theta, mu>^2], mu = (1, X_{t-1}^2, ..., X_{t-r}^2);
  /// I = (m4 - 1)/2 V.
  InfoPair arch_mc(const Vec& th, double m4) const {
    const int p = static_cast<int>(th.size());
    const int r = p - 1;
    const SimulatedSeries path = stationary_path(th);
    const auto& x = path.values;
    Mat acc = Mat::Zero(p, p);
    Vec mu(p);
    mu[0] = 1.0;
    std::size_t count = 0;
    for (std::size_t t = static_cast<std::size_t>(r); t < x.size(); ++t) {
      for (int j = 1; j <= r; ++j) {
        const double y = x[t - static_cast<std::size_t>(j)];
        mu[j] = y * y;
      }
      const double v = th.dot(mu);
      acc.noalias() += mu * mu.transpose() / (v * v);
      ++count;
    }
    InfoPair out;
    out.V = 0.5 * acc / static_cast<double>(count);
    out.I = 0.5 * (m4 - 1.0) * out.V;
    return out;
  }

  ModelSpec spec_;
  std::size_t n_mc_;
  std::uint64_t mc_seed_;
};

/// Closed-form entry for tvAR(1) and tvMA(1); throws for other families.
inline InfoPair info_matrices_closed_form(const ModelSpec& spec, const Vec& th) {
  const InfoMatrices info(spec);
  if (info.source() != InfoSource::ClosedForm) {
    throw ConfigError(spec.name() + ": no closed-form information matrices (use the Monte Carlo source)");
  }
  return info.at(th);
}

}  // namespace lscv
