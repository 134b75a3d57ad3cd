#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "lscv/curve.hpp"
#include "lscv/rng.hpp"
#include "lscv/types.hpp"

namespace lscv {

enum class Family { TvAR, TvMA1, TvARCH, TvTAR1 };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::TvAR: return "tvAR";
    case Family::TvMA1: return "tvMA1";
    case Family::TvARCH: return "tvARCH";
    case Family::TvTAR1: return "tvTAR1";
  }
  return "unknown";
}

/// Closed coordinate-wise box.
struct Box {
  Vec lo;
  Vec hi;

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains(const Vec& theta) const {
    for (int i = 0; i < dim(); ++i) {
      if (!(theta[i] >= lo[i] && theta[i] <= hi[i])) return false;
    }
    return true;
  }

  Vec project(const Vec& theta) const { return theta.cwiseMax(lo).cwiseMin(hi); }
};

/// Lower bound for tvARCH coefficients.
inline constexpr double kRhoMin = 1e-3;

/// Model family, order and parameter space.
///
/// Parameter layouts:
///   tvAR(r):   (alpha_1..alpha_r, sigma)
///   tvMA(1):   (alpha, sigma)
///   tvARCH(r): (a_0..a_r)
///   tvTAR(1):  (a_1, a_2, sigma)
struct ModelSpec {
  Family family = Family::TvAR;
  int order = 1;
  Box theta_box;
  Innovation innovation = Innovation::Gaussian;

  int dim() const {
    switch (family) {
      case Family::TvAR: return order + 1;
      case Family::TvMA1: return 2;
      case Family::TvARCH: return order + 1;
      case Family::TvTAR1: return 3;
    }
    return 0;
  }

  std::string name() const {
    switch (family) {
      case Family::TvAR: return "tvAR(" + std::to_string(order) + ")";
      case Family::TvMA1: return "tvMA(1)";
      case Family::TvARCH: return "tvARCH(" + std::to_string(order) + ")";
      case Family::TvTAR1: return "tvTAR(1)";
    }
    return "unknown";
  }

  std::vector<std::string> parameter_names() const {
    std::vector<std::string> out;
    switch (family) {
      case Family::TvAR:
        if (order == 1) {
          out.push_back("alpha");
        } else {
          for (int j = 1; j <= order; ++j) out.push_back("alpha_" + std::to_string(j));
        }
        out.push_back("sigma");
        break;
      case Family::TvMA1: out = {"alpha", "sigma"}; break;
      case Family::TvARCH:
        for (int j = 0; j <= order; ++j) out.push_back("a" + std::to_string(j));
        break;
      case Family::TvTAR1: out = {"a1", "a2", "sigma"}; break;
    }
    return out;
  }

  /// Checks the family-specific box constraints; throws ConfigError.
  void validate() const {
    const int p = dim();
    if (theta_box.dim() != p || theta_box.hi.size() != p) throw ConfigError(name() + ": box dimension mismatch");
    for (int i = 0; i < p; ++i) {
      if (!(theta_box.lo[i] <= theta_box.hi[i])) throw ConfigError(name() + ": empty box interval");
    }
    switch (family) {
      case Family::TvAR:
        if (order < 1 || order + 1 > kMaxDim) throw ConfigError("tvAR: order out of range");
        if (!(theta_box.lo[order] > 0.0)) throw ConfigError("tvAR: sigma lower bound must be positive");
        break;
      case Family::TvMA1:
        if (!(theta_box.lo[0] > -1.0 && theta_box.hi[0] < 1.0)) throw ConfigError("tvMA1: alpha interval must lie in (-1, 1)");
        if (!(theta_box.lo[1] > 0.0)) throw ConfigError("tvMA1: sigma lower bound must be positive");
        break;
      case Family::TvARCH:
        if (order < 1 || order + 1 > kMaxDim) throw ConfigError("tvARCH: order out of range");
        for (int i = 0; i < p; ++i) {
          if (!(theta_box.lo[i] >= kRhoMin)) throw ConfigError("tvARCH: coefficient lower bounds must be >= rho_min");
        }
        break;
      case Family::TvTAR1:
        if (!(std::abs(theta_box.lo[0]) < 1.0 && std::abs(theta_box.hi[0]) < 1.0 && std::abs(theta_box.lo[1]) < 1.0 &&
              std::abs(theta_box.hi[1]) < 1.0)) {
          throw ConfigError("tvTAR1: threshold coefficients must lie in (-1, 1)");
        }
        if (!(theta_box.lo[2] > 0.0)) throw ConfigError("tvTAR1: sigma lower bound must be positive");
        break;
    }
  }

  static ModelSpec tvar(int r, Innovation e = Innovation::Gaussian) {
    ModelSpec s{Family::TvAR, r, {}, e};
    s.theta_box.lo = Vec::Constant(r + 1, -0.99);
    s.theta_box.hi = Vec::Constant(r + 1, 0.99);
    s.theta_box.lo[r] = 1e-3;
    s.theta_box.hi[r] = 10.0;
    return s;
  }

  static ModelSpec tvma1(Innovation e = Innovation::Gaussian) {
    ModelSpec s{Family::TvMA1, 1, {}, e};
    s.theta_box.lo = Vec(2);
    s.theta_box.hi = Vec(2);
    s.theta_box.lo << -0.99, 1e-3;
    s.theta_box.hi << 0.99, 10.0;
    return s;
  }

  static ModelSpec tvarch(int r, Innovation e = Innovation::Gaussian) {
    ModelSpec s{Family::TvARCH, r, {}, e};
    s.theta_box.lo = Vec::Constant(r + 1, kRhoMin);
    s.theta_box.hi = Vec::Constant(r + 1, 0.99);
    s.theta_box.hi[0] = 10.0;
    return s;
  }

  static ModelSpec tvtar1(Innovation e = Innovation::Gaussian) {
    ModelSpec s{Family::TvTAR1, 1, {}, e};
    s.theta_box.lo = Vec(3);
    s.theta_box.hi = Vec(3);
    s.theta_box.lo << -0.99, -0.99, 1e-3;
    s.theta_box.hi << 0.99, 0.99, 10.0;
    return s;
  }
};

/// The four simulation designs.
enum class ModelId { A, B, C, D };

inline ModelId parse_model_id(const std::string& s) {
  if (s == "a" || s == "model-a") return ModelId::A;
  if (s == "b" || s == "model-b") return ModelId::B;
  if (s == "c" || s == "model-c") return ModelId::C;
  if (s == "d" || s == "model-d") return ModelId::D;
  throw ConfigError("model: unknown preset '" + s + "' (expected a, b, c or d)");
}

inline char to_char(ModelId m) { return static_cast<char>('a' + static_cast<int>(m)); }

inline ModelSpec preset_spec(ModelId m, Innovation e = Innovation::Gaussian) {
  switch (m) {
    case ModelId::A: return ModelSpec::tvar(1, e);
    case ModelId::B: return ModelSpec::tvma1(e);
    case ModelId::C: return ModelSpec::tvarch(1, e);
    case ModelId::D: return ModelSpec::tvtar1(e);
  }
  return ModelSpec::tvar(1, e);
}

/// True parameter curves of the simulation designs.
///   (a) tvAR(1):   alpha = 0.9 sin(2 pi u), sigma = 0.3 sin(2 pi u) + 0.5
///   (b) tvMA(1):   same curves as (a)
///   (c) tvARCH(1): a_0 = 0.2 sin(2 pi u) + 0.4, a_1 = 0.1 sin(2 pi u) + 0.2
///   (d) tvTAR(1):  a_1 = 0.4 sin(2 pi u), a_2 = 0.5 cos(2 pi u), sigma = 1
inline ParamCurve preset_curve(ModelId m) {
  using detail::Trig;
  switch (m) {
    case ModelId::A:
    case ModelId::B: return detail::trig_curve({Trig{0.0, 0.9, 0.0}, Trig{0.5, 0.3, 0.0}});
    case ModelId::C: return detail::trig_curve({Trig{0.4, 0.2, 0.0}, Trig{0.2, 0.1, 0.0}});
    case ModelId::D: return detail::trig_curve({Trig{0.0, 0.4, 0.0}, Trig{0.0, 0.0, 0.5}, Trig{1.0, 0.0, 0.0}});
  }
  return detail::trig_curve({});
}

}  // namespace lscv
