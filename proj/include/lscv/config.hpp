#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "lscv/curve.hpp"
#include "lscv/experiments.hpp"
#include "lscv/kernel.hpp"
#include "lscv/model.hpp"
#include "lscv/rng.hpp"
#include "lscv/types.hpp"

namespace lscv {

/// Curve given as samples on the uniform grid u_i = i/(m-1), one column per
/// parameter, interpolated by cubic B-splines.
struct CurveTable {
  Family family = Family::TvAR;
  int order = 1;
  std::vector<std::vector<double>> columns;
};

inline Family parse_family(const std::string& s) {
  if (s == "tvAR") return Family::TvAR;
  if (s == "tvMA1") return Family::TvMA1;
  if (s == "tvARCH") return Family::TvARCH;
  if (s == "tvTAR1") return Family::TvTAR1;
  throw ConfigError("model.family: unknown family '" + s + "' (expected tvAR, tvMA1, tvARCH or tvTAR1)");
}

struct GridConfig {
  double h_min = 0.01;
  double h_max = 1.0;
  std::size_t points = 40;

  BandwidthGrid make() const { return BandwidthGrid::log_spaced(h_min, h_max, points); }
};

/// Declarative run description shared by all subcommands.
struct RunConfig {
  std::optional<ModelId> preset = ModelId::A;
  std::optional<CurveTable> table;
  std::size_t n = 500;
  std::size_t reps = 200;
  GridConfig grid;
  std::uint64_t seed = 1;
  std::string out = "out";
  StudyMode mode = StudyMode::WellSpecified;
  Innovation innovation = Innovation::Gaussian;
  unsigned workers = 1;
  double weight_a = 0.05;
  double weight_b = 0.95;

  ModelSpec spec() const {
    if (preset) return preset_spec(*preset, innovation);
    switch (table->family) {
      case Family::TvAR: return ModelSpec::tvar(table->order, innovation);
      case Family::TvMA1: return ModelSpec::tvma1(innovation);
      case Family::TvARCH: return ModelSpec::tvarch(table->order, innovation);
      case Family::TvTAR1: return ModelSpec::tvtar1(innovation);
    }
    return ModelSpec::tvar(1, innovation);
  }

  ParamCurve curve() const { return preset ? preset_curve(*preset) : ParamCurve::from_table(table->columns); }

  /// Throws ConfigError naming the first offending key.
  void validate() const {
    if (preset.has_value() == table.has_value()) throw ConfigError("model: give exactly one of a preset or a curve table");
    if (table) {
      const ModelSpec s = spec();
      s.validate();
      if (static_cast<int>(table->columns.size()) != s.dim()) {
        throw ConfigError("model.columns: " + s.name() + " needs " + std::to_string(s.dim()) + " columns");
      }
      try {
        const ParamCurve c = curve();
        const std::size_t m = table->columns.front().size();
        for (std::size_t i = 0; i < m; ++i) {
          const double u = static_cast<double>(i) / static_cast<double>(m - 1);
          detail::check_theta(s, c(u), u);
        }
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("model.columns: ") + e.what());
      }
    }
    if (n < 2) throw ConfigError("n: series length must be at least 2");
    if (reps < 1) throw ConfigError("reps: need at least one replication");
    if (workers < 1) throw ConfigError("workers: need at least one worker");
    try {
      grid.make();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("grid: ") + e.what());
    }
    try {
      make_weight(weight_a, weight_b);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("weight: ") + e.what());
    }
    if (mode == StudyMode::MisspecifiedToTvAR && preset != ModelId::B && preset != ModelId::C) {
      throw ConfigError("mode: misspecified runs are defined for models b and c only");
    }
  }

  ExperimentConfig experiment() const {
    validate();
    if (!preset) throw ConfigError("model: studies need a preset model (a, b, c or d)");
    ExperimentConfig e;
    e.model = *preset;
    e.n = n;
    e.reps = reps;
    e.grid = grid.make();
    e.base_seed = seed;
    e.innovation = innovation;
    e.mode = mode;
    e.weight_a = weight_a;
    e.weight_b = weight_b;
    e.workers = workers;
    return e;
  }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError((where.empty() ? std::string("config") : where) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) throw ConfigError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

template <class T>
T json_get(const nlohmann::json& j, const std::string& path) {
  if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
    if (!j.is_number_integer() || (!j.is_number_unsigned() && j.get<long long>() < 0)) {
      throw ConfigError(path + ": expected a non-negative integer");
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!j.is_number()) throw ConfigError(path + ": expected a number");
  }
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + ": wrong type");
  }
}

template <class T>
void json_read(const nlohmann::json& obj, const char* key, const std::string& where, T& out) {
  if (!obj.contains(key)) return;
  out = json_get<T>(obj.at(key), where.empty() ? key : where + "." + key);
}

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  using detail::json_get;
  using detail::json_read;
  detail::reject_unknown(j, "", {"model", "n", "reps", "grid", "seed", "out", "mode", "innovation", "workers", "weight"});
  RunConfig c;
  if (j.contains("model")) {
    const auto& m = j.at("model");
    if (m.is_string()) {
      c.preset = parse_model_id(m.get<std::string>());
    } else {
      detail::reject_unknown(m, "model", {"family", "order", "columns"});
      if (!m.contains("family")) throw ConfigError("model.family: missing");
      if (!m.contains("columns")) throw ConfigError("model.columns: missing");
      CurveTable t;
      t.family = parse_family(json_get<std::string>(m.at("family"), "model.family"));
      json_read(m, "order", "model", t.order);
      t.columns = json_get<std::vector<std::vector<double>>>(m.at("columns"), "model.columns");
      c.preset.reset();
      c.table = std::move(t);
    }
  }
  json_read(j, "n", "", c.n);
  json_read(j, "reps", "", c.reps);
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    detail::reject_unknown(g, "grid", {"h_min", "h_max", "points"});
    json_read(g, "h_min", "grid", c.grid.h_min);
    json_read(g, "h_max", "grid", c.grid.h_max);
    json_read(g, "points", "grid", c.grid.points);
  }
  json_read(j, "seed", "", c.seed);
  json_read(j, "out", "", c.out);
  if (j.contains("mode")) c.mode = parse_study_mode(json_get<std::string>(j.at("mode"), "mode"));
  if (j.contains("innovation")) c.innovation = parse_innovation(json_get<std::string>(j.at("innovation"), "innovation"));
  json_read(j, "workers", "", c.workers);
  if (j.contains("weight")) {
    const auto& w = j.at("weight");
    detail::reject_unknown(w, "weight", {"a", "b"});
    json_read(w, "a", "weight", c.weight_a);
    json_read(w, "b", "weight", c.weight_b);
  }
  c.validate();
  return c;
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  if (c.preset) {
    j["model"] = std::string("model-") + to_char(*c.preset);
  } else {
    j["model"] = {{"family", to_string(c.table->family)}, {"order", c.table->order}, {"columns", c.table->columns}};
  }
  j["n"] = c.n;
  j["reps"] = c.reps;
  j["grid"] = {{"h_min", c.grid.h_min}, {"h_max", c.grid.h_max}, {"points", c.grid.points}};
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["mode"] = to_string(c.mode);
  j["innovation"] = to_string(c.innovation);
  j["workers"] = c.workers;
  j["weight"] = {{"a", c.weight_a}, {"b", c.weight_b}};
  return j;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

/// Parses "MIN:MAX:POINTS".
inline GridConfig parse_grid_spec(const std::string& s) {
  const auto a = s.find(':');
  const auto b = a == std::string::npos ? a : s.find(':', a + 1);
  if (b == std::string::npos || s.find(':', b + 1) != std::string::npos) {
    throw ConfigError("grid: expected MIN:MAX:POINTS, got '" + s + "'");
  }
  GridConfig g;
  try {
    std::size_t used = 0;
    const std::string lo = s.substr(0, a), hi = s.substr(a + 1, b - a - 1), pts = s.substr(b + 1);
    g.h_min = std::stod(lo, &used);
    if (used != lo.size()) throw std::invalid_argument(lo);
    g.h_max = std::stod(hi, &used);
    if (used != hi.size()) throw std::invalid_argument(hi);
    const long long p = std::stoll(pts, &used);
    if (used != pts.size() || p < 1) throw std::invalid_argument(pts);
    g.points = static_cast<std::size_t>(p);
  } catch (const std::logic_error&) {
    throw ConfigError("grid: expected MIN:MAX:POINTS, got '" + s + "'");
  }
  return g;
}

}  // namespace lscv
