#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "lscv/estimator.hpp"
#include "lscv/experiments.hpp"
#include "lscv/model.hpp"
#include "lscv/plot.hpp"
#include "lscv/processes.hpp"
#include "lscv/selection.hpp"
#include "lscv/types.hpp"

namespace lscv {

/// File could not be read or written. Maps to CLI exit code 2.
class IoError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Shortest decimal form that reads back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw IoError("not a number: '" + std::string(s) + "'");
  }
  return x;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline nlohmann::json optional_number(const std::optional<double>& x) {
  if (!x || !std::isfinite(*x)) return nullptr;
  return *x;
}

}  // namespace detail

/// Columns t, u = t/n, x.
inline void write_series_csv(std::ostream& out, std::span<const double> xs) {
  out << "t,u,x\n";
  const double nd = static_cast<double>(xs.size());
  for (std::size_t t = 1; t <= xs.size(); ++t) {
    out << t << ',' << format_double(static_cast<double>(t) / nd) << ',' << format_double(xs[t - 1]) << '\n';
  }
}

inline void write_series_csv(const std::filesystem::path& path, std::span<const double> xs) {
  auto out = detail::open_out(path);
  write_series_csv(out, xs);
}

/// Reads the last column of a CSV file with an optional header row, or a
/// single column of numbers.
inline std::vector<double> read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<double> xs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split(line, ',');
    try {
      xs.push_back(parse_double(cells.back()));
    } catch (const IoError&) {
      if (lineno == 1) continue;
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": not a number");
    }
  }
  if (xs.empty()) throw IoError(path.string() + ": no observations");
  return xs;
}

/// FNV-1a over the model family, order, box and innovation law.
inline std::uint64_t spec_hash(const ModelSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::string name = spec.name() + "/" + to_string(spec.innovation);
  mix(name.data(), name.size());
  for (int i = 0; i < spec.theta_box.dim(); ++i) {
    const double lo = spec.theta_box.lo[i], hi = spec.theta_box.hi[i];
    mix(&lo, sizeof lo);
    mix(&hi, sizeof hi);
  }
  return h;
}

inline constexpr char kCacheMagic[8] = {'L', 'S', 'C', 'V', 'S', 'E', 'R', '1'};

/// Binary layout: magic, n, seed, stream, spec hash (uint64 each), n doubles.
inline void write_series_cache(const std::filesystem::path& path, const SimulatedSeries& s) {
  auto out = detail::open_out(path, true);
  const std::uint64_t header[4] = {s.n(), s.seed.seed, s.seed.stream, spec_hash(s.spec)};
  out.write(kCacheMagic, sizeof kCacheMagic);
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(s.values.data()), static_cast<std::streamsize>(s.n() * sizeof(double)));
  if (!out) throw IoError("cannot write " + path.string());
}

struct SeriesCache {
  std::vector<double> values;
  StreamSeed seed;
  std::uint64_t spec_hash = 0;
};

inline SeriesCache read_series_cache(const std::filesystem::path& path,
                                     std::optional<std::uint64_t> expected_hash = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  char magic[8];
  std::uint64_t header[4];
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (!in || std::memcmp(magic, kCacheMagic, sizeof magic) != 0) throw IoError(path.string() + ": not a series cache");
  SeriesCache c;
  c.seed = {header[1], header[2]};
  c.spec_hash = header[3];
  if (expected_hash && *expected_hash != c.spec_hash) throw IoError(path.string() + ": cached series has another model");
  c.values.resize(header[0]);
  in.read(reinterpret_cast<char*>(c.values.data()), static_cast<std::streamsize>(header[0] * sizeof(double)));
  if (!in) throw IoError(path.string() + ": truncated series cache");
  return c;
}

/// Columns u, one per parameter, converged, iters.
inline void write_fit_csv(std::ostream& out, const LocalFit& fit, const std::vector<std::string>& names) {
  out << 'u';
  for (const auto& name : names) out << ',' << name;
  out << ",converged,iters\n";
  for (std::size_t i = 0; i < fit.size(); ++i) {
    out << format_double(fit.eval_points[i]);
    for (int j = 0; j < fit.estimates[i].size(); ++j) out << ',' << format_double(fit.estimates[i][j]);
    out << ',' << (fit.converged(i) ? 1 : 0) << ',' << fit.newton_iters(i) << '\n';
  }
}

/// Columns h, CV, d_A (empty when the truth is unknown).
inline void write_selection_csv(std::ostream& out, const SelectionReport& rep) {
  out << "h,CV,d_A\n";
  for (std::size_t i = 0; i < rep.grid.size(); ++i) {
    out << format_double(rep.grid[i]) << ',' << format_double(rep.cv_values[i]) << ',';
    if (i < rep.d_A_values.size()) out << format_double(rep.d_A_values[i]);
    out << '\n';
  }
}

inline nlohmann::json selection_summary_json(const SelectionReport& rep) {
  nlohmann::json j;
  j["n"] = rep.n;
  j["h_hat"] = rep.h_hat;
  j["h_star"] = detail::optional_number(rep.h_star);
  j["h_0"] = detail::optional_number(rep.h_0);
  j["V0"] = detail::optional_number(rep.V0);
  j["B0"] = detail::optional_number(rep.B0);
  std::size_t poisoned = 0;
  for (char p : rep.poisoned) poisoned += p ? 1 : 0;
  j["poisoned_bandwidths"] = poisoned;
  return j;
}

inline void write_replications_csv(std::ostream& out, const std::vector<ReplicationResult>& reps) {
  out << "rep,stream,status,h_hat,h_star,h_0,d_A_hat,d_A_star,d_A_h0,poisoned_h,loo_failures,fit_failures,error\n";
  auto opt = [](const std::optional<double>& x) { return x ? format_double(*x) : std::string(); };
  for (const auto& r : reps) {
    out << r.rep_index << ',' << r.seed.stream << ',' << (r.ok ? "ok" : "failed") << ',';
    if (r.ok) {
      out << format_double(r.h_hat) << ',' << format_double(r.h_star) << ',' << opt(r.h_0) << ','
          << format_double(r.d_A_hat) << ',' << format_double(r.d_A_star) << ',' << opt(r.d_A_h0);
    } else {
      out << ",,,,,";
    }
    out << ',' << r.poisoned_h << ',' << r.loo_failures << ',' << r.fit_failures << ','
        << detail::csv_quote(r.error) << '\n';
  }
}

inline nlohmann::json box_json(const std::optional<BoxStats>& b) {
  if (!b) return nullptr;
  return {{"q05", b->q05}, {"q25", b->q25}, {"q50", b->q50}, {"q75", b->q75}, {"q95", b->q95}};
}

inline nlohmann::json study_summary_json(const StudyResult& res) {
  const auto& c = res.config;
  const auto& s = res.summary;
  nlohmann::json j;
  j["config"] = {{"model", std::string("model-") + to_char(c.model)},
                 {"n", c.n},
                 {"reps", c.reps},
                 {"seed", c.base_seed},
                 {"innovation", to_string(c.innovation)},
                 {"mode", to_string(c.mode)},
                 {"grid", {{"h_min", c.grid.h_min()}, {"h_max", c.grid.h_max()}, {"points", c.grid.size()}}},
                 {"weight", {c.weight_a, c.weight_b}}};
  j["replications"] = s.replications;
  j["successes"] = s.successes;
  j["failures"] = s.failures;
  j["denominator"] = s.successes;
  if (s.plugin) {
    j["h_0"] = s.plugin->h0;
    j["h_0_grid"] = detail::optional_number(s.h_0_grid);
    j["V0"] = s.plugin->V0;
    j["B0"] = s.plugin->B0;
  } else {
    j["h_0"] = nullptr;
    j["h_0_grid"] = nullptr;
    j["V0"] = nullptr;
    j["B0"] = nullptr;
  }
  j["h_hat_histogram"] = {{"edges", s.h_hat_histogram.edges}, {"counts", s.h_hat_histogram.counts}};
  j["h_hat_quantiles"] = box_json(s.h_hat_stats);
  j["d_A_quantiles"] = {{"h_hat", box_json(s.d_A_hat)}, {"h_0", box_json(s.d_A_h0)}, {"h_star", box_json(s.d_A_star)}};
  j["median_ratio_hat_star"] = detail::optional_number(s.median_ratio_hat_star);
  return j;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
}


inline constexpr const char* kStudyFiles[] = {"replications.csv", "summary.json", "plots"};

/// True when dir already holds any study output.
inline bool study_outputs_present(const std::filesystem::path& dir) {
  for (const char* f : kStudyFiles) {
    if (std::filesystem::exists(dir / f)) return true;
  }
  return false;
}

/// replications.csv, summary.json, plots/h_hat_histogram.svg and
/// plots/d_A_boxplot.svg.
inline void write_study(const std::filesystem::path& dir, const StudyResult& res) {
  {
    auto out = detail::open_out(dir / "replications.csv");
    write_replications_csv(out, res.replications);
  }
  write_json(dir / "summary.json", study_summary_json(res));
  const auto& s = res.summary;
  {
    auto out = detail::open_out(dir / "plots" / "h_hat_histogram.svg");
    write_histogram_svg(out, s.h_hat_histogram, "CV bandwidth, model " + std::string(1, to_char(res.config.model)),
                        s.h_0_grid);
  }
  std::vector<std::pair<std::string, BoxStats>> groups;
  if (s.d_A_hat) groups.emplace_back("h_hat", *s.d_A_hat);
  if (s.d_A_h0) groups.emplace_back("h_0", *s.d_A_h0);
  if (s.d_A_star) groups.emplace_back("h_star", *s.d_A_star);
  auto out = detail::open_out(dir / "plots" / "d_A_boxplot.svg");
  write_boxplot_svg(out, groups, "d_A by bandwidth choice");
  if (!out) throw IoError("cannot write plots under " + dir.string());
}

}  // namespace lscv
