#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lscv/estimator.hpp"
#include "lscv/info.hpp"
#include "lscv/kernel.hpp"
#include "lscv/model.hpp"
#include "lscv/parallel.hpp"
#include "lscv/processes.hpp"
#include "lscv/selection.hpp"
#include "lscv/stats.hpp"

namespace lscv {

enum class StudyMode { WellSpecified, MisspecifiedToTvAR };

inline std::string to_string(StudyMode m) {
  return m == StudyMode::WellSpecified ? "well-specified" : "misspecified";
}

inline StudyMode parse_study_mode(const std::string& s) {
  if (s == "well-specified") return StudyMode::WellSpecified;
  if (s == "misspecified") return StudyMode::MisspecifiedToTvAR;
  throw ConfigError("mode: expected 'well-specified' or 'misspecified', got '" + s + "'");
}

struct ExperimentConfig {
  ModelId model = ModelId::A;
  std::size_t n = 500;
  std::size_t reps = 200;
  BandwidthGrid grid = BandwidthGrid::log_spaced(0.01, 1.0, 40);
  std::uint64_t base_seed = 1;
  Innovation innovation = Innovation::Gaussian;
  StudyMode mode = StudyMode::WellSpecified;
  double weight_a = 0.05;
  double weight_b = 0.95;
  unsigned workers = 1;
  /// Path length for Monte Carlo information matrices.
  std::size_t info_mc = InfoMatrices::kDefaultMcLength;

  void validate() const {
    if (n < 2) throw ConfigError("n: series length must be at least 2");
    if (reps < 1) throw ConfigError("reps: need at least one replication");
    if (workers < 1) throw ConfigError("workers: need at least one worker");
    make_weight(weight_a, weight_b);
    if (mode == StudyMode::MisspecifiedToTvAR && model != ModelId::B && model != ModelId::C) {
      throw ConfigError("mode: misspecified runs are defined for models b and c only");
    }
  }
};

struct ReplicationResult {
  std::size_t rep_index = 0;
  StreamSeed seed;
  bool ok = false;
  std::string error;
  double h_hat = 0.0;
  double h_star = 0.0;
  /// Grid point nearest to h0; absent without a plug-in bandwidth.
  std::optional<double> h_0;
  double d_A_hat = 0.0;
  double d_A_star = 0.0;
  std::optional<double> d_A_h0;
  /// d_A at every grid point.
  std::vector<double> d_A_values;
  std::vector<double> cv_values;
  std::size_t poisoned_h = 0;
  std::size_t loo_failures = 0;
  std::size_t fit_failures = 0;
};

/// Everything shared by the replications of one study: the data-generating
/// model, the fitted model, the target curve and its information matrices.
class StudyContext {
 public:
  explicit StudyContext(const ExperimentConfig& cfg)
      : cfg_(validated(cfg)),
        source_spec_(preset_spec(cfg.model, cfg.innovation)),
        source_curve_(preset_curve(cfg.model)),
        fit_spec_(misspecified() ? ModelSpec::tvar(1, cfg.innovation) : source_spec_),
        target_(misspecified() ? misspecified_target(source_spec_, source_curve_) : source_curve_),
        kernel_(epanechnikov()),
        weight_(make_weight(cfg.weight_a, cfg.weight_b)),
        objective_(make_objective(fit_spec_)),
        info_(fit_spec_, cfg.info_mc) {
    truth_ = make_truth(target_, info_, weight_, cfg_.n, cfg_.workers);
    if (!misspecified() && cfg_.model != ModelId::D) {
      try {
        plugin_ = plugin_h0(target_, kernel_, weight_, cfg_.n, info_, cfg_.workers);
        h0_index_ = cfg_.grid.nearest(plugin_->h0);
      } catch (const NumericalError&) {
        plugin_.reset();
      }
    }
  }

  const ExperimentConfig& config() const { return cfg_; }
  const ModelSpec& source_spec() const { return source_spec_; }
  const ModelSpec& fit_spec() const { return fit_spec_; }
  const ParamCurve& source_curve() const { return source_curve_; }
  const ParamCurve& target() const { return target_; }
  const Kernel& kernel() const { return kernel_; }
  const WeightFn& weight() const { return weight_; }
  const AnyObjective& objective() const { return objective_; }
  const InfoMatrices& info() const { return info_; }
  const TruthTable& truth() const { return truth_; }
  const std::optional<PluginResult>& plugin() const { return plugin_; }
  std::optional<std::size_t> h0_index() const { return h0_index_; }
  bool misspecified() const { return cfg_.mode == StudyMode::MisspecifiedToTvAR; }

  ReplicationResult run(std::size_t rep) const {
    ReplicationResult r;
    r.rep_index = rep;
    r.seed = SeedPolicy{cfg_.base_seed}.derive(rep);
    try {
      const SimulatedSeries series = simulate(source_spec_, source_curve_, cfg_.n, r.seed);
      SelectionReport sel =
          select_bandwidth(objective_, series.values, kernel_, weight_, cfg_.grid, fit_spec_.theta_box);
      attach_oracle(sel, truth_);
      r.h_hat = sel.h_hat;
      r.h_star = *sel.h_star;
      r.d_A_hat = sel.d_A_values[sel.h_hat_index];
      r.d_A_star = sel.d_A_values[*sel.h_star_index];
      if (h0_index_) {
        r.h_0 = cfg_.grid[*h0_index_];
        r.d_A_h0 = sel.d_A_values[*h0_index_];
      }
      r.d_A_values = sel.d_A_values;
      r.cv_values = sel.cv_values;
      for (std::size_t i = 0; i < sel.grid.size(); ++i) {
        r.poisoned_h += sel.poisoned[i] ? 1 : 0;
        r.loo_failures += sel.loo_failures[i];
        r.fit_failures += sel.fits[i].failures();
      }
      r.ok = true;
    } catch (const NumericalError& e) {
      r.error = e.what();
    }
    return r;
  }

 private:
  static const ExperimentConfig& validated(const ExperimentConfig& cfg) {
    cfg.validate();
    return cfg;
  }

  ExperimentConfig cfg_;
  ModelSpec source_spec_;
  ParamCurve source_curve_;
  ModelSpec fit_spec_;
  ParamCurve target_;
  Kernel kernel_;
  WeightFn weight_;
  AnyObjective objective_;
  InfoMatrices info_;
  TruthTable truth_;
  std::optional<PluginResult> plugin_;
  std::optional<std::size_t> h0_index_;
};

/// Simulate, select h_hat by CV, and compare d_A at h_hat, h0 and h_star.
inline ReplicationResult run_replication(const ExperimentConfig& cfg, std::size_t rep) {
  return StudyContext(cfg).run(rep);
}

inline constexpr std::size_t kHistogramBins = 20;

struct StudySummary {
  std::size_t replications = 0;
  std::size_t successes = 0;
  std::size_t failures = 0;
  std::optional<PluginResult> plugin;
  std::optional<double> h_0_grid;
  Histogram h_hat_histogram;
  std::optional<BoxStats> h_hat_stats;
  std::optional<BoxStats> d_A_hat;
  std::optional<BoxStats> d_A_star;
  std::optional<BoxStats> d_A_h0;
  /// Median over successes of d_A(h_hat) / d_A(h_star).
  std::optional<double> median_ratio_hat_star;
};

struct StudyResult {
  ExperimentConfig config;
  std::vector<ReplicationResult> replications;
  StudySummary summary;
};

/// Aggregates in replication order over successful replications only.
inline StudySummary summarize(const StudyContext& ctx, const std::vector<ReplicationResult>& reps) {
  StudySummary s;
  s.replications = reps.size();
  s.plugin = ctx.plugin();
  if (ctx.h0_index()) s.h_0_grid = ctx.config().grid[*ctx.h0_index()];
  std::vector<double> hh, da_hat, da_star, da_h0, ratio;
  for (const auto& r : reps) {
    if (!r.ok) {
      ++s.failures;
      continue;
    }
    ++s.successes;
    hh.push_back(r.h_hat);
    da_hat.push_back(r.d_A_hat);
    da_star.push_back(r.d_A_star);
    if (r.d_A_h0) da_h0.push_back(*r.d_A_h0);
    ratio.push_back(r.d_A_star > 0.0 ? r.d_A_hat / r.d_A_star : 1.0);
  }
  const auto& grid = ctx.config().grid;
  const double lo = grid.h_min();
  const double hi = grid.h_max() > lo ? grid.h_max() : lo + 1.0;
  s.h_hat_histogram = histogram(hh, lo, hi, kHistogramBins);
  if (!hh.empty()) {
    s.h_hat_stats = box_stats(hh);
    s.d_A_hat = box_stats(da_hat);
    s.d_A_star = box_stats(da_star);
    s.median_ratio_hat_star = median(ratio);
  }
  if (!da_h0.empty()) s.d_A_h0 = box_stats(da_h0);
  return s;
}

/// Runs all replications (concurrently across workers) and aggregates them.
inline StudyResult run_study(const ExperimentConfig& cfg) {
  cfg.validate();
  const StudyContext ctx(cfg);
  StudyResult out;
  out.config = cfg;
  out.replications.resize(cfg.reps);
  parallel_for(cfg.reps, cfg.workers, [&](std::size_t i) { out.replications[i] = ctx.run(i); });
  out.summary = summarize(ctx, out.replications);
  return out;
}

/// The same pipeline with non-Gaussian innovations.
inline StudyResult run_robustness(const ExperimentConfig& cfg) {
  if (cfg.innovation == Innovation::Gaussian) throw ConfigError("innovation: robustness runs need a non-Gaussian law");
  return run_study(cfg);
}

}  // namespace lscv
