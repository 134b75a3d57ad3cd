#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI/CLI.hpp>

#include "lscv/lscv.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string out;
  std::string model;
  std::size_t n = 0;
  std::size_t reps = 0;
  std::string grid;
  bool misspecified = false;
  std::string innovation;
  std::string input;
  double h = 0.0;
  bool plugin = false;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* model_opt = nullptr;
  CLI::Option* n_opt = nullptr;
  CLI::Option* reps_opt = nullptr;
  CLI::Option* grid_opt = nullptr;
  CLI::Option* innovation_opt = nullptr;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  f.seed_opt = cmd->add_option("--seed", f.seed, "Base seed");
  f.workers_opt = cmd->add_option("--workers", f.workers, "Worker threads")->check(CLI::PositiveNumber);
  f.out_opt = cmd->add_option("--out", f.out, "Output directory");
  f.model_opt = cmd->add_option("--model", f.model, "Preset model")->check(CLI::IsMember({"a", "b", "c", "d"}));
  f.n_opt = cmd->add_option("--n", f.n, "Series length");
  f.reps_opt = cmd->add_option("--reps", f.reps, "Monte Carlo replications");
  f.grid_opt = cmd->add_option("--grid", f.grid, "Bandwidth grid MIN:MAX:POINTS");
  cmd->add_flag("--misspecified", f.misspecified, "Fit tvAR(1) to tvMA(1) or tvARCH(1) data");
  f.innovation_opt = cmd->add_option("--innovation", f.innovation, "Innovation law")
                         ->check(CLI::IsMember({"gaussian", "uniform", "exponential", "pareto"}));
}

/// Config file first, then command-line overrides, then validation.
lscv::RunConfig resolve(const Flags& f) {
  lscv::RunConfig c = f.config.empty() ? lscv::RunConfig{} : lscv::load_run_config(f.config);
  if (f.model_opt->count()) {
    c.preset = lscv::parse_model_id(f.model);
    c.table.reset();
  }
  if (f.seed_opt->count()) c.seed = f.seed;
  if (f.workers_opt->count()) c.workers = f.workers;
  if (f.out_opt->count()) c.out = f.out;
  if (f.n_opt->count()) c.n = f.n;
  if (f.reps_opt->count()) c.reps = f.reps;
  if (f.grid_opt->count()) c.grid = lscv::parse_grid_spec(f.grid);
  if (f.misspecified) c.mode = lscv::StudyMode::MisspecifiedToTvAR;
  if (f.innovation_opt->count()) c.innovation = lscv::parse_innovation(f.innovation);
  c.validate();
  return c;
}

/// Model actually fitted and the curve its estimates are compared with.
struct FitTarget {
  lscv::ModelSpec spec;
  lscv::ParamCurve curve;
};

FitTarget fit_target(const lscv::RunConfig& c) {
  const lscv::ModelSpec source = c.spec();
  const lscv::ParamCurve curve = c.curve();
  if (c.mode == lscv::StudyMode::MisspecifiedToTvAR) {
    return {lscv::ModelSpec::tvar(1, c.innovation), lscv::misspecified_target(source, curve)};
  }
  return {source, curve};
}

/// Reads --input when given, otherwise simulates stream 0 of the base seed.
std::vector<double> load_or_simulate(const lscv::RunConfig& c, const Flags& f) {
  if (!f.input.empty()) return lscv::read_series_csv(f.input);
  const lscv::StreamSeed seed{c.seed, 0};
  std::cerr << "seed " << seed.seed << " stream " << seed.stream << '\n';
  return lscv::simulate(c.spec(), c.curve(), c.n, seed).values;
}

int cmd_simulate(const Flags& f) {
  const lscv::RunConfig c = resolve(f);
  const lscv::StreamSeed seed{c.seed, 0};
  const lscv::SimulatedSeries s = lscv::simulate(c.spec(), c.curve(), c.n, seed);
  const fs::path dir(c.out);
  lscv::write_series_csv(dir / "series.csv", s.values);
  lscv::write_series_cache(dir / "series.bin", s);
  std::cout << "seed " << seed.seed << " stream " << seed.stream << '\n'
            << "wrote " << (dir / "series.csv").string() << " (" << s.n() << " rows)\n";
  return 0;
}

int cmd_fit(const Flags& f) {
  if (!(f.h > 0.0 && f.h < 1.0)) throw lscv::ConfigError("h: bandwidth must lie in (0, 1)");
  const lscv::RunConfig c = resolve(f);
  const FitTarget target = fit_target(c);
  const std::vector<double> xs = load_or_simulate(c, f);
  lscv::EstimatorOptions opt;
  opt.workers = c.workers;
  const lscv::LocalFit fit = lscv::fit_curve(lscv::make_objective(target.spec), xs, lscv::epanechnikov(), f.h,
                                             lscv::make_weight(c.weight_a, c.weight_b), target.spec.theta_box, opt);
  const fs::path path = fs::path(c.out) / "fit.csv";
  auto out = lscv::detail::open_out(path);
  lscv::write_fit_csv(out, fit, target.spec.parameter_names());
  std::cout << "wrote " << path.string() << " (" << fit.size() << " points, " << fit.failures()
            << " not converged)\n";
  return 0;
}

int cmd_cv(const Flags& f) {
  const lscv::RunConfig c = resolve(f);
  const FitTarget target = fit_target(c);
  const lscv::Kernel kernel = lscv::epanechnikov();
  const lscv::WeightFn weight = lscv::make_weight(c.weight_a, c.weight_b);
  const lscv::BandwidthGrid grid = c.grid.make();
  const lscv::InfoMatrices info(target.spec);
  std::optional<lscv::PluginResult> plugin;
  if (f.plugin) {
    if (c.mode == lscv::StudyMode::MisspecifiedToTvAR) {
      throw lscv::ConfigError("plugin: no plug-in bandwidth for misspecified fits");
    }
    plugin = lscv::plugin_h0(target.curve, kernel, weight, c.n, info, c.workers);
  }
  const std::vector<double> xs = load_or_simulate(c, f);
  lscv::SelectionReport rep = lscv::select_bandwidth(lscv::make_objective(target.spec), xs, kernel, weight, grid,
                                                     target.spec.theta_box, {}, c.workers);
  if (f.input.empty()) lscv::attach_oracle(rep, lscv::make_truth(target.curve, info, weight, xs.size(), c.workers));
  if (plugin) {
    rep.h_0 = plugin->h0;
    rep.V0 = plugin->V0;
    rep.B0 = plugin->B0;
  }
  const fs::path dir(c.out);
  {
    auto out = lscv::detail::open_out(dir / "cv.csv");
    lscv::write_selection_csv(out, rep);
  }
  lscv::write_json(dir / "summary.json", lscv::selection_summary_json(rep));
  std::cout << "h_hat " << rep.h_hat << '\n';
  if (rep.h_star) std::cout << "h_star " << *rep.h_star << '\n';
  if (rep.h_0) std::cout << "h_0 " << *rep.h_0 << '\n';
  return 0;
}

int cmd_study(const Flags& f) {
  const lscv::RunConfig c = resolve(f);
  const lscv::ExperimentConfig e = c.experiment();
  const fs::path dir(c.out);
  if (lscv::study_outputs_present(dir)) {
    throw lscv::ConfigError("out: " + dir.string() + " already holds study results; resuming is not supported");
  }
  const lscv::StudyResult res = lscv::run_study(e);
  lscv::write_study(dir, res);
  std::cout << "replications " << res.summary.replications << " (" << res.summary.failures << " failed)\n";
  if (res.summary.h_hat_stats) std::cout << "median h_hat " << res.summary.h_hat_stats->q50 << '\n';
  if (res.summary.plugin) std::cout << "h_0 " << res.summary.plugin->h0 << '\n';
  std::cout << "wrote " << (dir / "replications.csv").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-validation bandwidth selection for locally stationary time series"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  Flags fs_sim, fs_fit, fs_cv, fs_study;

  auto* simulate = app.add_subcommand("simulate", "Simulate one series and write series.csv");
  add_common(simulate, fs_sim);

  auto* fit = app.add_subcommand("fit", "Local estimates at a fixed bandwidth, written to fit.csv");
  add_common(fit, fs_fit);
  fit->add_option("--input", fs_fit.input, "Series CSV")->check(CLI::ExistingFile);
  fit->add_option("--h", fs_fit.h, "Bandwidth in (0, 1)")->required();

  auto* cv = app.add_subcommand("cv", "Cross-validation over the grid, written to cv.csv and summary.json");
  add_common(cv, fs_cv);
  cv->add_option("--input", fs_cv.input, "Series CSV")->check(CLI::ExistingFile);
  cv->add_flag("--plugin", fs_cv.plugin, "Also report the plug-in bandwidth h0");

  auto* study = app.add_subcommand("study", "Monte Carlo study: replications.csv, summary.json, plots/");
  add_common(study, fs_study);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(fs_sim);
    if (*fit) return cmd_fit(fs_fit);
    if (*cv) return cmd_cv(fs_cv);
    return cmd_study(fs_study);
  } catch (const lscv::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const lscv::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}
