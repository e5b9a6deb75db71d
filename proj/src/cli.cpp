#include "fpcav/cli.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <CLI11.hpp>

#include "fpcav/io.hpp"

namespace fpcav {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::map<std::string, int>& sweep_figures() {
  static const std::map<std::string, int> figures{
      {"rectangular_length", 4}, {"output_coupling", 5}, {"truncation", 6}, {"time_constant", 7}, {"back_mirror", 8}};
  return figures;
}

std::vector<double> scaled(const std::vector<double>& lifetimes, double gamma) {
  if (gamma == 0) throw DegenerateCavity("axes in lifetimes need a cavity with nonzero decay rate");
  std::vector<double> out;
  out.reserve(lifetimes.size());
  for (double v : lifetimes) out.push_back(v / gamma);
  return out;
}

json document(const std::string& command, const RunConfig& config) {
  return {{"tool", kToolName}, {"version", kToolVersion}, {"command", command}, {"config", to_json(config)}};
}

SweepResult execute_sweep(const std::string& name, const RunConfig& config, unsigned threads) {
  const auto options = make_sweep_options(config, threads);
  const auto& s = config.sweep;
  if (name == "output_coupling")
    return sweep_output_coupling(config.cavity.nu_fsr_hz, s.loss_fractions, s.reference_r1.value_or(config.cavity.r1),
                                 options);
  if (name == "back_mirror") return sweep_back_mirror(s.back_mirror_r1, s.back_mirror_r2, config.cavity.nu_fsr_hz, options);
  const auto cavity = make_cavity(config);
  if (name == "rectangular_length")
    return sweep_rectangular_length(cavity, scaled(s.rectangular_length_lifetimes, cavity.gamma()), options);
  if (name == "truncation") return sweep_truncation(cavity, scaled(s.truncation_lifetimes, cavity.gamma()), options);
  if (name == "time_constant")
    return sweep_time_constant(cavity, scaled(s.time_constant_lifetimes, cavity.gamma()), options);
  throw RangeError("unknown sweep '" + name + "'");
}

int write_sweep(const std::string& stem, const std::string& command, const RunConfig& config, unsigned threads,
                const std::string& sweep, std::ostream& out) {
  const auto result = execute_sweep(sweep, config, threads);
  const fs::path dir = config.output.dir;
  fs::create_directories(dir);
  write_sweep_csv(dir / (stem + ".csv"), result);

  json summary = json::array();
  for (const auto& series : result.series) {
    const auto best = std::max_element(series.epsilon_max.begin(), series.epsilon_max.end());
    if (best == series.epsilon_max.end()) continue;
    const auto i = std::size_t(best - series.epsilon_max.begin());
    summary.push_back({{"series", series.name}, {"epsilon_max_peak", *best}, {"at_" + result.x_name, result.x_values[i]}});
    out << stem << ' ' << series.name << ": peak epsilon_max=" << format_double(*best) << " at " << result.x_name << '='
        << format_double(result.x_values[i]) << '\n';
  }
  auto meta = document(command, config);
  meta["summary"] = summary;
  meta["provenance"] = sweep_metadata(result);
  write_json(dir / (stem + ".meta.json"), meta);
  return kExitOk;
}

}  // namespace

int run_simulate(const RunConfig& config, std::ostream& out) {
  const auto cavity = make_cavity(config);
  const auto pulse = make_pulse(config, cavity);
  const auto grid = make_run_grid(config, cavity, pulse);
  const auto options = make_sweep_options(config, 1);
  const auto result = propagate(cavity, sample_pulse(pulse, grid), options.propagation);
  const auto trace = energy_trace(result, cavity.area());

  const fs::path dir = config.output.dir;
  fs::create_directories(dir);
  const Index rows = std::max<Index>(1, config.output.max_rows);
  const Index stride = (grid.size() + rows - 1) / rows;
  write_time_series_csv(dir / "simulate.csv", result, trace, stride);

  const double incident = field_energy(result.incident, cavity.area());
  const double reflected = field_energy(result.reflected, cavity.area());
  const double transmitted = field_energy(result.transmitted, cavity.area());
  auto meta = document("simulate", config);
  meta["summary"] = {{"epsilon_max", trace.epsilon_max},
                     {"t_max_s", trace.t_max()},
                     {"incident_energy_j", incident},
                     {"reflected_fraction", reflected / incident},
                     {"transmitted_fraction", transmitted / incident},
                     {"csv_stride", stride}};
  meta["provenance"] = to_json(Provenance{cavity, pulse, grid});
  write_json(dir / "simulate.meta.json", meta);

  out << "epsilon_max=" << format_double(trace.epsilon_max) << " t_max_s=" << format_double(trace.t_max()) << '\n';
  return kExitOk;
}

int run_sweep(const std::string& name, const RunConfig& config, unsigned threads, std::ostream& out) {
  if (!sweep_figures().count(name)) throw RangeError("unknown sweep '" + name + "'");
  return write_sweep(name, "sweep " + name, config, threads, name, out);
}

int run_figure(int figure, const RunConfig& config, unsigned threads, std::ostream& out, std::ostream& err) {
  for (const auto& [name, id] : sweep_figures())
    if (id == figure) return write_sweep("fig" + std::to_string(figure), "figure " + std::to_string(figure), config,
                                         threads, name, out);
  err << "unknown figure " << figure << " (expected 4 to 8)\n";
  return kExitUsage;
}

int run_optimize(const RunConfig& config, std::ostream& out) {
  const auto cavity = make_cavity(config);
  const double gamma = cavity.gamma();
  if (gamma == 0) throw DegenerateCavity("optimizer bounds are in lifetimes; cavity has no decay rate");
  const auto& o = config.optimizer;
  const auto family = search_family_from_string(o.family);

  ParameterBox box;
  OptimizerOptions options;
  if (family == SearchFamily::RisingExponentialRate) {
    box.lower = {o.tau_lifetimes[0] / gamma, o.length_lifetimes[0] / gamma};
    box.upper = {o.tau_lifetimes[1] / gamma, o.length_lifetimes[1] / gamma};
  } else {
    box.lower.assign(std::size_t(o.segments), o.amplitude_bounds[0]);
    box.upper.assign(std::size_t(o.segments), o.amplitude_bounds[1]);
    options.support = o.support_lifetimes / gamma;
  }
  const auto sweep_options = make_sweep_options(config, 1);
  options.seed_grid = std::size_t(o.seed_grid);
  options.max_evaluations = std::size_t(o.max_evaluations);
  options.x_tolerance = o.x_tolerance;
  options.window_lifetimes = sweep_options.window_lifetimes;
  options.lead_fraction = sweep_options.lead_fraction;
  options.dt = sweep_options.dt;
  options.propagation = sweep_options.propagation;

  const auto report = optimize_pulse(cavity, family, box, options);
  const fs::path dir = config.output.dir;
  fs::create_directories(dir);
  write_optimization_csv(dir / "optimize.csv", report);
  auto meta = document("optimize", config);
  meta["summary"] = {{"family", to_string(report.family)},
                     {"best_epsilon_max", report.best_epsilon_max},
                     {"best_parameters", report.best_parameters},
                     {"evaluations", report.evaluations}};
  meta["provenance"] = to_json(Provenance{cavity, report.best_pulse, report.grid});
  write_json(dir / "optimize.meta.json", meta);

  out << "best epsilon_max=" << format_double(report.best_epsilon_max) << " after " << report.evaluations
      << " evaluations\n";
  return kExitOk;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fabry-Perot cavity pulse absorption simulator", "fpcav"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir;
  unsigned threads = 1;
  bool allow_coarse = false;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out", out_dir, "output directory (overrides output.dir)");
  app.add_option("--threads", threads, "worker threads for sweeps")->check(CLI::Range(1u, 1024u));
  app.add_flag("--allow-coarse-grid", allow_coarse, "permit dt > 1/(5 nu_fsr)");
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);

  auto* simulate = app.add_subcommand("simulate", "propagate one pulse and write the time series");
  auto* sweep = app.add_subcommand("sweep", "run one parameter sweep");
  std::string sweep_name;
  sweep->add_option("name", sweep_name, "rectangular_length, output_coupling, truncation, time_constant, back_mirror")
      ->required();
  auto* optimize = app.add_subcommand("optimize", "search for the pulse shape with the highest epsilon_max");
  auto* figure = app.add_subcommand("figure", "reproduce one figure sweep (4 to 8)");
  int figure_id = 0;
  figure->add_option("N", figure_id, "figure number")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolName << ' ' << kToolVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  RunConfig config;
  try {
    if (!config_path.empty()) config = load_config(config_path);
  } catch (const ParseError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SchemaError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (!out_dir.empty()) config.output.dir = out_dir;
  if (allow_coarse) config.grid.allow_coarse_grid = true;

  try {
    if (*simulate) return run_simulate(config, out);
    if (*sweep) {
      if (!sweep_figures().count(sweep_name)) {
        err << "unknown sweep '" << sweep_name << "'\n";
        return kExitUsage;
      }
      return run_sweep(sweep_name, config, threads, out);
    }
    if (*optimize) return run_optimize(config, out);
    if (*figure) return run_figure(figure_id, config, threads, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace fpcav
