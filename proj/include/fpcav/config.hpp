#ifndef FPCAV_CONFIG_HPP
#define FPCAV_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fpcav/experiments.hpp"

namespace fpcav {

struct CavityConfig {
  double nu_fsr_hz = 1e10;
  double r1 = 0.9999;
  double r2 = 1.0;
  double area_m2 = 1.0;

  bool operator==(const CavityConfig&) const = default;
};

struct PulseConfig {
  std::string family = "truncated_rising_exponential";
  double p0 = 1.0;
  // At most one of the rate fields; neither means the rate matched to the cavity.
  std::optional<double> gamma_hz;
  std::optional<double> tau_p_s;
  // At most one of the length fields; neither means untruncated.
  std::optional<double> length_s;
  std::optional<double> length_lifetimes;
  std::vector<double> segments;

  bool operator==(const PulseConfig&) const = default;
};

struct GridConfig {
  std::optional<double> dt_s;
  double window_lifetimes = 500;
  double lead_fraction = 0.6;
  bool allow_coarse_grid = false;

  bool operator==(const GridConfig&) const = default;
};

struct OutputConfig {
  std::string dir = ".";
  std::int64_t max_rows = 100000;  // time-series CSV is decimated beyond this

  bool operator==(const OutputConfig&) const = default;
};

/// Axes in units of the cavity lifetime 1/Gamma unless named otherwise.
struct SweepConfig {
  std::vector<double> rectangular_length_lifetimes = logspace(0.1, 100, 50);
  std::vector<double> loss_fractions = linspace(0, 0.5, 50);
  std::optional<double> reference_r1;  // defaults to cavity.r1
  std::vector<double> truncation_lifetimes = linspace(0.2, 10, 50);
  std::vector<double> time_constant_lifetimes = logspace(0.25, 4, 25);
  std::vector<double> back_mirror_r1 = {0.97, 0.98, 0.99, 0.999};
  std::vector<double> back_mirror_r2 = linspace(1.0, 0.99, 50);
  bool allow_double_ended = false;

  bool operator==(const SweepConfig&) const = default;
};

struct OptimizerConfig {
  std::string family = "rising_exponential_rate";
  std::vector<double> tau_lifetimes = {0.25, 4};
  std::vector<double> length_lifetimes = {1, 10};
  std::int64_t segments = 8;
  double support_lifetimes = 6;
  std::vector<double> amplitude_bounds = {0, 1};
  std::int64_t max_evaluations = 20000;
  double x_tolerance = 1e-4;
  std::int64_t seed_grid = 8;

  bool operator==(const OptimizerConfig&) const = default;
};

struct RunConfig {
  CavityConfig cavity;
  PulseConfig pulse;
  GridConfig grid;
  OutputConfig output;
  SweepConfig sweep;
  OptimizerConfig optimizer;

  bool operator==(const RunConfig&) const = default;
};

/// Strict parse: unknown keys and out-of-range values are collected and
/// reported together in one SchemaError; malformed JSON raises ParseError
/// with line and column.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Fully resolved config, ranges expanded; parse_config(to_json(c).dump()) == c.
nlohmann::json to_json(const RunConfig& config);

/// JSON Schema (draft 2020-12) describing the accepted document.
nlohmann::json config_schema();

CavityParams<double> make_cavity(const RunConfig& config);
PulseSpec<double> make_pulse(const RunConfig& config, const CavityParams<double>& cavity);
SweepOptions make_sweep_options(const RunConfig& config, unsigned threads);
TimeGrid<double> make_run_grid(const RunConfig& config, const CavityParams<double>& cavity,
                               const PulseSpec<double>& pulse);

}  // namespace fpcav

#endif  // FPCAV_CONFIG_HPP
