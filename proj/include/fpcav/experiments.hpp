#ifndef FPCAV_EXPERIMENTS_HPP
#define FPCAV_EXPERIMENTS_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fpcav/engine.hpp"

namespace fpcav {

/// Everything that went into one sweep point.
struct Provenance {
  CavityParams<double> cavity;
  PulseSpec<double> pulse;
  TimeGrid<double> grid;
};

struct SweepSeries {
  std::string name;
  std::vector<double> epsilon_max;
  std::vector<Provenance> provenance;
};

/// epsilon_max against one swept parameter, one series per fixed configuration.
struct SweepResult {
  std::string sweep_name;
  std::string x_name;             // CSV column of the swept parameter, SI
  std::vector<double> x_values;
  std::string x_scaled_name;      // same axis in natural units (e.g. T * Gamma)
  std::vector<double> x_scaled;
  std::vector<SweepSeries> series;
};

struct SweepOptions {
  double window_lifetimes = 500;
  double lead_fraction = 0.6;
  std::optional<double> dt;  // defaults to 1/(5 nu_fsr)
  unsigned threads = 1;
  bool allow_double_ended = false;
  PropagationOptions<double> propagation{};
  std::size_t cache_bytes = std::size_t(1) << 31;
};

/// Grid for a pulse supported on [-support, 0): at least `window_lifetimes`
/// long and with a leading part that holds the pulse plus a guard band.
TimeGrid<double> grid_for_support(const CavityParams<double>& params, double support, const SweepOptions& options);

/// epsilon_max of one incident pulse.
double absorption_efficiency(const CavityParams<double>& params, const PulseSpec<double>& pulse,
                             const TimeGrid<double>& grid, const PropagationOptions<double>& options = {},
                             FilterCache<double>* cache = nullptr);

SweepResult sweep_rectangular_length(const CavityParams<double>& params, std::span<const double> lengths,
                                     const SweepOptions& options = {});

/// x = t2^2 / (t1^2 + t2^2) in [0, 0.5] with t1 fixed by `reference_r1`;
/// every point uses the pulse matched to its own Gamma.
SweepResult sweep_output_coupling(double nu_fsr, std::span<const double> loss_fractions,
                                  double reference_r1 = 0.9999, const SweepOptions& options = {});

SweepResult sweep_truncation(const CavityParams<double>& params, std::span<const double> lengths,
                             const SweepOptions& options = {});

SweepResult sweep_time_constant(const CavityParams<double>& params, std::span<const double> time_constants,
                                const SweepOptions& options = {});

/// One series per r1, swept over r2, matched pulse at every point.
SweepResult sweep_back_mirror(std::span<const double> r1_values, std::span<const double> r2_values, double nu_fsr,
                              const SweepOptions& options = {});

std::vector<double> linspace(double lo, double hi, std::size_t count);
std::vector<double> logspace(double lo, double hi, std::size_t count);

// ---------------------------------------------------------------------------
// Pulse-shape optimization

enum class SearchFamily {
  RisingExponentialRate,  // free (tau_p, T)
  PiecewiseConstant,      // free segment amplitudes on a fixed support
};

std::string to_string(SearchFamily family);
SearchFamily search_family_from_string(const std::string& name);

/// Axis-aligned box; one [lower, upper] pair per free parameter.
struct ParameterBox {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t size() const { return lower.size(); }
};

struct OptimizerOptions {
  double support = 0;               // piecewise family: pulse length T in s (required)
  std::size_t seed_grid = 8;        // per-axis points of the brute-force seed (2-D families)
  std::size_t max_evaluations = 20000;
  double x_tolerance = 1e-4;        // step size, relative to each box width, at convergence
  double window_lifetimes = 500;
  double lead_fraction = 0.6;
  std::optional<double> dt;
  PropagationOptions<double> propagation{};
};

struct TracePoint {
  std::size_t evaluation;
  double epsilon_max;
  std::vector<double> parameters;
};

struct OptimizationReport {
  SearchFamily family;
  std::vector<double> best_parameters;
  double best_epsilon_max;
  std::size_t evaluations;
  std::vector<TracePoint> trace;  // every improvement, in order
  PulseSpec<double> best_pulse;
  TimeGrid<double> grid;
};

/// Pulse described by `parameters` for a family; the piecewise family spans `support`.
PulseSpec<double> pulse_from_parameters(SearchFamily family, std::span<const double> parameters, double support);

/// Derivative-free maximization of epsilon_max: brute-force seed, then
/// coordinate search with golden-section line searches on adaptive brackets.
/// Throws BudgetExhausted when max_evaluations runs out before convergence.
OptimizationReport optimize_pulse(const CavityParams<double>& params, SearchFamily family, const ParameterBox& bounds,
                                  const OptimizerOptions& options = {});

}  // namespace fpcav

#endif  // FPCAV_EXPERIMENTS_HPP
