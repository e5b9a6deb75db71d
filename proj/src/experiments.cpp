#include "fpcav/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <thread>

namespace fpcav {

namespace {

// Runs fn(i) for i in [0, count) on up to `threads` workers. Results land by
// index, so output order never depends on scheduling.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  const unsigned workers = std::min<unsigned>(threads, unsigned(count));
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double step_for(const CavityParams<double>& params, const std::optional<double>& dt) {
  return dt ? *dt : 1.0 / (5.0 * params.nu_fsr());
}

void require_single_ended(const CavityParams<double>& params, const SweepOptions& options, const char* sweep) {
  if (!options.allow_double_ended && !params.single_ended())
    throw NotSingleEnded(std::string(sweep) + " sweep expects r2 = 1 (set allow_double_ended to override)");
}

PulseSpec<double> matched_pulse(const CavityParams<double>& params) {
  return PulseSpec<double>::truncated_exponential(1.0, params.gamma());
}

}  // namespace

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < count; ++i) out[i] = lo + (hi - lo) * double(i) / double(count - 1);
  out.back() = hi;
  return out;
}

std::vector<double> logspace(double lo, double hi, std::size_t count) {
  if (!(lo > 0 && hi > 0)) throw RangeError("logspace bounds must be positive");
  auto exponents = linspace(std::log(lo), std::log(hi), count);
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = std::exp(exponents[i]);
  if (count > 0) {
    out.front() = lo;
    out.back() = hi;
  }
  return out;
}

TimeGrid<double> grid_for_support(const CavityParams<double>& params, double support, const SweepOptions& options) {
  const double gamma = params.gamma();
  if (gamma == 0) throw DegenerateCavity("lossless cavity has no decay time scale");
  const double guard = options.propagation.guard_lifetimes + 5.0;
  const double lifetimes = std::max(options.window_lifetimes, (support * gamma + guard) / options.lead_fraction);
  return make_grid(params, step_for(params, options.dt), lifetimes, options.lead_fraction);
}

double absorption_efficiency(const CavityParams<double>& params, const PulseSpec<double>& pulse,
                             const TimeGrid<double>& grid, const PropagationOptions<double>& options,
                             FilterCache<double>* cache) {
  auto result = propagate(params, sample_pulse(pulse, grid), options, cache);
  return energy_trace(result, params.area()).epsilon_max;
}

SweepResult sweep_rectangular_length(const CavityParams<double>& params, std::span<const double> lengths,
                                     const SweepOptions& options) {
  require_single_ended(params, options, "rectangular_length");
  SweepResult out{"rectangular_length", "T_s", {lengths.begin(), lengths.end()}, "T_gamma", {}, {}};
  SweepSeries series{"epsilon_max", std::vector<double>(lengths.size()), {}};
  std::vector<std::optional<Provenance>> provenance(lengths.size());
  FilterCache<double> cache(options.cache_bytes);
  parallel_for(lengths.size(), options.threads, [&](std::size_t i) {
    const auto pulse = PulseSpec<double>::rectangular(1.0, lengths[i]);
    const auto grid = grid_for_support(params, lengths[i], options);
    series.epsilon_max[i] = absorption_efficiency(params, pulse, grid, options.propagation, &cache);
    provenance[i] = Provenance{params, pulse, grid};
  });
  for (double t : lengths) out.x_scaled.push_back(t * params.gamma());
  for (auto& p : provenance) series.provenance.push_back(*p);
  out.series.push_back(std::move(series));
  return out;
}

SweepResult sweep_output_coupling(double nu_fsr, std::span<const double> loss_fractions, double reference_r1,
                                  const SweepOptions& options) {
  const auto reference = validate_cavity(nu_fsr, reference_r1, 1.0);
  const double t1_sq = reference.t1() * reference.t1();
  for (double x : loss_fractions)
    if (!(x >= 0 && x <= 0.5)) throw RangeError("loss fraction must lie in [0, 0.5], got " + std::to_string(x));
  SweepResult out{"output_coupling", "loss_fraction", {loss_fractions.begin(), loss_fractions.end()},
                  "loss_fraction", {loss_fractions.begin(), loss_fractions.end()}, {}};
  SweepSeries series{"epsilon_max", std::vector<double>(loss_fractions.size()), {}};
  std::vector<std::optional<Provenance>> provenance(loss_fractions.size());
  parallel_for(loss_fractions.size(), options.threads, [&](std::size_t i) {
    const double x = loss_fractions[i];
    const double t2_sq = x == 0.5 ? t1_sq : t1_sq * x / (1 - x);
    const double r2 = x == 0.5 ? reference_r1 : std::sqrt(1 - t2_sq);
    const auto params = validate_cavity(nu_fsr, reference_r1, r2);
    const auto pulse = matched_pulse(params);
    const auto grid = grid_for_support(params, pulse.support_length(), options);
    series.epsilon_max[i] = absorption_efficiency(params, pulse, grid, options.propagation);
    provenance[i] = Provenance{params, pulse, grid};
  });
  for (auto& p : provenance) series.provenance.push_back(*p);
  out.series.push_back(std::move(series));
  return out;
}

SweepResult sweep_truncation(const CavityParams<double>& params, std::span<const double> lengths,
                             const SweepOptions& options) {
  require_single_ended(params, options, "truncation");
  SweepResult out{"truncation", "T_s", {lengths.begin(), lengths.end()}, "T_gamma", {}, {}};
  SweepSeries series{"epsilon_max", std::vector<double>(lengths.size()), {}};
  std::vector<std::optional<Provenance>> provenance(lengths.size());
  const double longest = lengths.empty() ? 0.0 : *std::max_element(lengths.begin(), lengths.end());
  const auto grid = grid_for_support(params, longest, options);
  FilterCache<double> cache(options.cache_bytes);
  parallel_for(lengths.size(), options.threads, [&](std::size_t i) {
    const auto pulse = PulseSpec<double>::truncated_exponential(1.0, params.gamma(), lengths[i]);
    series.epsilon_max[i] = absorption_efficiency(params, pulse, grid, options.propagation, &cache);
    provenance[i] = Provenance{params, pulse, grid};
  });
  for (double t : lengths) out.x_scaled.push_back(t * params.gamma());
  for (auto& p : provenance) series.provenance.push_back(*p);
  out.series.push_back(std::move(series));
  return out;
}

SweepResult sweep_time_constant(const CavityParams<double>& params, std::span<const double> time_constants,
                                const SweepOptions& options) {
  require_single_ended(params, options, "time_constant");
  SweepResult out{"time_constant", "tau_p_s", {time_constants.begin(), time_constants.end()}, "tau_p_gamma", {}, {}};
  SweepSeries series{"epsilon_max", std::vector<double>(time_constants.size()), {}};
  std::vector<std::optional<Provenance>> provenance(time_constants.size());
  double longest = 0;
  for (double tau : time_constants) longest = std::max(longest, PulseSpec<double>::exponential_rate(1.0, tau).support_length());
  const auto grid = grid_for_support(params, longest, options);
  FilterCache<double> cache(options.cache_bytes);
  parallel_for(time_constants.size(), options.threads, [&](std::size_t i) {
    const auto pulse = PulseSpec<double>::exponential_rate(1.0, time_constants[i]);
    series.epsilon_max[i] = absorption_efficiency(params, pulse, grid, options.propagation, &cache);
    provenance[i] = Provenance{params, pulse, grid};
  });
  for (double tau : time_constants) out.x_scaled.push_back(tau * params.gamma());
  for (auto& p : provenance) series.provenance.push_back(*p);
  out.series.push_back(std::move(series));
  return out;
}

SweepResult sweep_back_mirror(std::span<const double> r1_values, std::span<const double> r2_values, double nu_fsr,
                              const SweepOptions& options) {
  SweepResult out{"back_mirror", "r2", {r2_values.begin(), r2_values.end()}, "one_minus_r2", {}, {}};
  for (double r2 : r2_values) out.x_scaled.push_back(1 - r2);
  const std::size_t points = r1_values.size() * r2_values.size();
  std::vector<double> values(points);
  std::vector<std::optional<Provenance>> provenance(points);
  parallel_for(points, options.threads, [&](std::size_t flat) {
    const std::size_t s = flat / r2_values.size();
    const std::size_t i = flat % r2_values.size();
    const auto params = validate_cavity(nu_fsr, r1_values[s], r2_values[i]);
    const auto pulse = matched_pulse(params);
    const auto grid = grid_for_support(params, pulse.support_length(), options);
    values[flat] = absorption_efficiency(params, pulse, grid, options.propagation);
    provenance[flat] = Provenance{params, pulse, grid};
  });
  for (std::size_t s = 0; s < r1_values.size(); ++s) {
    char name[64];
    std::snprintf(name, sizeof name, "epsilon_max_r1_%g", r1_values[s]);
    SweepSeries series{name, {}, {}};
    for (std::size_t i = 0; i < r2_values.size(); ++i) {
      series.epsilon_max.push_back(values[s * r2_values.size() + i]);
      series.provenance.push_back(*provenance[s * r2_values.size() + i]);
    }
    out.series.push_back(std::move(series));
  }
  return out;
}

}  // namespace fpcav
