#ifndef FPCAV_ENGINE_HPP
#define FPCAV_ENGINE_HPP

#include <string>

#include "fpcav/filters.hpp"
#include "fpcav/model.hpp"
#include "fpcav/pulses.hpp"
#include "fpcav/transform.hpp"

namespace fpcav {

/// Incident, reflected and transmitted envelopes on one shared grid.
template <typename Scalar = double>
struct PropagationResult {
  SampledField<Scalar> incident;
  SampledField<Scalar> reflected;
  SampledField<Scalar> transmitted;
};

/// Grid requirements checked by `propagate`.
template <typename Scalar = double>
struct PropagationOptions {
  bool allow_coarse_grid = false;   // skip dt <= 1/(5 nu_fsr)
  bool allow_short_window = false;  // skip window >= min_window_lifetimes / Gamma
  bool check_guard_band = true;
  Scalar min_window_lifetimes = 500;
  Scalar guard_lifetimes = 20;
  Scalar guard_tolerance = Scalar(1e-8);
};

namespace detail {

template <typename Scalar>
Scalar edge_energy(const ComplexVector<Scalar>& v, Index guard) {
  return v.head(guard).squaredNorm() + v.tail(guard).squaredNorm();
}

template <typename Scalar>
void check_guard(const CavityParams<Scalar>& params, const TimeGrid<Scalar>& grid,
                 const PropagationOptions<Scalar>& options, const ComplexVector<Scalar>& field, Scalar total,
                 const char* what) {
  if (!options.check_guard_band || params.gamma() == 0 || total == 0) return;
  using std::ceil;
  const Index guard = Index(ceil(options.guard_lifetimes / (params.gamma() * grid.dt())));
  if (2 * guard >= grid.size())
    throw WindowTooShort("window of " + std::to_string(grid.size()) + " samples cannot hold two " +
                         std::to_string(double(options.guard_lifetimes)) + "/Gamma guard bands");
  const Scalar residual = edge_energy(field, guard);
  if (residual > options.guard_tolerance * total)
    throw WindowTooShort(std::string(what) + " energy in the guard bands is " +
                         std::to_string(double(residual / total)) + " of the incident energy");
}

template <typename Scalar>
void check_grid(const CavityParams<Scalar>& params, const TimeGrid<Scalar>& grid,
                const PropagationOptions<Scalar>& options) {
  if (!options.allow_coarse_grid && grid.dt() * 5 * params.nu_fsr() > 1 + Scalar(1e-12))
    throw GridTooCoarse("sampling step " + std::to_string(double(grid.dt())) + " s exceeds 1/(5 nu_fsr)");
  if (!options.allow_short_window) {
    if (params.gamma() == 0) throw WindowTooShort("lossless cavity: no window is long enough");
    if (grid.duration() * params.gamma() < options.min_window_lifetimes * (1 - Scalar(1e-12)))
      throw WindowTooShort("window covers " + std::to_string(double(grid.duration() * params.gamma())) +
                           " lifetimes, need " + std::to_string(double(options.min_window_lifetimes)));
  }
}

}  // namespace detail

/// Reflected and transmitted fields as inverse DFTs of the incident spectrum
/// times C_R and C_T. The discrete product is a circular convolution; the
/// guard-band check rejects windows in which wraparound would be visible.
template <typename Scalar>
PropagationResult<Scalar> propagate(const CavityParams<Scalar>& params, SampledField<Scalar> incident,
                                    const PropagationOptions<Scalar>& options = {},
                                    FilterCache<Scalar>* cache = nullptr) {
  const TimeGrid<Scalar> grid = incident.grid();
  detail::check_grid(params, grid, options);
  const Scalar total = incident.values().squaredNorm();
  detail::check_guard(params, grid, options, incident.values(), total, "incident");

  const Index n = grid.size();
  const ComplexVector<Scalar> spectrum = dft(incident.values());
  std::shared_ptr<const FilterResponse<Scalar>> filters;
  if (cache) filters = cache->get(params, grid);

  ComplexVector<Scalar> work(n);
  if (filters)
    work = spectrum.cwiseProduct(filters->reflection);
  else
    for (Index k = 0; k < n; ++k) work[k] = spectrum[k] * reflection_at_phase(params, round_trip_phase(params, grid, k).full);
  SampledField<Scalar> reflected(grid, idft(work));

  ComplexVector<Scalar> transmitted_values;
  if (params.t2() == 0) {
    transmitted_values = ComplexVector<Scalar>::Zero(n);
  } else {
    if (filters)
      work = spectrum.cwiseProduct(filters->transmission);
    else
      for (Index k = 0; k < n; ++k) {
        const auto phase = round_trip_phase(params, grid, k);
        work[k] = spectrum[k] * transmission_at_phase(params, phase.full, phase.half);
      }
    transmitted_values = idft(work);
  }
  SampledField<Scalar> transmitted(grid, std::move(transmitted_values));

  detail::check_guard(params, grid, options, reflected.values(), total, "reflected");
  detail::check_guard(params, grid, options, transmitted.values(), total, "transmitted");
  return {std::move(incident), std::move(reflected), std::move(transmitted)};
}

/// Causal delay-line model of the two mirrors:
///   A(t)   = t1 U_I(t) + r1 r2 A(t - tau)
///   U_R(t) = -r1 U_I(t) + t1 r2 A(t - tau)
///   U_T(t) = t2 A(t - tau/2)
/// with A the forward wave just inside M1. Needs tau to be an even number of samples.
template <typename Scalar>
PropagationResult<Scalar> roundtrip_oracle(const CavityParams<Scalar>& params, const SampledField<Scalar>& incident) {
  const auto& grid = incident.grid();
  const Scalar ratio = params.round_trip() / grid.dt();
  const Scalar rounded = std::round(double(ratio));
  using std::abs;
  if (rounded < 2 || abs(ratio - rounded) > Scalar(1e-9) * rounded || std::int64_t(rounded) % 2 != 0)
    throw GridMismatch("round trip is " + std::to_string(double(ratio)) + " samples; need an even integer");
  const Index delay = Index(rounded);
  const Index half = delay / 2;
  const Index n = grid.size();
  const auto& u = incident.values();

  // Circulating forward wave: a delay line exactly one round trip long.
  ComplexVector<Scalar> circulating = ComplexVector<Scalar>::Zero(n);
  ComplexVector<Scalar> reflected(n), transmitted(n);
  const Scalar feedback = params.r1() * params.r2();
  for (Index k = 0; k < n; ++k) {
    const std::complex<Scalar> returning = k >= delay ? circulating[k - delay] : std::complex<Scalar>(0);
    circulating[k] = params.t1() * u[k] + feedback * returning;
    reflected[k] = -params.r1() * u[k] + params.t1() * params.r2() * returning;
    transmitted[k] = k >= half ? params.t2() * circulating[k - half] : std::complex<Scalar>(0);
  }
  return {incident, SampledField<Scalar>(grid, std::move(reflected)), SampledField<Scalar>(grid, std::move(transmitted))};
}

/// epsilon(t): left-point cumulative integral of |U_I|^2 - |U_R|^2 - |U_T|^2,
/// normalized to the total incident energy.
template <typename Scalar>
EnergyTrace<Scalar> energy_trace(const PropagationResult<Scalar>& result, Scalar area = Scalar(1)) {
  const auto& grid = result.incident.grid();
  const auto& in = result.incident.values();
  const auto& re = result.reflected.values();
  const auto& tr = result.transmitted.values();
  const Scalar dt = grid.dt();
  const Scalar incident_energy = area * in.squaredNorm() * dt;
  if (!(incident_energy > 0)) throw ZeroIncidentEnergy("incident field carries no energy");

  const Index n = grid.size();
  RealVector<Scalar> epsilon(n);
  // Neumaier-compensated running sum, fixed order.
  Scalar sum = 0, carry = 0;
  Scalar best = -std::numeric_limits<Scalar>::infinity();
  Index best_index = 0;
  for (Index k = 0; k < n; ++k) {
    const Scalar value = (sum + carry) * area * dt / incident_energy;
    epsilon[k] = value;
    if (value > best) {
      best = value;
      best_index = k;
    }
    const Scalar term = std::norm(in[k]) - std::norm(re[k]) - std::norm(tr[k]);
    const Scalar t = sum + term;
    using std::abs;
    carry += abs(sum) >= abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return {grid, std::move(epsilon), best, best_index};
}

/// Energy carried by a field, area * sum |U|^2 dt.
template <typename Scalar>
Scalar field_energy(const SampledField<Scalar>& field, Scalar area = Scalar(1)) {
  return pulse_energy(field, area);
}

/// Envelope leaking out through M1 from a cavity holding `stored_energy`
/// (J, with the cavity area) at t = 0 and receiving no further input. The
/// cavity is charged with the matched pulse and the t >= 0 reflection is kept.
template <typename Scalar>
SampledField<Scalar> free_decay(const CavityParams<Scalar>& params, Scalar stored_energy, const TimeGrid<Scalar>& grid,
                                const PropagationOptions<Scalar>& options = {}) {
  if (params.gamma() == 0) throw DegenerateCavity("lossless cavity never decays");
  if (stored_energy < 0) throw RangeError("stored energy must be non-negative");
  if (stored_energy == 0) return SampledField<Scalar>::zeros(grid);
  const auto pulse = sample_pulse(PulseSpec<Scalar>::truncated_exponential(1, params.gamma()), grid);
  const auto result = propagate(params, pulse, options);
  const auto trace = energy_trace(result, params.area());
  const Index zero = grid.first_nonnegative();
  const Scalar charged = trace.epsilon[zero] * pulse_energy(pulse, params.area());
  if (!(charged > 0)) throw DegenerateCavity("matched pulse failed to charge the cavity");
  using std::sqrt;
  const Scalar scale = sqrt(stored_energy / charged);
  ComplexVector<Scalar> out = ComplexVector<Scalar>::Zero(grid.size());
  out.tail(grid.size() - zero) = scale * result.reflected.values().tail(grid.size() - zero);
  return SampledField<Scalar>(grid, std::move(out));
}

/// ||a - b|| / ||b||, or ||a - b|| when b vanishes.
template <typename DerivedA, typename DerivedB>
typename DerivedA::RealScalar relative_rms(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  const auto reference = b.norm();
  const auto diff = (a - b).norm();
  return reference > 0 ? diff / reference : diff;
}

}  // namespace fpcav

#endif  // FPCAV_ENGINE_HPP
