#ifndef FPCAV_PULSES_HPP
#define FPCAV_PULSES_HPP

#include "fpcav/model.hpp"
#include "fpcav/transform.hpp"

namespace fpcav {

/// Pointwise samples of the pulse envelope. The support is [-T, 0): the
/// sample at t = 0 already takes the post-jump value 0.
template <typename Scalar>
SampledField<Scalar> sample_pulse(const PulseSpec<Scalar>& spec, const TimeGrid<Scalar>& grid) {
  const Scalar length = spec.support_length();
  // Half a step of slack absorbs rounding in t_start = -m dt.
  if (-length < grid.t_start() - grid.dt() / 2)
    throw WindowOverflow("pulse support of " + std::to_string(double(length)) + " s starts before the grid (t_start = " +
                         std::to_string(double(grid.t_start())) + " s)");
  if (grid.t_end() < 0) throw WindowOverflow("grid ends before the pulse does");
  ComplexVector<Scalar> values =
      ComplexVector<Scalar>::NullaryExpr(grid.size(), [&](Index k) { return std::complex<Scalar>(spec.amplitude(grid.time(k))); });
  return SampledField<Scalar>(grid, std::move(values));
}

/// Closed-form spectrum p(f) = integral p(t) exp(-i 2 pi f t) dt.
/// Exists for the untruncated exponential families, p0 / (a - i delta), and
/// for rectangular pulses.
template <typename Scalar>
Spectrum<Scalar> analytic_spectrum(const PulseSpec<Scalar>& spec, const TimeGrid<Scalar>& grid) {
  constexpr Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  const Scalar p0 = spec.p0();
  switch (spec.family()) {
    case PulseFamily::TruncatedRisingExponential:
    case PulseFamily::RisingExponentialRate: {
      if (!spec.infinite()) throw NoClosedForm("truncated exponential pulse: no closed-form spectrum implemented");
      const Scalar rate = spec.growth_rate();
      return Spectrum<Scalar>(grid, ComplexVector<Scalar>::NullaryExpr(grid.size(), [&](Index k) {
                                return p0 / std::complex<Scalar>(rate, -two_pi * grid.frequency(k));
                              }));
    }
    case PulseFamily::Rectangular: {
      const Scalar length = spec.truncation();
      return Spectrum<Scalar>(grid, ComplexVector<Scalar>::NullaryExpr(grid.size(), [&](Index k) {
                                // p0 T exp(i w T/2) sinc(w T/2)
                                const Scalar half = two_pi * grid.frequency(k) * length / 2;
                                using std::abs;
                                using std::cos;
                                using std::sin;
                                const Scalar sinc = abs(half) < Scalar(1e-8) ? Scalar(1) : sin(half) / half;
                                return p0 * length * sinc * std::complex<Scalar>(cos(half), sin(half));
                              }));
    }
    case PulseFamily::PiecewiseConstant: break;
  }
  throw NoClosedForm("no closed-form spectrum for family " + to_string(spec.family()));
}

/// area * sum |U|^2 dt.
template <typename Scalar>
Scalar pulse_energy(const SampledField<Scalar>& field, Scalar area = Scalar(1)) {
  return area * field.values().squaredNorm() * field.grid().dt();
}

}  // namespace fpcav

#endif  // FPCAV_PULSES_HPP
