#ifndef FPCAV_MODEL_HPP
#define FPCAV_MODEL_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "fpcav/errors.hpp"

namespace fpcav {

using Index = Eigen::Index;

template <typename Scalar>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar>
using RealVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Two-mirror resonator. Constructing one validates the mirrors and derives
/// the lossless transmissivities, the round-trip time and the amplitude
/// decay rate. Instances are immutable.
template <typename Scalar = double>
class CavityParams {
public:
  CavityParams(Scalar nu_fsr, Scalar r1, Scalar r2, Scalar area = Scalar(1))
      : nu_fsr_(nu_fsr), r1_(r1), r2_(r2), area_(area) {
    using std::isfinite;
    if (!(nu_fsr > 0) || !isfinite(nu_fsr))
      throw RangeError("nu_fsr must be a positive finite frequency, got " + std::to_string(double(nu_fsr)));
    if (!(r1 > 0 && r1 <= 1))
      throw RangeError("r1 must lie in (0, 1], got " + std::to_string(double(r1)));
    if (!(r2 > 0 && r2 <= 1))
      throw RangeError("r2 must lie in (0, 1], got " + std::to_string(double(r2)));
    if (!(area > 0) || !isfinite(area))
      throw RangeError("area must be positive, got " + std::to_string(double(area)));
    using std::log;
    using std::sqrt;
    t1_ = sqrt((1 - r1) * (1 + r1));
    t2_ = sqrt((1 - r2) * (1 + r2));
    round_trip_ = 1 / nu_fsr;
    // Summed logs stay accurate as r1*r2 -> 1.
    gamma_ = -nu_fsr * (log(r1) + log(r2));
    if (gamma_ == 0) gamma_ = 0;  // normalize -0
  }

  Scalar nu_fsr() const { return nu_fsr_; }
  Scalar r1() const { return r1_; }
  Scalar r2() const { return r2_; }
  Scalar area() const { return area_; }
  Scalar t1() const { return t1_; }
  Scalar t2() const { return t2_; }
  Scalar round_trip() const { return round_trip_; }
  Scalar gamma() const { return gamma_; }
  bool single_ended() const { return r2_ == 1; }

  bool operator==(const CavityParams&) const = default;

private:
  Scalar nu_fsr_, r1_, r2_, area_;
  Scalar t1_ = 0, t2_ = 0, round_trip_ = 0, gamma_ = 0;
};

/// Named factory; throws RangeError on out-of-range mirrors or frequency.
template <typename Scalar = double>
CavityParams<Scalar> validate_cavity(Scalar nu_fsr, Scalar r1, Scalar r2, Scalar area = Scalar(1)) {
  return CavityParams<Scalar>(nu_fsr, r1, r2, area);
}

/// Uniform sampling lattice t_k = t_start + k*dt, k = 0..n-1. The implied DFT
/// bins are ordinary-frequency detunings f_k (Hz) in numpy `fftfreq` order.
template <typename Scalar = double>
class TimeGrid {
public:
  TimeGrid(Scalar t_start, Scalar dt, Index n) : t_start_(t_start), dt_(dt), n_(n) {
    if (!(dt > 0) || !std::isfinite(double(dt))) throw RangeError("grid step must be positive");
    if (n < 2) throw RangeError("grid needs at least two samples");
    if (!std::isfinite(double(t_start))) throw RangeError("grid start must be finite");
  }

  Scalar t_start() const { return t_start_; }
  Scalar dt() const { return dt_; }
  Index size() const { return n_; }
  Scalar duration() const { return Scalar(n_) * dt_; }
  Scalar time(Index k) const { return t_start_ + Scalar(k) * dt_; }
  Scalar t_end() const { return time(n_ - 1); }

  /// Index of the first sample with t >= 0 (clamped to the grid).
  Index first_nonnegative() const {
    using std::ceil;
    const Scalar k = ceil(-t_start_ / dt_);
    if (k <= 0) return 0;
    if (k >= Scalar(n_)) return n_;
    Index idx = Index(k);
    while (idx > 0 && time(idx - 1) >= 0) --idx;
    while (idx < n_ && time(idx) < 0) ++idx;
    return idx;
  }

  Scalar bin_width() const { return 1 / (Scalar(n_) * dt_); }

  /// Signed ordinary-frequency detuning of DFT bin k, in Hz.
  Scalar frequency(Index k) const {
    const Index signed_k = k < (n_ + 1) / 2 ? k : k - n_;
    return Scalar(signed_k) / (Scalar(n_) * dt_);
  }

  /// Angular detuning 2*pi*f of bin k, in rad/s.
  Scalar angular_frequency(Index k) const { return 2 * std::numbers::pi_v<Scalar> * frequency(k); }

  RealVector<Scalar> times() const {
    return RealVector<Scalar>::NullaryExpr(n_, [this](Index k) { return time(k); });
  }
  RealVector<Scalar> frequencies() const {
    return RealVector<Scalar>::NullaryExpr(n_, [this](Index k) { return frequency(k); });
  }

  bool operator==(const TimeGrid&) const = default;

private:
  Scalar t_start_;
  Scalar dt_;
  Index n_;
};

/// Smallest integer >= n whose prime factors are all in {2, 3, 5, 7}.
inline std::int64_t next_efficient_size(std::int64_t n) {
  if (n < 1) return 1;
  for (std::int64_t m = n;; ++m) {
    std::int64_t r = m;
    for (std::int64_t p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

/// Grid with step dt covering at least `window_lifetimes` decay times 1/Gamma.
/// A fraction `lead_fraction` of the window precedes t = 0, which always
/// falls exactly on a sample.
template <typename Scalar>
TimeGrid<Scalar> make_grid(const CavityParams<Scalar>& params, Scalar dt, Scalar window_lifetimes,
                           Scalar lead_fraction = Scalar(0.6)) {
  if (params.gamma() == 0) throw DegenerateCavity("lossless cavity (r1 = r2 = 1) has no decay time scale");
  if (!(window_lifetimes > 0)) throw RangeError("window_lifetimes must be positive");
  if (!(lead_fraction > 0 && lead_fraction < 1)) throw RangeError("lead_fraction must lie in (0, 1)");
  using std::ceil;
  const Scalar samples = ceil(window_lifetimes / (params.gamma() * dt));
  if (!(samples < Scalar(std::numeric_limits<std::int32_t>::max())))
    throw RangeError("requested window needs too many samples");
  const std::int64_t n = next_efficient_size(std::max<std::int64_t>(2, std::int64_t(samples)));
  const std::int64_t lead = std::llround(double(lead_fraction) * double(n));
  return TimeGrid<Scalar>(-Scalar(lead) * dt, dt, Index(n));
}

/// Sampling step 1/(5 nu_fsr) and a window of `window_lifetimes` / Gamma.
template <typename Scalar>
TimeGrid<Scalar> default_grid(const CavityParams<Scalar>& params, Scalar window_lifetimes = Scalar(500),
                              Scalar lead_fraction = Scalar(0.6)) {
  return make_grid(params, 1 / (5 * params.nu_fsr()), window_lifetimes, lead_fraction);
}

/// Complex baseband envelope U(t) on a grid; intensity is |U|^2.
template <typename Scalar = double>
class SampledField {
public:
  SampledField(TimeGrid<Scalar> grid, ComplexVector<Scalar> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw RangeError("field length does not match its grid");
    if (!values_.allFinite()) throw RangeError("field contains non-finite samples");
  }

  static SampledField zeros(const TimeGrid<Scalar>& grid) {
    return SampledField(grid, ComplexVector<Scalar>::Zero(grid.size()));
  }

  const TimeGrid<Scalar>& grid() const { return grid_; }
  const ComplexVector<Scalar>& values() const { return values_; }
  Index size() const { return values_.size(); }

  RealVector<Scalar> intensity() const { return values_.cwiseAbs2(); }

private:
  TimeGrid<Scalar> grid_;
  ComplexVector<Scalar> values_;
};

/// Continuous Fourier transform U(f) = integral U(t) exp(-i 2 pi f t) dt sampled
/// on the DFT bins of a grid, bins stored in `TimeGrid::frequency` order.
template <typename Scalar = double>
class Spectrum {
public:
  Spectrum(TimeGrid<Scalar> grid, ComplexVector<Scalar> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw RangeError("spectrum length does not match its grid");
  }

  const TimeGrid<Scalar>& grid() const { return grid_; }
  const ComplexVector<Scalar>& values() const { return values_; }

  /// Signed detuning (Hz) of bin k.
  Scalar frequency(Index k) const { return grid_.frequency(k); }

private:
  TimeGrid<Scalar> grid_;
  ComplexVector<Scalar> values_;
};

enum class PulseFamily {
  TruncatedRisingExponential,  // p0 exp(Gamma t) on [-T, 0)
  Rectangular,                 // p0 on [-T, 0)
  RisingExponentialRate,       // p0 exp(t / tau_p) on [-T, 0)
  PiecewiseConstant,           // equal-width segments spanning [-T, 0)
};

std::string to_string(PulseFamily family);
PulseFamily pulse_family_from_string(const std::string& name);

/// Incident pulse description. Use the named constructors.
template <typename Scalar = double>
class PulseSpec {
public:
  /// Sentinel truncation: the exponential is cut where it falls below kTailCut * p0.
  static constexpr Scalar kInfinite = std::numeric_limits<Scalar>::infinity();
  static constexpr Scalar kTailCut = Scalar(1e-9);

  static PulseSpec truncated_exponential(Scalar p0, Scalar gamma, Scalar length = kInfinite) {
    return PulseSpec(PulseFamily::TruncatedRisingExponential, p0, gamma, length, {});
  }
  static PulseSpec rectangular(Scalar p0, Scalar length) {
    return PulseSpec(PulseFamily::Rectangular, p0, length, length, {});
  }
  static PulseSpec exponential_rate(Scalar p0, Scalar tau_p, Scalar length = kInfinite) {
    return PulseSpec(PulseFamily::RisingExponentialRate, p0, tau_p, length, {});
  }
  static PulseSpec piecewise_constant(std::vector<Scalar> amplitudes, Scalar length) {
    Scalar peak = 0;
    for (Scalar a : amplitudes) peak = std::max(peak, std::abs(a));
    return PulseSpec(PulseFamily::PiecewiseConstant, peak, length, length, std::move(amplitudes));
  }

  PulseFamily family() const { return family_; }
  Scalar p0() const { return p0_; }
  /// Gamma (1/s), T (s) or tau_p (s) depending on the family.
  Scalar rate_or_tau() const { return rate_or_tau_; }
  Scalar truncation() const { return truncation_; }
  const std::vector<Scalar>& segments() const { return segments_; }
  bool infinite() const { return std::isinf(double(truncation_)); }

  /// Growth rate of the exponential families, 1/s.
  Scalar growth_rate() const {
    switch (family_) {
      case PulseFamily::TruncatedRisingExponential: return rate_or_tau_;
      case PulseFamily::RisingExponentialRate: return 1 / rate_or_tau_;
      default: return 0;
    }
  }

  /// Length of the support [-L, 0) actually sampled.
  Scalar support_length() const {
    if (!infinite()) return truncation_;
    using std::log;
    return -log(kTailCut) / growth_rate();
  }

  /// Envelope value at time t (baseband).
  Scalar amplitude(Scalar t) const {
    const Scalar length = support_length();
    if (!(t < 0) || t < -length) return 0;
    using std::exp;
    switch (family_) {
      case PulseFamily::TruncatedRisingExponential:
      case PulseFamily::RisingExponentialRate: return p0_ * exp(growth_rate() * t);
      case PulseFamily::Rectangular: return p0_;
      case PulseFamily::PiecewiseConstant: {
        const auto count = Index(segments_.size());
        Index seg = Index(std::floor(double((t + length) / length * Scalar(count))));
        seg = std::clamp<Index>(seg, 0, count - 1);
        return segments_[std::size_t(seg)];
      }
    }
    return 0;
  }

  bool operator==(const PulseSpec&) const = default;

private:
  PulseSpec(PulseFamily family, Scalar p0, Scalar rate_or_tau, Scalar truncation, std::vector<Scalar> segments)
      : family_(family), p0_(p0), rate_or_tau_(rate_or_tau), truncation_(truncation), segments_(std::move(segments)) {
    if (family_ == PulseFamily::PiecewiseConstant) {
      if (segments_.empty() || segments_.size() > 64) throw RangeError("piecewise pulse needs 1..64 segments");
      if (!(p0_ > 0)) throw RangeError("piecewise pulse needs a nonzero segment");
      if (!(truncation_ > 0) || std::isinf(double(truncation_)))
        throw RangeError("piecewise pulse needs a finite positive length");
      return;
    }
    if (!(p0_ > 0)) throw RangeError("pulse amplitude p0 must be positive");
    if (!(rate_or_tau_ > 0) || std::isinf(double(rate_or_tau_)))
      throw RangeError("pulse time parameter must be positive and finite");
    if (!(truncation_ > 0)) throw RangeError("pulse length must be positive");
    if (family_ == PulseFamily::Rectangular && std::isinf(double(truncation_)))
      throw RangeError("rectangular pulse needs a finite length");
  }

  PulseFamily family_;
  Scalar p0_;
  Scalar rate_or_tau_;
  Scalar truncation_;
  std::vector<Scalar> segments_;
};

/// Stored-energy fraction epsilon(t) = E(t) / E_P on a grid.
template <typename Scalar = double>
struct EnergyTrace {
  TimeGrid<Scalar> grid;
  RealVector<Scalar> epsilon;
  Scalar epsilon_max;
  Index t_max_index;

  Scalar t_max() const { return grid.time(t_max_index); }
};

inline std::string to_string(PulseFamily family) {
  switch (family) {
    case PulseFamily::TruncatedRisingExponential: return "truncated_rising_exponential";
    case PulseFamily::Rectangular: return "rectangular";
    case PulseFamily::RisingExponentialRate: return "rising_exponential_rate";
    case PulseFamily::PiecewiseConstant: return "piecewise_constant";
  }
  return "unknown";
}

inline PulseFamily pulse_family_from_string(const std::string& name) {
  for (auto f : {PulseFamily::TruncatedRisingExponential, PulseFamily::Rectangular,
                 PulseFamily::RisingExponentialRate, PulseFamily::PiecewiseConstant})
    if (to_string(f) == name) return f;
  throw RangeError("unknown pulse family '" + name + "'");
}

}  // namespace fpcav

#endif  // FPCAV_MODEL_HPP
