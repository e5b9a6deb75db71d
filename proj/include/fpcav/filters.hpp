#ifndef FPCAV_FILTERS_HPP
#define FPCAV_FILTERS_HPP

#include <atomic>
#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <shared_mutex>
#include <tuple>

#include "fpcav/model.hpp"
#include "fpcav/transform.hpp"

namespace fpcav {

/// Round-trip phase theta = 2 pi f tau of a detuning, and its half.
template <typename Scalar>
struct RoundTripPhase {
  Scalar full;
  Scalar half;
};

template <typename Scalar>
RoundTripPhase<Scalar> round_trip_phase(const CavityParams<Scalar>& params, Scalar frequency) {
  using std::remainder;
  constexpr Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  const Scalar cycles = frequency * params.round_trip();
  return {remainder(two_pi * cycles, two_pi), remainder(std::numbers::pi_v<Scalar> * cycles, two_pi)};
}

/// Round-trip phase of DFT bin k. When tau is an integer number of samples the
/// phase is reduced in integer arithmetic, so bins one free spectral range
/// apart get bit-identical phases.
template <typename Scalar>
RoundTripPhase<Scalar> round_trip_phase(const CavityParams<Scalar>& params, const TimeGrid<Scalar>& grid, Index k) {
  const Scalar delay = params.round_trip() / grid.dt();
  const Scalar rounded = std::round(double(delay));
  using std::abs;
  if (abs(delay - rounded) <= Scalar(1e-9) * rounded && rounded >= 1) {
    const auto d = std::int64_t(rounded);
    const std::int64_t n = grid.size();
    const std::int64_t ks = detail::signed_bin(grid, k);
    auto reduce = [](std::int64_t m, std::int64_t period) {
      m %= period;
      if (m < 0) m += period;
      if (2 * m > period) m -= period;
      return 2 * std::numbers::pi_v<Scalar> * Scalar(m) / Scalar(period);
    };
    return {reduce(ks * d, n), reduce(ks * d, 2 * n)};
  }
  return round_trip_phase(params, grid.frequency(k));
}

namespace detail {

// 1 - exp(-i theta) without cancellation near theta = 0.
template <typename Scalar>
std::complex<Scalar> one_minus_phasor(Scalar theta) {
  using std::sin;
  const Scalar s = sin(theta / 2);
  return {2 * s * s, sin(theta)};
}

// 1 - r1 r2 exp(-i theta), written so that it stays accurate near resonance.
template <typename Scalar>
std::complex<Scalar> resonance_denominator(const CavityParams<Scalar>& p, Scalar theta) {
  const Scalar loss = (1 - p.r1()) + p.r1() * (1 - p.r2());
  return loss + p.r1() * p.r2() * one_minus_phasor(theta);
}

}  // namespace detail

/// Exact reflection C_R = (-r1 + r2 e^{-i theta}) / (1 - r1 r2 e^{-i theta}).
template <typename Scalar>
std::complex<Scalar> reflection_at_phase(const CavityParams<Scalar>& p, Scalar theta) {
  const std::complex<Scalar> numerator = (p.r2() - p.r1()) - p.r2() * detail::one_minus_phasor(theta);
  return numerator / detail::resonance_denominator(p, theta);
}

/// Exact transmission C_T = t1 t2 e^{-i theta/2} / (1 - r1 r2 e^{-i theta}).
template <typename Scalar>
std::complex<Scalar> transmission_at_phase(const CavityParams<Scalar>& p, Scalar theta, Scalar half_theta) {
  using std::cos;
  using std::sin;
  const std::complex<Scalar> half_trip(cos(half_theta), -sin(half_theta));
  return p.t1() * p.t2() * half_trip / detail::resonance_denominator(p, theta);
}

template <typename Scalar>
std::complex<Scalar> reflection_at(const CavityParams<Scalar>& p, Scalar frequency) {
  return reflection_at_phase(p, round_trip_phase(p, frequency).full);
}

template <typename Scalar>
std::complex<Scalar> transmission_at(const CavityParams<Scalar>& p, Scalar frequency) {
  const auto phase = round_trip_phase(p, frequency);
  return transmission_at_phase(p, phase.full, phase.half);
}

namespace detail {

template <typename Scalar>
void require_single_ended(const CavityParams<Scalar>& p) {
  if (!p.single_ended()) throw NotSingleEnded("high-finesse approximation needs r2 = 1");
  if (p.gamma() == 0) throw DegenerateCavity("high-finesse approximation needs Gamma > 0");
}

}  // namespace detail

/// Single-ended high-finesse reflection (Gamma - i delta) / (Gamma + i delta),
/// delta = 2 pi f the angular detuning.
template <typename Scalar>
std::complex<Scalar> highfinesse_reflection_at(const CavityParams<Scalar>& p, Scalar frequency) {
  detail::require_single_ended(p);
  const std::complex<Scalar> z(p.gamma(), 2 * std::numbers::pi_v<Scalar> * frequency);
  return std::conj(z) / z;
}

/// Un-unwrapped phase approximation arctan[-2(1-r1)x / ((1-r1)^2 - x^2)] + pi,
/// x = theta the round-trip phase of the detuning.
template <typename Scalar>
Scalar reflection_phase_approx_at(const CavityParams<Scalar>& p, Scalar frequency) {
  const Scalar x = 2 * std::numbers::pi_v<Scalar> * frequency * p.round_trip();
  const Scalar a = 1 - p.r1();
  using std::atan;
  return atan(-2 * a * x / (a * a - x * x)) + std::numbers::pi_v<Scalar>;
}

template <typename Scalar>
ComplexVector<Scalar> reflection_response(const CavityParams<Scalar>& p, const TimeGrid<Scalar>& grid) {
  return ComplexVector<Scalar>::NullaryExpr(
      grid.size(), [&](Index k) { return reflection_at_phase(p, round_trip_phase(p, grid, k).full); });
}

template <typename Scalar>
ComplexVector<Scalar> transmission_response(const CavityParams<Scalar>& p, const TimeGrid<Scalar>& grid) {
  return ComplexVector<Scalar>::NullaryExpr(grid.size(), [&](Index k) {
    const auto phase = round_trip_phase(p, grid, k);
    return transmission_at_phase(p, phase.full, phase.half);
  });
}

template <typename Scalar>
ComplexVector<Scalar> highfinesse_reflection(const CavityParams<Scalar>& p, const TimeGrid<Scalar>& grid) {
  detail::require_single_ended(p);
  return ComplexVector<Scalar>::NullaryExpr(grid.size(),
                                            [&](Index k) { return highfinesse_reflection_at(p, grid.frequency(k)); });
}

/// Make a per-bin phase continuous along increasing detuning, anchored at
/// bin 0 (zero detuning). `period` is the branch ambiguity of the input.
template <typename Scalar>
RealVector<Scalar> unwrap_along_detuning(const TimeGrid<Scalar>& grid, const RealVector<Scalar>& phase,
                                         Scalar period) {
  const Index n = grid.size();
  RealVector<Scalar> out = phase;
  auto step = [&](Index from, Index to) {
    using std::round;
    const Scalar jump = out[to] - out[from];
    out[to] -= period * round(jump / period);
  };
  const Index positive_end = (n + 1) / 2;
  for (Index k = 1; k < positive_end; ++k) step(k - 1, k);
  if (positive_end < n) {
    step(0, n - 1);
    for (Index k = n - 2; k >= positive_end; --k) step(k + 1, k);
  }
  return out;
}

/// Phase approximation with its arctan branch jumps removed.
template <typename Scalar>
RealVector<Scalar> reflection_phase_approx(const CavityParams<Scalar>& p, const TimeGrid<Scalar>& grid) {
  const RealVector<Scalar> raw = RealVector<Scalar>::NullaryExpr(
      grid.size(), [&](Index k) { return reflection_phase_approx_at(p, grid.frequency(k)); });
  return unwrap_along_detuning(grid, raw, std::numbers::pi_v<Scalar>);
}

/// Both exact filters on the bins of one grid.
template <typename Scalar = double>
struct FilterResponse {
  TimeGrid<Scalar> grid;
  ComplexVector<Scalar> reflection;
  ComplexVector<Scalar> transmission;

  std::size_t bytes() const {
    return std::size_t(reflection.size() + transmission.size()) * sizeof(std::complex<Scalar>);
  }
};

template <typename Scalar>
FilterResponse<Scalar> filter_response(const CavityParams<Scalar>& p, const TimeGrid<Scalar>& grid) {
  return {grid, reflection_response(p, grid), transmission_response(p, grid)};
}

/// Byte-bounded cache of filter responses keyed by mirrors and grid spacing.
/// Concurrent lookups share a reader lock; inserts evict oldest-first.
template <typename Scalar = double>
class FilterCache {
public:
  explicit FilterCache(std::size_t byte_budget = std::size_t(1) << 31) : budget_(byte_budget) {}

  std::shared_ptr<const FilterResponse<Scalar>> get(const CavityParams<Scalar>& p, const TimeGrid<Scalar>& grid) {
    const Key key{p.nu_fsr(), p.r1(), p.r2(), grid.dt(), grid.size()};
    {
      std::shared_lock lock(mutex_);
      if (auto it = entries_.find(key); it != entries_.end()) {
        ++hits_;
        return it->second;
      }
    }
    auto fresh = std::make_shared<const FilterResponse<Scalar>>(filter_response(p, grid));
    std::unique_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    ++misses_;
    if (fresh->bytes() > budget_) return fresh;
    while (used_ + fresh->bytes() > budget_ && !order_.empty()) {
      auto victim = entries_.find(order_.front());
      used_ -= victim->second->bytes();
      entries_.erase(victim);
      order_.pop_front();
    }
    entries_.emplace(key, fresh);
    order_.push_back(key);
    used_ += fresh->bytes();
    return fresh;
  }

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }
  std::size_t bytes_used() const {
    std::shared_lock lock(mutex_);
    return used_;
  }

private:
  using Key = std::tuple<Scalar, Scalar, Scalar, Scalar, Index>;

  std::size_t budget_;
  std::size_t used_ = 0;
  std::map<Key, std::shared_ptr<const FilterResponse<Scalar>>> entries_;
  std::deque<Key> order_;
  mutable std::shared_mutex mutex_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

}  // namespace fpcav

#endif  // FPCAV_FILTERS_HPP
