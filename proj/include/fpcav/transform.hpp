#ifndef FPCAV_TRANSFORM_HPP
#define FPCAV_TRANSFORM_HPP

#include <unsupported/Eigen/FFT>

#include <mutex>
#include <optional>

#include "fpcav/model.hpp"

namespace fpcav {

namespace detail {

// FFTW's planner is not reentrant and Eigen::FFT plans lazily inside fwd/inv.
inline std::mutex& fft_mutex() {
  static std::mutex m;
  return m;
}

/// exp(-i 2 pi m / n) for integer m, reduced exactly in integer arithmetic.
template <typename Scalar>
std::complex<Scalar> unit_phasor(std::int64_t m, std::int64_t n) {
  m %= n;
  if (m < 0) m += n;
  if (2 * m > n) m -= n;
  const Scalar angle = -2 * std::numbers::pi_v<Scalar> * Scalar(m) / Scalar(n);
  using std::cos;
  using std::sin;
  return {cos(angle), sin(angle)};
}

template <typename Scalar>
std::int64_t signed_bin(const TimeGrid<Scalar>& grid, Index k) {
  const Index n = grid.size();
  return std::int64_t(k < (n + 1) / 2 ? k : k - n);
}

/// Index of t_start on the sample lattice if t_start is an integer multiple of dt.
template <typename Scalar>
std::optional<std::int64_t> start_offset(const TimeGrid<Scalar>& grid) {
  const Scalar q = grid.t_start() / grid.dt();
  const Scalar r = std::round(double(q));
  using std::abs;
  if (abs(q - r) <= Scalar(1e-9) * std::max(Scalar(1), abs(q))) return std::int64_t(r);
  return std::nullopt;
}

}  // namespace detail

/// Unnormalized forward DFT, X_k = sum_n x_n exp(-i 2 pi k n / N).
template <typename Derived>
ComplexVector<typename Derived::RealScalar> dft(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::RealScalar;
  const Eigen::Ref<const ComplexVector<Scalar>> in(x);
  ComplexVector<Scalar> out(in.size());
  std::lock_guard lock(detail::fft_mutex());
  Eigen::FFT<Scalar> fft;
  fft.fwd(out.data(), in.data(), in.size());
  return out;
}

/// Inverse DFT including the 1/N factor.
template <typename Derived>
ComplexVector<typename Derived::RealScalar> idft(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::RealScalar;
  const Eigen::Ref<const ComplexVector<Scalar>> in(x);
  ComplexVector<Scalar> out(in.size());
  std::lock_guard lock(detail::fft_mutex());
  Eigen::FFT<Scalar> fft;
  fft.inv(out.data(), in.data(), in.size());
  return out;
}

/// Phase exp(-i 2 pi f_k t_start) that moves the DFT origin from sample 0 to t = 0.
template <typename Scalar>
std::complex<Scalar> origin_phasor(const TimeGrid<Scalar>& grid, Index k) {
  const std::int64_t ks = detail::signed_bin(grid, k);
  if (auto m = detail::start_offset(grid)) return detail::unit_phasor<Scalar>(ks * *m, grid.size());
  using std::cos;
  using std::remainder;
  using std::sin;
  const Scalar angle =
      remainder(-2 * std::numbers::pi_v<Scalar> * grid.frequency(k) * grid.t_start(), 2 * std::numbers::pi_v<Scalar>);
  return {cos(angle), sin(angle)};
}

/// Riemann-sum approximation of the continuous Fourier transform of a field.
template <typename Scalar>
Spectrum<Scalar> to_spectrum(const SampledField<Scalar>& field) {
  const auto& grid = field.grid();
  ComplexVector<Scalar> raw = dft(field.values());
  const Scalar dt = grid.dt();
  for (Index k = 0; k < raw.size(); ++k) raw[k] *= dt * origin_phasor(grid, k);
  return Spectrum<Scalar>(grid, std::move(raw));
}

/// Inverse of `to_spectrum`.
template <typename Scalar>
SampledField<Scalar> to_field(const Spectrum<Scalar>& spectrum) {
  const auto& grid = spectrum.grid();
  const Scalar inv_dt = 1 / grid.dt();
  const auto& v = spectrum.values();
  ComplexVector<Scalar> undone =
      ComplexVector<Scalar>::NullaryExpr(v.size(), [&](Index k) { return inv_dt * std::conj(origin_phasor(grid, k)) * v[k]; });
  return SampledField<Scalar>(grid, idft(undone));
}

/// Energy of a spectrum, area * sum |U(f)|^2 df.
template <typename Scalar>
Scalar spectral_energy(const Spectrum<Scalar>& spectrum, Scalar area = Scalar(1)) {
  return area * spectrum.values().squaredNorm() * spectrum.grid().bin_width();
}

}  // namespace fpcav

#endif  // FPCAV_TRANSFORM_HPP
