#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fpcav/engine.hpp"

using namespace fpcav;

namespace {

constexpr double kPi = std::numbers::pi;

// Grid with tau = `per_trip` samples holding `lifetimes` decay times; pulse
// support plus guard bands fit in the leading 60%.
TimeGrid<double> trip_grid(const CavityParams<double>& p, int per_trip, double lifetimes = 500) {
  return make_grid(p, p.round_trip() / per_trip, lifetimes, 0.6);
}

double rms_where(const ComplexVector<double>& v, const TimeGrid<double>& g, bool negative_times) {
  double sum = 0;
  Index count = 0;
  for (Index k = 0; k < g.size(); ++k)
    if ((g.time(k) < 0) == negative_times) {
      sum += std::norm(v[k]);
      ++count;
    }
  return std::sqrt(sum / double(count));
}

// Least-squares slope of log|U|^2 over [t0, t1].
double fitted_decay_rate(const SampledField<double>& field, double t0, double t1) {
  const auto& g = field.grid();
  std::vector<Index> rows;
  for (Index k = 0; k < g.size(); ++k)
    if (g.time(k) >= t0 && g.time(k) <= t1) rows.push_back(k);
  Eigen::MatrixXd a(Index(rows.size()), 2);
  Eigen::VectorXd b(Index(rows.size()));
  for (Index i = 0; i < Index(rows.size()); ++i) {
    a(i, 0) = 1;
    a(i, 1) = g.time(rows[std::size_t(i)]);
    b[i] = std::log(std::norm(field.values()[rows[std::size_t(i)]]));
  }
  const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(b);
  return -coef[1] / 2;
}

PulseSpec<double> random_pulse(std::mt19937_64& rng, double gamma) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (int(u(rng) * 4)) {
    case 0: return PulseSpec<double>::truncated_exponential(0.5 + u(rng), gamma * (0.3 + 2 * u(rng)));
    case 1: return PulseSpec<double>::rectangular(0.5 + u(rng), (0.2 + 10 * u(rng)) / gamma);
    case 2: return PulseSpec<double>::exponential_rate(1.0, (0.3 + 3 * u(rng)) / gamma, (1 + 5 * u(rng)) / gamma);
    default: {
      std::vector<double> segments(1 + std::size_t(u(rng) * 12));
      for (auto& s : segments) s = 2 * u(rng) - 1;
      segments[0] = 1.0;
      return PulseSpec<double>::piecewise_constant(segments, (0.5 + 5 * u(rng)) / gamma);
    }
  }
}

}  // namespace

TEST_CASE("matched pulse is absorbed without reflection before t = 0") {
  for (double r1 : {0.95, 0.99, 0.999}) {
    const auto p = validate_cavity(1e10, r1, 1.0);
    const auto grid = default_grid(p);
    const double p0 = 1.0;
    const auto result = propagate(p, sample_pulse(PulseSpec<double>::truncated_exponential(p0, p.gamma()), grid));
    CHECK(rms_where(result.reflected.values(), grid, true) <= 1e-3 * p0);
    CHECK(result.reflected.values().head(grid.first_nonnegative()).cwiseAbs().maxCoeff() <= 1e-8 * p0);

    // After t = 0 the cavity releases p0 exp(-Gamma t), up to a per-round-trip
    // staircase of relative size 1 - r1.
    const Index zero = grid.first_nonnegative();
    const Index span = Index(10 / (p.gamma() * grid.dt()));
    ComplexVector<double> expected(span);
    for (Index j = 0; j < span; ++j) expected[j] = p0 * std::exp(-p.gamma() * grid.time(zero + j));
    CHECK(relative_rms(result.reflected.values().segment(zero, span), expected) <= 2 * (1 - r1));

    const auto trace = energy_trace(result);
    CHECK(trace.epsilon_max == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(trace.t_max() == doctest::Approx(0.0).epsilon(2 * grid.dt()));
    for (Index k = 1; k < zero; ++k) REQUIRE(trace.epsilon[k] >= trace.epsilon[k - 1] - 1e-15);
  }
}

TEST_CASE("zero input gives zero output") {
  const auto p = validate_cavity(1.0, 0.9, 0.95);
  const auto grid = trip_grid(p, 10);
  const auto zero = SampledField<double>::zeros(grid);
  const auto r = propagate(p, zero);
  CHECK(r.reflected.values().cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.transmitted.values().cwiseAbs().maxCoeff() == 0.0);
  const auto o = roundtrip_oracle(p, zero);
  CHECK(o.reflected.values().cwiseAbs().maxCoeff() == 0.0);
  CHECK(o.transmitted.values().cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(energy_trace(r), ZeroIncidentEnergy);
}

TEST_CASE("symmetric cavity transmits a long resonant pulse") {
  const auto p = validate_cavity(1.0, 0.9, 0.9);
  const double T = 200 / p.gamma();
  const auto grid = make_grid(p, p.round_trip() / 10, std::max(500.0, (T * p.gamma() + 50) / 0.6), 0.6);
  const auto r = propagate(p, sample_pulse(PulseSpec<double>::rectangular(1.0, T), grid));
  // Well after turn-on and before turn-off.
  const Index late = grid.first_nonnegative() - Index(10 / (p.gamma() * grid.dt()));
  CHECK(std::abs(std::abs(r.transmitted.values()[late]) - 1) <= 1e-6);
  CHECK(std::abs(r.reflected.values()[late]) <= 1e-6);
  const double fraction = field_energy(r.transmitted) / field_energy(r.incident);
  CHECK(fraction >= 0.99);
}

TEST_CASE("round-trip oracle impulse response") {
  const double r1 = 0.8;
  const auto p = validate_cavity(1.0, r1, 1.0);
  const TimeGrid<double> grid(0.0, 0.1, 200);
  ComplexVector<double> impulse = ComplexVector<double>::Zero(200);
  impulse[3] = 1.0;
  const auto r = roundtrip_oracle(p, SampledField<double>(grid, impulse));
  const double t1sq = 1 - r1 * r1;
  const auto& v = r.reflected.values();
  CHECK(v[3].real() == doctest::Approx(-r1));
  CHECK(v[13].real() == doctest::Approx(t1sq));
  CHECK(v[23].real() == doctest::Approx(t1sq * r1));
  CHECK(v[33].real() == doctest::Approx(t1sq * r1 * r1));
  for (Index k = 0; k < 200; ++k)
    if ((k - 3) % 10 != 0) CHECK(v[k] == std::complex<double>(0));
  CHECK(r.transmitted.values().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("round-trip oracle needs an even number of samples per trip") {
  const auto p = validate_cavity(1.0, 0.9, 0.95);
  const auto odd = SampledField<double>::zeros(TimeGrid<double>(0.0, 0.2, 100));
  CHECK_THROWS_AS(roundtrip_oracle(p, odd), GridMismatch);
  const auto fractional = SampledField<double>::zeros(TimeGrid<double>(0.0, 0.13, 100));
  CHECK_THROWS_AS(roundtrip_oracle(p, fractional), GridMismatch);
}

TEST_CASE("spectral propagation agrees with the round-trip oracle") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> refl(0.9, 0.995);
  for (int i = 0; i < 12; ++i) {
    const auto p = validate_cavity(1.0, refl(rng), i % 3 == 0 ? 1.0 : refl(rng));
    const auto pulse = random_pulse(rng, p.gamma());
    const double lifetimes = std::max(500.0, (pulse.support_length() * p.gamma() + 30) / 0.6);
    const auto grid = make_grid(p, p.round_trip() / 10, lifetimes, 0.6);
    const auto incident = sample_pulse(pulse, grid);
    const auto fast = propagate(p, incident);
    const auto slow = roundtrip_oracle(p, incident);
    CAPTURE(p.r1());
    CAPTURE(p.r2());
    CHECK(relative_rms(fast.reflected.values(), slow.reflected.values()) <= 1e-6);
    if (!p.single_ended()) CHECK(relative_rms(fast.transmitted.values(), slow.transmitted.values()) <= 1e-6);
  }
  // The specific pair named for the oracle.
  const auto p = validate_cavity(1.0, 0.99, 0.995);
  const auto grid = trip_grid(p, 10);
  const auto incident = sample_pulse(PulseSpec<double>::rectangular(1.0, 3 / p.gamma()), grid);
  const auto fast = propagate(p, incident);
  const auto slow = roundtrip_oracle(p, incident);
  CHECK(relative_rms(fast.reflected.values(), slow.reflected.values()) <= 1e-6);
  CHECK(relative_rms(fast.transmitted.values(), slow.transmitted.values()) <= 1e-6);
}

TEST_CASE("lossless energy balance and causal energy flow") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> refl(0.85, 0.99);
  for (int i = 0; i < 8; ++i) {
    const auto p = validate_cavity(1.0, refl(rng), refl(rng));
    const auto pulse = random_pulse(rng, p.gamma());
    // tau = 10 dt keeps the half-trip delay of C_T an integer number of samples.
    const auto grid = make_grid(p, p.round_trip() / 10, std::max(500.0, (pulse.support_length() * p.gamma() + 30) / 0.6));
    const auto r = propagate(p, sample_pulse(pulse, grid));
    const double in = field_energy(r.incident, 3.0);
    const double out = field_energy(r.reflected, 3.0) + field_energy(r.transmitted, 3.0);
    CHECK(std::abs(out - in) <= 1e-6 * in);
    const auto trace = energy_trace(r, 3.0);
    CHECK(trace.epsilon.minCoeff() >= -1e-9);
    CHECK(trace.epsilon_max <= 1 + 1e-9);
  }
}

TEST_CASE("time reversal under the high-finesse filter") {
  const auto p = validate_cavity(1e10, 0.9999, 1.0);
  const TimeGrid<double> grid(-3e-4, 2e-11, 1 << 16);
  const auto incident = analytic_spectrum(PulseSpec<double>::truncated_exponential(1.0, p.gamma()), grid);
  const auto hf = highfinesse_reflection(p, grid);
  const ComplexVector<double> reflected = hf.cwiseProduct(incident.values());
  CHECK((reflected - incident.values().conjugate()).cwiseAbs().maxCoeff() <=
        1e-15 * incident.values().cwiseAbs().maxCoeff());

  // The exact filter reproduces it to order 1 - r1 near resonance.
  for (double r1 : {0.999, 0.9999}) {
    const auto q = validate_cavity(1e10, r1, 1.0);
    const double band = 10 * q.gamma();
    const TimeGrid<double> fine(0.0, 1.0 / (4 * band / (2 * kPi)), 4001);
    const auto spectrum = analytic_spectrum(PulseSpec<double>::truncated_exponential(1.0, q.gamma()), fine);
    const ComplexVector<double> exact = reflection_response(q, fine).cwiseProduct(spectrum.values());
    double num = 0, den = 0;
    for (Index k = 0; k < fine.size(); ++k) {
      if (std::abs(2 * kPi * fine.frequency(k)) > band) continue;
      num += std::norm(exact[k] - std::conj(spectrum.values()[k]));
      den += std::norm(spectrum.values()[k]);
    }
    CHECK(std::sqrt(num / den) <= 2 * (1 - r1));
  }
}

TEST_CASE("linearity and scale invariance of epsilon") {
  const auto p = validate_cavity(1.0, 0.92, 0.97);
  const auto grid = trip_grid(p, 10);
  const auto base = sample_pulse(PulseSpec<double>::exponential_rate(1.0, 0.7 / p.gamma(), 3 / p.gamma()), grid);
  const std::complex<double> c(-0.3, 2.2);
  const SampledField<double> scaled(grid, c * base.values());
  const auto a = propagate(p, base);
  const auto b = propagate(p, scaled);
  CHECK(relative_rms(b.reflected.values(), ComplexVector<double>(c * a.reflected.values())) <= 1e-13);
  CHECK(relative_rms(b.transmitted.values(), ComplexVector<double>(c * a.transmitted.values())) <= 1e-13);
  CHECK(energy_trace(b).epsilon_max == doctest::Approx(energy_trace(a).epsilon_max).epsilon(1e-12));
}

TEST_CASE("repeated runs are bit-identical, with or without the filter cache") {
  const auto p = validate_cavity(1e10, 0.99, 0.999);
  const auto grid = default_grid(p);
  const auto pulse = sample_pulse(PulseSpec<double>::truncated_exponential(1.0, p.gamma(), 3 / p.gamma()), grid);
  FilterCache<double> cache;
  const double first = energy_trace(propagate(p, pulse)).epsilon_max;
  const double second = energy_trace(propagate(p, pulse)).epsilon_max;
  const double cached = energy_trace(propagate(p, pulse, {}, &cache)).epsilon_max;
  const double cached_again = energy_trace(propagate(p, pulse, {}, &cache)).epsilon_max;
  CHECK(first == second);
  CHECK(cached == cached_again);
  CHECK(std::abs(first - cached) <= 1e-12);
  CHECK(cache.hits() == 1);
}

TEST_CASE("reference absorption values") {
  SUBCASE("truncation at four lifetimes") {
    const auto p = validate_cavity(1e10, 0.999, 1.0);
    const auto grid = default_grid(p);
    const auto r = propagate(p, sample_pulse(PulseSpec<double>::truncated_exponential(1.0, p.gamma(), 4 / p.gamma()), grid));
    const double eps = energy_trace(r).epsilon_max;
    CHECK(eps == doctest::Approx(0.9997).epsilon(0.0002));
    CHECK(eps == doctest::Approx(1 - std::exp(-8.0)).epsilon(2e-4));
  }
  SUBCASE("symmetric cavity stores half") {
    const auto p = validate_cavity(1e10, 0.99, 0.99);
    const auto grid = default_grid(p);
    const auto r = propagate(p, sample_pulse(PulseSpec<double>::truncated_exponential(1.0, p.gamma()), grid));
    CHECK(energy_trace(r).epsilon_max == doctest::Approx(0.5).epsilon(0.02));
    // Closed form for the matched pulse in the delay-line model.
    const double rr = 0.99 * 0.99;
    CHECK(energy_trace(r).epsilon_max == doctest::Approx((1 + rr * rr) / ((1 + rr) * (1 + rr))).epsilon(1e-3));
  }
  SUBCASE("rate mismatch follows 4 Gamma alpha / (Gamma + alpha)^2") {
    const auto p = validate_cavity(1e10, 0.999, 1.0);
    const auto grid = default_grid(p);
    for (double ratio : {0.5, 0.8, 1.25, 2.0}) {
      const double alpha = ratio * p.gamma();
      const auto r = propagate(p, sample_pulse(PulseSpec<double>::exponential_rate(1.0, 1 / alpha), grid));
      const double expected = 4 * p.gamma() * alpha / ((p.gamma() + alpha) * (p.gamma() + alpha));
      CHECK(energy_trace(r).epsilon_max == doctest::Approx(expected).epsilon(2e-3));
    }
  }
}

TEST_CASE("free decay") {
  for (auto [r1, r2] : {std::pair{0.99, 1.0}, {0.995, 0.998}}) {
    const auto p = validate_cavity(1e10, r1, r2);
    const auto grid = default_grid(p);
    const double stored = 2.5e-7;
    const auto decay = free_decay(p, stored, grid);
    const double rate = fitted_decay_rate(decay, 1 / p.gamma(), 12 / p.gamma());
    CHECK(rate == doctest::Approx(p.gamma()).epsilon(1e-3));
    CHECK(decay.values().head(grid.first_nonnegative()).cwiseAbs().maxCoeff() == 0.0);
    if (p.single_ended()) CHECK(field_energy(decay, p.area()) == doctest::Approx(stored).epsilon(1e-9));
  }
  const auto p = validate_cavity(1e10, 0.99, 1.0);
  const auto grid = default_grid(p, 100.0);
  CHECK(free_decay(p, 0.0, grid).values().cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(free_decay(validate_cavity(1e10, 1.0, 1.0), 1.0, grid), DegenerateCavity);
}

TEST_CASE("time-reversed free decay is the matched pulse") {
  const auto p = validate_cavity(1e10, 0.9995, 1.0);
  const auto grid = default_grid(p);
  const auto decay = free_decay(p, 1.0, grid);
  const auto pulse = sample_pulse(PulseSpec<double>::truncated_exponential(1.0, p.gamma()), grid);
  const Index zero = grid.first_nonnegative();
  const Index span = std::min(zero, grid.size() - zero);
  ComplexVector<double> reversed = ComplexVector<double>::Zero(span), target(span);
  // Sample at -m dt pairs with the decay at (m - 1) dt: both are the first
  // sample on their side of the jump.
  for (Index m = 1; m < span; ++m) {
    reversed[m] = std::conj(decay.values()[zero + m - 1]);
    target[m] = pulse.values()[zero - m];
  }
  reversed /= reversed.norm();
  target /= target.norm();
  CHECK((reversed - target).norm() <= 1e-3);
}

TEST_CASE("grid requirements") {
  const auto p = validate_cavity(1e10, 0.99, 1.0);
  const auto pulse = PulseSpec<double>::truncated_exponential(1.0, p.gamma());
  const auto coarse = make_grid(p, 1.0 / (4 * p.nu_fsr()), 500.0);
  CHECK_THROWS_AS(propagate(p, sample_pulse(pulse, coarse)), GridTooCoarse);
  PropagationOptions<double> opt;
  opt.allow_coarse_grid = true;
  CHECK_NOTHROW(propagate(p, sample_pulse(pulse, coarse), opt));

  const auto short_grid = default_grid(p, 100.0);
  CHECK_THROWS_AS(propagate(p, sample_pulse(pulse, short_grid)), WindowTooShort);

  // Long enough overall, but the decay runs into the window edge.
  opt = {};
  opt.allow_short_window = true;
  const auto cramped = make_grid(p, 1.0 / (5 * p.nu_fsr()), 40.0, 0.9);
  CHECK_THROWS_AS(propagate(p, sample_pulse(pulse, cramped), opt), WindowTooShort);
}
