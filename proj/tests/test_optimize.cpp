#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fpcav/experiments.hpp"

using namespace fpcav;

namespace {

ParameterBox exponential_box(double gamma) {
  return {{0.25 / gamma, 1 / gamma}, {4 / gamma, 10 / gamma}};
}

double re_evaluate(const CavityParams<double>& p, const OptimizationReport& r) {
  return absorption_efficiency(p, r.best_pulse, r.grid);
}

}  // namespace

TEST_CASE("exponential family finds the matched time constant") {
  const auto p = validate_cavity(1e10, 0.99, 1.0);
  const double g = p.gamma();
  const auto report = optimize_pulse(p, SearchFamily::RisingExponentialRate, exponential_box(g));
  REQUIRE(report.best_parameters.size() == 2);
  CHECK(report.best_parameters[0] * g == doctest::Approx(1.0).epsilon(0.02));
  // T-limited optimum: the matched pulse at the longest allowed length.
  const double limit = absorption_efficiency(p, PulseSpec<double>::exponential_rate(1.0, 1 / g, 10 / g), report.grid);
  CHECK(std::abs(report.best_epsilon_max - limit) <= 1e-3);
  CHECK(report.best_epsilon_max <= limit + 1e-9);
  CHECK(std::abs(report.best_epsilon_max - re_evaluate(p, report)) <= 1e-9);

  // Never worse than the 8 x 8 seed grid it started from.
  double grid_best = 0;
  for (double tau : linspace(0.25 / g, 4 / g, 8))
    for (double T : linspace(1 / g, 10 / g, 8))
      grid_best = std::max(grid_best, absorption_efficiency(p, PulseSpec<double>::exponential_rate(1.0, tau, T), report.grid));
  CHECK(report.best_epsilon_max >= grid_best - 1e-9);

  // The trace records strict improvements ending at the reported optimum.
  REQUIRE(!report.trace.empty());
  for (std::size_t i = 1; i < report.trace.size(); ++i) {
    CHECK(report.trace[i].epsilon_max > report.trace[i - 1].epsilon_max);
    CHECK(report.trace[i].evaluation > report.trace[i - 1].evaluation);
  }
  CHECK(report.trace.back().epsilon_max == report.best_epsilon_max);
  CHECK(report.evaluations <= 20000);
}

TEST_CASE("free-form envelope rediscovers the rising exponential") {
  const auto p = validate_cavity(1e10, 0.9, 1.0);
  const double g = p.gamma();
  OptimizerOptions options;
  options.support = 4 / g;
  const std::size_t segments = 16;
  const ParameterBox box{std::vector<double>(segments, 0.0), std::vector<double>(segments, 1.0)};
  const auto report = optimize_pulse(p, SearchFamily::PiecewiseConstant, box, options);
  CHECK(std::abs(report.best_epsilon_max - re_evaluate(p, report)) <= 1e-9);

  const auto found = sample_pulse(report.best_pulse, report.grid).values();
  const auto matched =
      sample_pulse(PulseSpec<double>::truncated_exponential(1.0, g, options.support), report.grid).values();
  const double correlation = std::abs(found.dot(matched)) / (found.norm() * matched.norm());
  CHECK(correlation > 0.99);
  // Amplitudes rise towards t = 0.
  for (std::size_t i = 1; i < segments; ++i) CHECK(report.best_parameters[i] >= report.best_parameters[i - 1] - 1e-3);
  // Flat envelope is the starting point; the search must beat it.
  CHECK(report.best_epsilon_max > absorption_efficiency(p, PulseSpec<double>::rectangular(1.0, options.support), report.grid));
}

TEST_CASE("symmetric cavity caps every family at one half") {
  const auto p = validate_cavity(1e10, 0.99, 0.99);
  const double g = p.gamma();
  const auto exp_report = optimize_pulse(p, SearchFamily::RisingExponentialRate, exponential_box(g));
  CHECK(exp_report.best_epsilon_max <= 0.5 + 1e-3);
  CHECK(exp_report.best_epsilon_max >= 0.49);

  OptimizerOptions options;
  options.support = 6 / g;
  options.x_tolerance = 1e-3;
  const ParameterBox box{std::vector<double>(8, 0.0), std::vector<double>(8, 1.0)};
  const auto pw_report = optimize_pulse(p, SearchFamily::PiecewiseConstant, box, options);
  CHECK(pw_report.best_epsilon_max <= 0.5 + 1e-3);
}

TEST_CASE("budget and input validation") {
  const auto p = validate_cavity(1e10, 0.9, 1.0);
  const double g = p.gamma();
  OptimizerOptions tight;
  tight.max_evaluations = 10;
  CHECK_THROWS_AS(optimize_pulse(p, SearchFamily::RisingExponentialRate, exponential_box(g), tight), BudgetExhausted);
  CHECK_THROWS_AS(optimize_pulse(p, SearchFamily::RisingExponentialRate, ParameterBox{{1.0}, {2.0}}), RangeError);
  CHECK_THROWS_AS(optimize_pulse(p, SearchFamily::RisingExponentialRate, ParameterBox{{2 / g, 1 / g}, {1 / g, 2 / g}}),
                  RangeError);
  CHECK_THROWS_AS(optimize_pulse(p, SearchFamily::PiecewiseConstant, ParameterBox{{0.0}, {1.0}}), RangeError);
  CHECK(search_family_from_string(to_string(SearchFamily::PiecewiseConstant)) == SearchFamily::PiecewiseConstant);
  CHECK_THROWS_AS(search_family_from_string("gaussian"), RangeError);
}

TEST_CASE("optimizer is deterministic") {
  const auto p = validate_cavity(1e10, 0.9, 1.0);
  const auto a = optimize_pulse(p, SearchFamily::RisingExponentialRate, exponential_box(p.gamma()));
  const auto b = optimize_pulse(p, SearchFamily::RisingExponentialRate, exponential_box(p.gamma()));
  CHECK(a.best_parameters == b.best_parameters);
  CHECK(a.evaluations == b.evaluations);
}
