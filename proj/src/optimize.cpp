#include <algorithm>
#include <cmath>

#include "fpcav/experiments.hpp"

namespace fpcav {

std::string to_string(SearchFamily family) {
  switch (family) {
    case SearchFamily::RisingExponentialRate: return "rising_exponential_rate";
    case SearchFamily::PiecewiseConstant: return "piecewise_constant";
  }
  return "unknown";
}

SearchFamily search_family_from_string(const std::string& name) {
  if (name == "rising_exponential_rate") return SearchFamily::RisingExponentialRate;
  if (name == "piecewise_constant") return SearchFamily::PiecewiseConstant;
  throw RangeError("unknown optimizer family '" + name + "'");
}

PulseSpec<double> pulse_from_parameters(SearchFamily family, std::span<const double> parameters, double support) {
  switch (family) {
    case SearchFamily::RisingExponentialRate:
      if (parameters.size() != 2) throw RangeError("exponential family takes (tau_p, T)");
      return PulseSpec<double>::exponential_rate(1.0, parameters[0], parameters[1]);
    case SearchFamily::PiecewiseConstant:
      return PulseSpec<double>::piecewise_constant({parameters.begin(), parameters.end()}, support);
  }
  throw RangeError("unknown optimizer family");
}

namespace {

constexpr double kInvGolden = 0.6180339887498949;  // (sqrt(5) - 1) / 2

class Objective {
public:
  Objective(const CavityParams<double>& params, SearchFamily family, const OptimizerOptions& options,
            TimeGrid<double> grid)
      : params_(params), family_(family), options_(options), grid_(grid) {}

  double operator()(const std::vector<double>& x) {
    if (evaluations_ >= options_.max_evaluations)
      throw BudgetExhausted("optimizer used all " + std::to_string(options_.max_evaluations) +
                            " evaluations before converging (best epsilon_max so far " + std::to_string(best_) + ")");
    ++evaluations_;
    if (family_ == SearchFamily::PiecewiseConstant &&
        std::none_of(x.begin(), x.end(), [](double a) { return a != 0; }))
      return 0.0;
    const auto pulse = pulse_from_parameters(family_, x, options_.support);
    const double value = absorption_efficiency(params_, pulse, grid_, options_.propagation, &cache_);
    best_ = std::max(best_, value);
    return value;
  }

  std::size_t evaluations() const { return evaluations_; }
  const TimeGrid<double>& grid() const { return grid_; }

private:
  CavityParams<double> params_;
  SearchFamily family_;
  OptimizerOptions options_;
  TimeGrid<double> grid_;
  FilterCache<double> cache_{std::size_t(1) << 31};
  std::size_t evaluations_ = 0;
  double best_ = 0;
};

void validate_box(SearchFamily family, const ParameterBox& bounds, const OptimizerOptions& options) {
  if (bounds.lower.size() != bounds.upper.size() || bounds.lower.empty())
    throw RangeError("parameter box needs matching, non-empty lower and upper bounds");
  for (std::size_t i = 0; i < bounds.size(); ++i)
    if (!(bounds.lower[i] <= bounds.upper[i])) throw RangeError("parameter box has lower > upper");
  if (family == SearchFamily::RisingExponentialRate) {
    if (bounds.size() != 2) throw RangeError("exponential family searches exactly (tau_p, T)");
    if (!(bounds.lower[0] > 0 && bounds.lower[1] > 0)) throw RangeError("tau_p and T bounds must be positive");
  } else {
    if (bounds.size() > 64) throw RangeError("piecewise family supports at most 64 segments");
    if (!(options.support > 0)) throw RangeError("piecewise family needs a positive support length");
  }
}

}  // namespace

OptimizationReport optimize_pulse(const CavityParams<double>& params, SearchFamily family, const ParameterBox& bounds,
                                  const OptimizerOptions& options) {
  validate_box(family, bounds, options);
  const std::size_t dims = bounds.size();
  const double support = family == SearchFamily::RisingExponentialRate ? bounds.upper[1] : options.support;

  SweepOptions grid_options;
  grid_options.window_lifetimes = options.window_lifetimes;
  grid_options.lead_fraction = options.lead_fraction;
  grid_options.dt = options.dt;
  grid_options.propagation = options.propagation;
  Objective objective(params, family, options, grid_for_support(params, support, grid_options));

  std::vector<TracePoint> trace;
  std::vector<double> x(dims);
  double fx = -1;
  auto record = [&](const std::vector<double>& point, double value) {
    if (value > fx) {
      x = point;
      fx = value;
      trace.push_back({objective.evaluations(), value, point});
    }
  };

  // Brute-force seed over a coarse grid for low-dimensional families; the
  // piecewise search starts from the flat (rectangular) envelope.
  if (dims == 2 && options.seed_grid >= 2) {
    const auto axis0 = linspace(bounds.lower[0], bounds.upper[0], options.seed_grid);
    const auto axis1 = linspace(bounds.lower[1], bounds.upper[1], options.seed_grid);
    for (double a : axis0)
      for (double b : axis1) {
        std::vector<double> point{a, b};
        record(point, objective(point));
      }
  } else {
    std::vector<double> point = bounds.upper;
    record(point, objective(point));
  }

  std::vector<double> width(dims), step(dims);
  for (std::size_t i = 0; i < dims; ++i) {
    width[i] = bounds.upper[i] - bounds.lower[i];
    step[i] = width[i] / 4;
  }

  auto converged = [&] {
    for (std::size_t i = 0; i < dims; ++i)
      if (step[i] >= options.x_tolerance * width[i] && width[i] > 0) return false;
    return true;
  };

  while (!converged()) {
    for (std::size_t i = 0; i < dims; ++i) {
      if (width[i] == 0) continue;
      const double start = x[i];
      double lo = std::max(bounds.lower[i], start - step[i]);
      double hi = std::min(bounds.upper[i], start + step[i]);
      auto probe = [&](double s) {
        std::vector<double> point = x;
        point[i] = s;
        const double value = objective(point);
        record(point, value);
        return value;
      };
      if (lo == bounds.lower[i] && lo != start) probe(lo);
      if (hi == bounds.upper[i] && hi != start) probe(hi);

      const double stop = 0.05 * (hi - lo);
      double c = hi - kInvGolden * (hi - lo);
      double d = lo + kInvGolden * (hi - lo);
      double fc = probe(c);
      double fd = probe(d);
      while (hi - lo > stop) {
        if (fc >= fd) {
          hi = d;
          d = c;
          fd = fc;
          c = hi - kInvGolden * (hi - lo);
          fc = probe(c);
        } else {
          lo = c;
          c = d;
          fc = fd;
          d = lo + kInvGolden * (hi - lo);
          fd = probe(d);
        }
      }
      const double moved = std::abs(x[i] - start);
      step[i] = moved > step[i] / 2 ? std::min(2 * step[i], width[i] / 2) : step[i] / 2;
    }
  }

  OptimizationReport report{family, x, fx, objective.evaluations(), std::move(trace),
                            pulse_from_parameters(family, x, options.support), objective.grid()};
  return report;
}

}  // namespace fpcav
