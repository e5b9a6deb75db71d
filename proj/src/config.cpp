#include "fpcav/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace fpcav {

namespace {

using nlohmann::json;

// Walks one JSON object, records every violation and never throws itself.
class Section {
public:
  Section(const json& node, std::string path, std::vector<std::string>& errors)
      : node_(node), path_(std::move(path)), errors_(errors) {
    if (!node_.is_object()) error(path_.empty() ? "document" : path_, "expected an object");
  }

  bool valid() const { return node_.is_object(); }

  const json* find(const std::string& key) {
    seen_.insert(key);
    if (!valid()) return nullptr;
    auto it = node_.find(key);
    if (it == node_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  void number(const std::string& key, double& out) {
    if (auto v = number_value(key)) out = *v;
  }

  void optional_number(const std::string& key, std::optional<double>& out) {
    if (auto v = number_value(key)) out = *v;
  }

  void integer(const std::string& key, std::int64_t& out) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_number_integer()) {
      error(name(key), "expected an integer");
      return;
    }
    out = v->get<std::int64_t>();
  }

  void boolean(const std::string& key, bool& out) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_boolean()) {
      error(name(key), "expected true or false");
      return;
    }
    out = v->get<bool>();
  }

  void string(const std::string& key, std::string& out) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_string()) {
      error(name(key), "expected a string");
      return;
    }
    out = v->get<std::string>();
  }

  void number_array(const std::string& key, std::vector<double>& out) {
    const json* v = find(key);
    if (!v) return;
    if (auto values = array_of_numbers(*v, name(key))) out = std::move(*values);
  }

  // Either an explicit array or {"min", "max", "count", "spacing": "linear"|"log"}.
  void range(const std::string& key, std::vector<double>& out) {
    const json* v = find(key);
    if (!v) return;
    const std::string where = name(key);
    if (v->is_array()) {
      if (auto values = array_of_numbers(*v, where)) out = std::move(*values);
      return;
    }
    if (!v->is_object()) {
      error(where, "expected an array of numbers or a {min, max, count, spacing} object");
      return;
    }
    Section sub(*v, where, errors_);
    double lo = NAN, hi = NAN;
    std::int64_t count = 0;
    std::string spacing = "linear";
    sub.number("min", lo);
    sub.number("max", hi);
    sub.integer("count", count);
    sub.string("spacing", spacing);
    sub.reject_unknown();
    bool ok = true;
    if (!std::isfinite(lo)) ok = false, error(where + ".min", "required finite number");
    if (!std::isfinite(hi)) ok = false, error(where + ".max", "required finite number");
    if (count < 1 || count > 100000) ok = false, error(where + ".count", "must lie in [1, 100000]");
    if (spacing != "linear" && spacing != "log") ok = false, error(where + ".spacing", "must be \"linear\" or \"log\"");
    if (ok && spacing == "log" && !(lo > 0 && hi > 0)) ok = false, error(where, "log spacing needs positive bounds");
    if (ok) out = spacing == "log" ? logspace(lo, hi, std::size_t(count)) : linspace(lo, hi, std::size_t(count));
  }

  void reject_unknown() {
    if (!valid()) return;
    for (const auto& item : node_.items())
      if (!seen_.count(item.key())) error(name(item.key()), "unknown key");
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  void error(const std::string& where, const std::string& what) { errors_.push_back(where + ": " + what); }

private:
  std::optional<double> number_value(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) {
      error(name(key), "expected a number");
      return std::nullopt;
    }
    return v->get<double>();
  }

  std::optional<std::vector<double>> array_of_numbers(const json& v, const std::string& where) {
    if (!v.is_array()) {
      error(where, "expected an array of numbers");
      return std::nullopt;
    }
    std::vector<double> values;
    for (const auto& item : v) {
      if (!item.is_number()) {
        error(where, "expected an array of numbers");
        return std::nullopt;
      }
      values.push_back(item.get<double>());
    }
    return values;
  }

  const json& node_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

class Checker {
public:
  explicit Checker(std::vector<std::string>& errors) : errors_(errors) {}

  void positive(const std::string& field, double v) {
    if (!(v > 0) || !std::isfinite(v)) fail(field, v, "must be a positive finite number");
  }
  void positive(const std::string& field, const std::optional<double>& v) {
    if (v) positive(field, *v);
  }
  void within(const std::string& field, double v, double lo, double hi, bool open_lo, const char* bound) {
    const bool ok = (open_lo ? v > lo : v >= lo) && v <= hi;
    if (!ok) fail(field, v, std::string("outside ") + bound);
  }
  void fail(const std::string& field, double v, const std::string& why) {
    std::ostringstream msg;
    msg.precision(17);
    msg << field << " = " << v << " " << why;
    errors_.push_back(msg.str());
  }
  void fail(const std::string& field, const std::string& why) { errors_.push_back(field + ": " + why); }

private:
  std::vector<std::string>& errors_;
};

void validate(const RunConfig& c, std::vector<std::string>& errors) {
  Checker check(errors);
  check.positive("cavity.nu_fsr_hz", c.cavity.nu_fsr_hz);
  check.within("cavity.r1", c.cavity.r1, 0, 1, true, "(0, 1]");
  check.within("cavity.r2", c.cavity.r2, 0, 1, true, "(0, 1]");
  check.positive("cavity.area_m2", c.cavity.area_m2);
  if (c.cavity.r1 == 1 && c.cavity.r2 == 1) check.fail("cavity", "r1 = r2 = 1 is a lossless cavity with no decay rate");

  const auto& p = c.pulse;
  bool known_family = true;
  PulseFamily family{};
  try {
    family = pulse_family_from_string(p.family);
  } catch (const RangeError&) {
    known_family = false;
    check.fail("pulse.family", "unknown family '" + p.family +
                                   "' (expected truncated_rising_exponential, rectangular, rising_exponential_rate or "
                                   "piecewise_constant)");
  }
  check.positive("pulse.p0", p.p0);
  check.positive("pulse.gamma_hz", p.gamma_hz);
  check.positive("pulse.tau_p_s", p.tau_p_s);
  check.positive("pulse.length_s", p.length_s);
  check.positive("pulse.length_lifetimes", p.length_lifetimes);
  if (p.gamma_hz && p.tau_p_s) check.fail("pulse", "give at most one of gamma_hz and tau_p_s");
  if (p.length_s && p.length_lifetimes) check.fail("pulse", "give at most one of length_s and length_lifetimes");
  const bool has_length = p.length_s || p.length_lifetimes;
  if (known_family) {
    const bool exponential =
        family == PulseFamily::TruncatedRisingExponential || family == PulseFamily::RisingExponentialRate;
    if (!exponential && (p.gamma_hz || p.tau_p_s))
      check.fail("pulse", "gamma_hz and tau_p_s apply only to the exponential families");
    if (!exponential && !has_length) check.fail("pulse", p.family + " pulses need length_s or length_lifetimes");
    if (family == PulseFamily::PiecewiseConstant) {
      if (p.segments.empty() || p.segments.size() > 64) check.fail("pulse.segments", "needs 1 to 64 amplitudes");
      bool nonzero = false;
      for (double a : p.segments) {
        if (!std::isfinite(a)) check.fail("pulse.segments", "amplitudes must be finite");
        nonzero = nonzero || a != 0;
      }
      if (!nonzero && !p.segments.empty()) check.fail("pulse.segments", "needs at least one nonzero amplitude");
    } else if (!p.segments.empty()) {
      check.fail("pulse.segments", "applies only to piecewise_constant");
    }
  }

  check.positive("grid.dt_s", c.grid.dt_s);
  check.positive("grid.window_lifetimes", c.grid.window_lifetimes);
  check.within("grid.lead_fraction", c.grid.lead_fraction, 0, 1, true, "(0, 1]");
  if (c.output.dir.empty()) check.fail("output.dir", "must not be empty");
  if (c.output.max_rows < 1) check.fail("output.max_rows", double(c.output.max_rows), "must be at least 1");

  auto all = [&](const std::string& field, const std::vector<double>& values, auto predicate, const char* why) {
    for (double v : values)
      if (!predicate(v)) {
        check.fail(field, v, why);
        return;
      }
  };
  auto pos = [](double v) { return v > 0 && std::isfinite(v); };
  auto unit = [](double v) { return v > 0 && v <= 1; };
  const auto& s = c.sweep;
  all("sweep.rectangular_length_lifetimes", s.rectangular_length_lifetimes, pos, "must be positive");
  all("sweep.loss_fractions", s.loss_fractions, [](double v) { return v >= 0 && v <= 0.5; }, "outside [0, 0.5]");
  if (s.reference_r1) check.within("sweep.reference_r1", *s.reference_r1, 0, 1, true, "(0, 1)");
  if (s.reference_r1 && *s.reference_r1 == 1) check.fail("sweep.reference_r1", 1.0, "must be below 1");
  all("sweep.truncation_lifetimes", s.truncation_lifetimes, pos, "must be positive");
  all("sweep.time_constant_lifetimes", s.time_constant_lifetimes, pos, "must be positive");
  all("sweep.back_mirror_r1", s.back_mirror_r1, [](double v) { return v > 0 && v < 1; }, "outside (0, 1)");
  all("sweep.back_mirror_r2", s.back_mirror_r2, unit, "outside (0, 1]");

  const auto& o = c.optimizer;
  if (o.family != "rising_exponential_rate" && o.family != "piecewise_constant")
    check.fail("optimizer.family", "unknown family '" + o.family + "' (expected rising_exponential_rate or piecewise_constant)");
  auto bounds = [&](const std::string& field, const std::vector<double>& b, bool positive_lower) {
    if (b.size() != 2) {
      check.fail(field, "expects [lower, upper]");
      return;
    }
    if (!(b[0] <= b[1]) || !std::isfinite(b[0]) || !std::isfinite(b[1])) check.fail(field, "needs finite lower <= upper");
    if (positive_lower && !(b[0] > 0)) check.fail(field, b[0], "lower bound must be positive");
  };
  bounds("optimizer.tau_lifetimes", o.tau_lifetimes, true);
  bounds("optimizer.length_lifetimes", o.length_lifetimes, true);
  bounds("optimizer.amplitude_bounds", o.amplitude_bounds, false);
  if (o.segments < 1 || o.segments > 64) check.fail("optimizer.segments", double(o.segments), "outside [1, 64]");
  check.positive("optimizer.support_lifetimes", o.support_lifetimes);
  if (o.max_evaluations < 1) check.fail("optimizer.max_evaluations", double(o.max_evaluations), "must be at least 1");
  check.positive("optimizer.x_tolerance", o.x_tolerance);
  if (o.seed_grid < 0) check.fail("optimizer.seed_grid", double(o.seed_grid), "must be non-negative");
}

std::string join(const std::vector<std::string>& lines) {
  std::string out = "invalid configuration:";
  for (const auto& l : lines) out += "\n  " + l;
  return out;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte);
    throw ParseError("config is not valid JSON at line " + std::to_string(line) + ", column " +
                     std::to_string(column) + ": " + e.what());
  }

  RunConfig c;
  std::vector<std::string> errors;
  Section root(doc, "", errors);
  if (!root.valid()) throw SchemaError(join(errors));

  auto section = [&](const char* key) {
    static const json empty = json::object();
    const json* node = root.find(key);
    return Section(node ? *node : empty, key, errors);
  };

  {
    auto s = section("cavity");
    s.number("nu_fsr_hz", c.cavity.nu_fsr_hz);
    s.number("r1", c.cavity.r1);
    s.number("r2", c.cavity.r2);
    s.number("area_m2", c.cavity.area_m2);
    s.reject_unknown();
  }
  {
    auto s = section("pulse");
    s.string("family", c.pulse.family);
    s.number("p0", c.pulse.p0);
    s.optional_number("gamma_hz", c.pulse.gamma_hz);
    s.optional_number("tau_p_s", c.pulse.tau_p_s);
    s.optional_number("length_s", c.pulse.length_s);
    s.optional_number("length_lifetimes", c.pulse.length_lifetimes);
    s.number_array("segments", c.pulse.segments);
    s.reject_unknown();
  }
  {
    auto s = section("grid");
    s.optional_number("dt_s", c.grid.dt_s);
    s.number("window_lifetimes", c.grid.window_lifetimes);
    s.number("lead_fraction", c.grid.lead_fraction);
    s.boolean("allow_coarse_grid", c.grid.allow_coarse_grid);
    s.reject_unknown();
  }
  {
    auto s = section("output");
    s.string("dir", c.output.dir);
    s.integer("max_rows", c.output.max_rows);
    s.reject_unknown();
  }
  {
    auto s = section("sweep");
    s.range("rectangular_length_lifetimes", c.sweep.rectangular_length_lifetimes);
    s.range("loss_fractions", c.sweep.loss_fractions);
    s.optional_number("reference_r1", c.sweep.reference_r1);
    s.range("truncation_lifetimes", c.sweep.truncation_lifetimes);
    s.range("time_constant_lifetimes", c.sweep.time_constant_lifetimes);
    s.range("back_mirror_r1", c.sweep.back_mirror_r1);
    s.range("back_mirror_r2", c.sweep.back_mirror_r2);
    s.boolean("allow_double_ended", c.sweep.allow_double_ended);
    s.reject_unknown();
  }
  {
    auto s = section("optimizer");
    s.string("family", c.optimizer.family);
    s.number_array("tau_lifetimes", c.optimizer.tau_lifetimes);
    s.number_array("length_lifetimes", c.optimizer.length_lifetimes);
    s.integer("segments", c.optimizer.segments);
    s.number("support_lifetimes", c.optimizer.support_lifetimes);
    s.number_array("amplitude_bounds", c.optimizer.amplitude_bounds);
    s.integer("max_evaluations", c.optimizer.max_evaluations);
    s.number("x_tolerance", c.optimizer.x_tolerance);
    s.integer("seed_grid", c.optimizer.seed_grid);
    s.reject_unknown();
  }
  root.reject_unknown();

  validate(c, errors);
  if (!errors.empty()) throw SchemaError(join(errors));
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

json to_json(const RunConfig& c) {
  json cavity{{"nu_fsr_hz", c.cavity.nu_fsr_hz}, {"r1", c.cavity.r1}, {"r2", c.cavity.r2}, {"area_m2", c.cavity.area_m2}};

  json pulse{{"family", c.pulse.family}, {"p0", c.pulse.p0}};
  put_optional(pulse, "gamma_hz", c.pulse.gamma_hz);
  put_optional(pulse, "tau_p_s", c.pulse.tau_p_s);
  put_optional(pulse, "length_s", c.pulse.length_s);
  put_optional(pulse, "length_lifetimes", c.pulse.length_lifetimes);
  if (!c.pulse.segments.empty()) pulse["segments"] = c.pulse.segments;

  json grid{{"window_lifetimes", c.grid.window_lifetimes},
            {"lead_fraction", c.grid.lead_fraction},
            {"allow_coarse_grid", c.grid.allow_coarse_grid}};
  put_optional(grid, "dt_s", c.grid.dt_s);

  json sweep{{"rectangular_length_lifetimes", c.sweep.rectangular_length_lifetimes},
             {"loss_fractions", c.sweep.loss_fractions},
             {"truncation_lifetimes", c.sweep.truncation_lifetimes},
             {"time_constant_lifetimes", c.sweep.time_constant_lifetimes},
             {"back_mirror_r1", c.sweep.back_mirror_r1},
             {"back_mirror_r2", c.sweep.back_mirror_r2},
             {"allow_double_ended", c.sweep.allow_double_ended}};
  put_optional(sweep, "reference_r1", c.sweep.reference_r1);

  json optimizer{{"family", c.optimizer.family},
                 {"tau_lifetimes", c.optimizer.tau_lifetimes},
                 {"length_lifetimes", c.optimizer.length_lifetimes},
                 {"segments", c.optimizer.segments},
                 {"support_lifetimes", c.optimizer.support_lifetimes},
                 {"amplitude_bounds", c.optimizer.amplitude_bounds},
                 {"max_evaluations", c.optimizer.max_evaluations},
                 {"x_tolerance", c.optimizer.x_tolerance},
                 {"seed_grid", c.optimizer.seed_grid}};

  return {{"cavity", cavity},
          {"pulse", pulse},
          {"grid", grid},
          {"output", {{"dir", c.output.dir}, {"max_rows", c.output.max_rows}}},
          {"sweep", sweep},
          {"optimizer", optimizer}};
}

json config_schema() {
  const json number{{"type", "number"}};
  const json positive{{"type", "number"}, {"exclusiveMinimum", 0}};
  const json reflectivity{{"type", "number"}, {"exclusiveMinimum", 0}, {"maximum", 1}};
  const json numbers{{"type", "array"}, {"items", number}};
  const json pair{{"type", "array"}, {"items", number}, {"minItems", 2}, {"maxItems", 2}};
  const json range{{"oneOf",
                    {numbers,
                     {{"type", "object"},
                      {"additionalProperties", false},
                      {"required", {"min", "max", "count"}},
                      {"properties",
                       {{"min", number},
                        {"max", number},
                        {"count", {{"type", "integer"}, {"minimum", 1}}},
                        {"spacing", {{"enum", {"linear", "log"}}}}}}}}}};
  auto object = [](json properties) {
    return json{{"type", "object"}, {"additionalProperties", false}, {"properties", std::move(properties)}};
  };
  return {
      {"$schema", "https://json-schema.org/draft/2020-12/schema"},
      {"title", "fpcav run configuration"},
      {"type", "object"},
      {"additionalProperties", false},
      {"properties",
       {{"cavity", object({{"nu_fsr_hz", positive}, {"r1", reflectivity}, {"r2", reflectivity}, {"area_m2", positive}})},
        {"pulse", object({{"family",
                           {{"enum",
                             {"truncated_rising_exponential", "rectangular", "rising_exponential_rate",
                              "piecewise_constant"}}}},
                          {"p0", positive},
                          {"gamma_hz", positive},
                          {"tau_p_s", positive},
                          {"length_s", positive},
                          {"length_lifetimes", positive},
                          {"segments", {{"type", "array"}, {"items", number}, {"minItems", 1}, {"maxItems", 64}}}})},
        {"grid", object({{"dt_s", positive},
                         {"window_lifetimes", positive},
                         {"lead_fraction", reflectivity},
                         {"allow_coarse_grid", {{"type", "boolean"}}}})},
        {"output", object({{"dir", {{"type", "string"}, {"minLength", 1}}},
                           {"max_rows", {{"type", "integer"}, {"minimum", 1}}}})},
        {"sweep", object({{"rectangular_length_lifetimes", range},
                          {"loss_fractions", range},
                          {"reference_r1", reflectivity},
                          {"truncation_lifetimes", range},
                          {"time_constant_lifetimes", range},
                          {"back_mirror_r1", range},
                          {"back_mirror_r2", range},
                          {"allow_double_ended", {{"type", "boolean"}}}})},
        {"optimizer", object({{"family", {{"enum", {"rising_exponential_rate", "piecewise_constant"}}}},
                              {"tau_lifetimes", pair},
                              {"length_lifetimes", pair},
                              {"segments", {{"type", "integer"}, {"minimum", 1}, {"maximum", 64}}},
                              {"support_lifetimes", positive},
                              {"amplitude_bounds", pair},
                              {"max_evaluations", {{"type", "integer"}, {"minimum", 1}}},
                              {"x_tolerance", positive},
                              {"seed_grid", {{"type", "integer"}, {"minimum", 0}}}})}}}};
}

CavityParams<double> make_cavity(const RunConfig& c) {
  return validate_cavity(c.cavity.nu_fsr_hz, c.cavity.r1, c.cavity.r2, c.cavity.area_m2);
}

PulseSpec<double> make_pulse(const RunConfig& c, const CavityParams<double>& cavity) {
  const auto& p = c.pulse;
  double length = PulseSpec<double>::kInfinite;
  if (p.length_s) length = *p.length_s;
  if (p.length_lifetimes) {
    if (cavity.gamma() == 0) throw DegenerateCavity("length_lifetimes needs a cavity with nonzero decay rate");
    length = *p.length_lifetimes / cavity.gamma();
  }
  switch (pulse_family_from_string(p.family)) {
    case PulseFamily::TruncatedRisingExponential:
    case PulseFamily::RisingExponentialRate: {
      if (p.tau_p_s) return PulseSpec<double>::exponential_rate(p.p0, *p.tau_p_s, length);
      const double rate = p.gamma_hz ? *p.gamma_hz : cavity.gamma();
      return PulseSpec<double>::truncated_exponential(p.p0, rate, length);
    }
    case PulseFamily::Rectangular: return PulseSpec<double>::rectangular(p.p0, length);
    case PulseFamily::PiecewiseConstant: {
      std::vector<double> amplitudes = p.segments;
      for (double& a : amplitudes) a *= p.p0;
      return PulseSpec<double>::piecewise_constant(std::move(amplitudes), length);
    }
  }
  throw RangeError("unknown pulse family");
}

SweepOptions make_sweep_options(const RunConfig& c, unsigned threads) {
  SweepOptions options;
  options.window_lifetimes = c.grid.window_lifetimes;
  options.lead_fraction = c.grid.lead_fraction;
  options.dt = c.grid.dt_s;
  options.threads = threads;
  options.allow_double_ended = c.sweep.allow_double_ended;
  options.propagation.allow_coarse_grid = c.grid.allow_coarse_grid;
  options.propagation.min_window_lifetimes = std::min(options.propagation.min_window_lifetimes, c.grid.window_lifetimes);
  return options;
}

TimeGrid<double> make_run_grid(const RunConfig& c, const CavityParams<double>& cavity, const PulseSpec<double>& pulse) {
  return grid_for_support(cavity, pulse.support_length(), make_sweep_options(c, 1));
}

}  // namespace fpcav
