#include "fpcav/io.hpp"

#include <cstdio>
#include <fstream>

namespace fpcav {

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.16e", value);
  return buffer;
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

void write_time_series_csv(const std::filesystem::path& path, const PropagationResult<double>& result,
                           const EnergyTrace<double>& trace, Index stride) {
  if (stride < 1) stride = 1;
  auto out = open_output(path);
  out << "t_s,I_in,I_refl,I_trans,epsilon\r\n";
  const auto& grid = result.incident.grid();
  const auto& in = result.incident.values();
  const auto& re = result.reflected.values();
  const auto& tr = result.transmitted.values();
  for (Index k = 0; k < grid.size(); k += stride)
    out << format_double(grid.time(k)) << ',' << format_double(std::norm(in[k])) << ','
        << format_double(std::norm(re[k])) << ',' << format_double(std::norm(tr[k])) << ','
        << format_double(trace.epsilon[k]) << "\r\n";
  if (!out) throw Error("failed writing " + path.string());
}

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& sweep) {
  auto out = open_output(path);
  out << sweep.x_name << ',' << sweep.x_scaled_name;
  for (const auto& s : sweep.series) out << ',' << s.name;
  out << "\r\n";
  for (std::size_t i = 0; i < sweep.x_values.size(); ++i) {
    out << format_double(sweep.x_values[i]) << ',' << format_double(sweep.x_scaled[i]);
    for (const auto& s : sweep.series) out << ',' << format_double(s.epsilon_max[i]);
    out << "\r\n";
  }
  if (!out) throw Error("failed writing " + path.string());
}

void write_optimization_csv(const std::filesystem::path& path, const OptimizationReport& report) {
  auto out = open_output(path);
  out << "evaluation,epsilon_max";
  for (std::size_t i = 0; i < report.best_parameters.size(); ++i) out << ",p" << i;
  out << "\r\n";
  for (const auto& point : report.trace) {
    out << point.evaluation << ',' << format_double(point.epsilon_max);
    for (double p : point.parameters) out << ',' << format_double(p);
    out << "\r\n";
  }
  if (!out) throw Error("failed writing " + path.string());
}

nlohmann::json to_json(const CavityParams<double>& c) {
  return {{"nu_fsr_hz", c.nu_fsr()}, {"r1", c.r1()},   {"r2", c.r2()},
          {"area_m2", c.area()},     {"t1", c.t1()},   {"t2", c.t2()},
          {"round_trip_s", c.round_trip()}, {"gamma_hz", c.gamma()}};
}

nlohmann::json to_json(const PulseSpec<double>& p) {
  nlohmann::json j{{"family", to_string(p.family())}, {"p0", p.p0()}};
  switch (p.family()) {
    case PulseFamily::TruncatedRisingExponential: j["gamma_hz"] = p.rate_or_tau(); break;
    case PulseFamily::RisingExponentialRate: j["tau_p_s"] = p.rate_or_tau(); break;
    case PulseFamily::PiecewiseConstant: j["segments"] = p.segments(); break;
    case PulseFamily::Rectangular: break;
  }
  if (p.infinite())
    j["length_s"] = nullptr;
  else
    j["length_s"] = p.truncation();
  j["support_s"] = p.support_length();
  return j;
}

nlohmann::json to_json(const TimeGrid<double>& g) {
  return {{"t_start_s", g.t_start()}, {"dt_s", g.dt()}, {"n", g.size()}};
}

nlohmann::json to_json(const Provenance& p) {
  return {{"cavity", to_json(p.cavity)}, {"pulse", to_json(p.pulse)}, {"grid", to_json(p.grid)}};
}

nlohmann::json sweep_metadata(const SweepResult& sweep) {
  nlohmann::json series = nlohmann::json::array();
  for (const auto& s : sweep.series) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : s.provenance) points.push_back(to_json(p));
    series.push_back({{"name", s.name}, {"points", std::move(points)}});
  }
  return {{"sweep", sweep.sweep_name}, {"x_name", sweep.x_name}, {"x_scaled_name", sweep.x_scaled_name},
          {"series", std::move(series)}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& document) {
  auto out = open_output(path);
  out << document.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace fpcav
