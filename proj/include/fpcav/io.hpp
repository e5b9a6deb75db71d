#ifndef FPCAV_IO_HPP
#define FPCAV_IO_HPP

#include <filesystem>
#include <string>

#include <json.hpp>

#include "fpcav/experiments.hpp"

namespace fpcav {

inline constexpr const char* kToolName = "fpcav";
inline constexpr const char* kToolVersion = "0.1.0";

/// 17 significant digits, scientific notation, '.' decimal separator.
std::string format_double(double value);

/// Columns t_s, I_in, I_refl, I_trans, epsilon; every `stride`-th sample.
void write_time_series_csv(const std::filesystem::path& path, const PropagationResult<double>& result,
                           const EnergyTrace<double>& trace, Index stride = 1);

/// Columns: swept parameter (SI), the same in natural units, then one
/// epsilon_max column per series.
void write_sweep_csv(const std::filesystem::path& path, const SweepResult& sweep);

/// Columns: evaluation, epsilon_max, p0..p(K-1) for every improvement.
void write_optimization_csv(const std::filesystem::path& path, const OptimizationReport& report);

nlohmann::json to_json(const CavityParams<double>& cavity);
nlohmann::json to_json(const PulseSpec<double>& pulse);
nlohmann::json to_json(const TimeGrid<double>& grid);
nlohmann::json to_json(const Provenance& provenance);
nlohmann::json sweep_metadata(const SweepResult& sweep);

void write_json(const std::filesystem::path& path, const nlohmann::json& document);

}  // namespace fpcav

#endif  // FPCAV_IO_HPP
