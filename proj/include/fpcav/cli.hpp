#ifndef FPCAV_CLI_HPP
#define FPCAV_CLI_HPP

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "fpcav/config.hpp"

namespace fpcav {

enum ExitCode : int { kExitOk = 0, kExitRuntime = 1, kExitUsage = 2 };

/// Outputs go to config.output.dir, which is created on demand.
int run_simulate(const RunConfig& config, std::ostream& out);
int run_sweep(const std::string& name, const RunConfig& config, unsigned threads, std::ostream& out);
int run_optimize(const RunConfig& config, std::ostream& out);
/// Figures 4 to 8; anything else is a usage error.
int run_figure(int figure, const RunConfig& config, unsigned threads, std::ostream& out, std::ostream& err);

/// Full command line: fpcav [--config PATH] [--out DIR] [--threads N]
/// [--allow-coarse-grid] (simulate | sweep NAME | optimize | figure N).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fpcav

#endif  // FPCAV_CLI_HPP
