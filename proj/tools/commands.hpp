#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"
#include "json.hpp"

namespace rabigauge::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kNumericalFailure = 3 };

struct OutputFile {
  std::string name;
  std::string body;
};

// Everything a command produces; files are written only after it returns.
struct CommandResult {
  std::vector<OutputFile> files;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  nlohmann::ordered_json cutoffs = nlohmann::ordered_json::array();  // converged (d_ref, N_ref) per point
  std::vector<std::string> warnings;
  std::string stdout_text;
  int status = kOk;
};

CommandResult cmd_atomic(const ExperimentConfig& config);
CommandResult cmd_spectrum(const ExperimentConfig& config);
CommandResult cmd_gauge_scan(const ExperimentConfig& config);
CommandResult cmd_sweep2d(const ExperimentConfig& config);
CommandResult cmd_otoc(const ExperimentConfig& config);
CommandResult cmd_dyn_gauge(const ExperimentConfig& config);
CommandResult cmd_calibrate(const ExperimentConfig& config);
CommandResult cmd_selftest(const ExperimentConfig& config);

const std::vector<std::string>& command_names();

// FNV-1a of the resolved config, excluding output location and worker count.
std::string config_hash(const ExperimentConfig& config);

/// Full command-line entry point: argument and config parsing, the command,
/// then file output. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rabigauge::cli
