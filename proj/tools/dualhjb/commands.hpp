#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <dualhjb/diagnostics.hpp>

#include "config.hpp"

namespace dualhjb::app {

struct RunReport {
  std::string command;
  std::uint64_t scenario_hash = 0;
  DiagnosticsReport diagnostics;
  std::vector<std::string> outputs;  // file names relative to the output directory
  std::vector<std::pair<std::string, double>> timings;  // seconds per stage
  bool passed() const { return diagnostics.passed(); }
};

const std::vector<std::string>& subcommand_names();

/// Overrides the seed everywhere it is used, including the canonical form.
void set_seed(ScenarioConfig& cfg, std::uint64_t seed);

/// Runs one subcommand and writes its CSV files, report.json and timings.json
/// into out_dir (created if missing). Throws on engineering errors;
/// mathematical check failures are recorded in the report.
RunReport run_subcommand(const std::string& name, const ScenarioConfig& cfg,
                         const std::string& out_dir);

}  // namespace dualhjb::app
