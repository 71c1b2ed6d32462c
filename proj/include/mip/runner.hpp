#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mip/scenario.hpp"

namespace mip {

inline constexpr const char* kToolVersion = "1.0.0";

// Flag surface shared by the shared-library entry point and the CLI.
// Sentinels mean "not set": budget <= 0, seed < 0, tol <= 0, fd_step <= 0,
// empty radii. Unset values fall back to the scenario file or the module
// defaults.
struct RunFlags {
  std::string scenario_path;
  std::int64_t budget = 0;
  std::int64_t seed = -1;
  double tol = 0.0;
  int workers = 1;
  std::vector<double> radii;
  double fd_step = 0.0;
};

struct TableArtifact {
  std::string filename;  // e.g. "trajectory.tsv"
  std::string content;   // tab-delimited, header row first
};

// Everything a run produces, in memory: exit code per the contract
// (0 success/pass, 2 certificate fail, 3 optimizer non-convergence; input
// errors throw and map to 1), the structured report, and the flat tables.
struct RunReport {
  std::string command;
  int exit_code = 0;
  std::string report_json;
  std::vector<TableArtifact> tables;
  std::string summary;
};

// command is one of optimize | certify | gradcheck | scan | mu-john |
// validate. Throws Error on input problems; never calls exit.
RunReport run_command(const std::string& command, const RunFlags& flags);

// Writes report.json and every table into out_dir, creating it if needed.
void write_artifacts(const RunReport& report, const std::string& out_dir);

}  // namespace mip
