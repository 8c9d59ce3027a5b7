#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace efcil {

enum class ExitCode : int {
  Ok = 0,
  Config = 1,      // usage, config or input error
  Partial = 2,     // grid completed with failed runs
  Infeasible = 3,  // analysis could not fit any model
};

struct CommandOptions {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 0;  // 0: hardware concurrency
  std::optional<double> alpha;
  bool force_mixed = false;
  /// analyze: one or more results.csv files.
  std::vector<std::filesystem::path> results;
  /// report: the bundle.json written by analyze.
  std::filesystem::path bundle;
  std::string formats = "csv,md,svg";
  /// run: selects a single grid cell; unset fields must be unambiguous.
  std::optional<std::string> data;
  std::optional<std::string> train;
  std::optional<std::string> incr;
  std::optional<std::string> scenario;
  std::optional<int> rep;
};

struct CommandResult {
  ExitCode code = ExitCode::Ok;
  std::string message;  // one-paragraph summary, or the error text
};

/// Writes features/<data>__<train>__r<rep>.csv for every synthetic dataset and
/// dataset_stats.csv.
CommandResult cmd_synth(const CommandOptions& options);
/// Runs one grid cell; writes results.csv, failures.csv and accuracy/.
CommandResult cmd_run(const CommandOptions& options);
/// Runs the whole grid; writes results.csv, failures.csv, accuracy/ and manifest.json.
CommandResult cmd_grid(const CommandOptions& options);
/// Analyzes results files; writes bundle.json and the rendered reports.
CommandResult cmd_analyze(const CommandOptions& options);
/// Re-renders reports from bundle.json.
CommandResult cmd_report(const CommandOptions& options);

}  // namespace efcil
