#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "efcil/accuracy.hpp"
#include "efcil/config.hpp"
#include "efcil/stats.hpp"

namespace efcil {

/// Library version recorded in every output file.
const char* artifact_version();

/// One cell of the grid: a (Data, Train, Incr, scenario, repetition) tuple.
struct RunSpec {
  std::string run_id;
  std::size_t dataset = 0;
  std::size_t strategy = 0;
  std::size_t learner = 0;
  ScenarioKind scenario = ScenarioKind::Equal;
  int rep = 0;
  std::uint64_t seed = 0;  // learner seed
};

/// "<data>__<train>__<incr>__<scenario>__r<rep>".
std::string make_run_id(const std::string& data, const std::string& train, const std::string& incr,
                        ScenarioKind scenario, int rep);

/// base_seed + stable_hash(key): adding or removing grid cells never changes
/// the seed of an existing one.
std::uint64_t derive_seed(std::uint64_t base_seed, const std::string& key);

/// Every combination, sorted by run id.
std::vector<RunSpec> enumerate_runs(const GridConfig& config);

/// The features for a run. Synthetic data depends on (Data, rep) for the
/// mean geometry and on the strategy only through the separation, so all
/// strategies and learners of a repetition share the same draw.
FeatureDataset materialize_dataset(const GridConfig& config, const RunSpec& run);

/// Class order seed, shared by all strategies and learners of (Data, scenario, rep).
std::uint64_t scenario_seed(const GridConfig& config, const RunSpec& run);

/// Defaults, then per-kind config, then the learner's own patch, then every
/// matching override in order.
LearnerParams resolve_params(const GridConfig& config, const RunSpec& run);

struct RunOutcome {
  RunRecord record;
  AccuracyMatrix accuracy;
};

/// Runs one cell end to end; throws on any failure.
RunOutcome execute_run(const GridConfig& config, const RunSpec& run);

struct RunFailure {
  std::string run_id;
  std::string message;
};

struct GridResult {
  std::vector<RunOutcome> runs;       // successes, sorted by run id
  std::vector<RunFailure> failures;   // sorted by run id
};

/// Executes `runs` on `jobs` worker threads (0 means hardware concurrency).
/// Output does not depend on the number of workers or scheduling.
GridResult run_grid(const GridConfig& config, const std::vector<RunSpec>& runs, unsigned jobs);

// ---------------------------------------------------------------------------
// Results table

inline constexpr const char* kResultsHeader =
    "run_id,data,train,incr,scenario_B,N,N1,n_mean,small,width,acc1,avg_acc,forgetting,accK";

struct ResultsTable {
  std::string config_hash;
  std::string version;
  std::vector<RunRecord> records;
};

/// A "# config_hash=<hex> version=<v>" comment line, the header, then one
/// row per record with shortest round-trip number formatting.
std::string format_results_csv(const ResultsTable& table);
ResultsTable parse_results_csv(const std::string& text, const std::string& source = "results");
ResultsTable read_results(const std::filesystem::path& path);

std::string format_failures_csv(const std::string& config_hash, const std::vector<RunFailure>& failures);

/// Quotes a CSV field when it holds a comma, quote or line break.
std::string csv_field(const std::string& value);

}  // namespace efcil
