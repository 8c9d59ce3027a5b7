#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "efcil/dataset.hpp"
#include "efcil/learners.hpp"
#include "efcil/scenario.hpp"

namespace efcil {

struct DatasetSpec {
  std::string name;
  /// Synthetic when `file` is empty; n_classes/dim/n_train/n_test/anisotropy
  /// come from here and the separation from the strategy.
  SynthSpec synth;
  std::filesystem::path file;
  double separation_scale = 1.0;
  std::optional<int> small;
  std::optional<double> width;

  bool synthetic() const { return file.empty(); }
};

struct StrategySpec {
  std::string name;
  double separation = 3.0;
  /// Dataset name -> embedding file produced by this strategy.
  std::map<std::string, std::filesystem::path> embeddings;
};

/// A patch of hyperparameters as key/value pairs, e.g. {"anchor_weight": 0}.
using HyperPatch = std::map<std::string, double>;

struct LearnerSpec {
  std::string name;  // level of the Incr factor
  LearnerKind kind = LearnerKind::Ncm;
  HyperPatch hyperparams;
};

/// Applies `hyperparams` to every run whose factors match all given fields.
struct RunOverride {
  std::optional<std::string> data;
  std::optional<std::string> train;
  std::optional<std::string> incr;
  std::optional<std::string> scenario;
  std::optional<int> rep;
  HyperPatch hyperparams;
};

struct PairwiseSpec {
  std::string factor = "Train";
  std::string formula = "avg_acc ~ Incr + Train + Data";
  /// Variables to split the records by before refitting.
  std::vector<std::string> splits = {"Data", "Incr", "B"};
};

struct AnalysisSpec {
  double alpha = 0.05;
  std::vector<std::string> screening_responses = {"avg_acc", "forgetting"};
  std::vector<std::string> screening_candidates = {"Acc1", "Train", "Data", "Incr", "n_mean",
                                                   "Small", "Width", "B", "N", "N1"};
  /// Candidate formulas per response; the AIC winner gets diagnostics.
  std::vector<std::vector<std::string>> ladders = {
      {"avg_acc ~ Incr", "avg_acc ~ Incr + Train", "avg_acc ~ Incr + Train + Data",
       "avg_acc ~ Incr + Train + Data + B", "avg_acc ~ Acc1 + Incr + Train + Data"},
      {"forgetting ~ Incr", "forgetting ~ Incr + Train", "forgetting ~ Incr + Train + Data",
       "forgetting ~ Incr + Train + Data + B", "forgetting ~ Acc1 + Incr + Train + Data"},
  };
  std::vector<std::string> anova = {"avg_acc ~ Incr + Train + Data", "avg_acc ~ Acc1 + Incr + Train + Data",
                                    "forgetting ~ Incr + Train + Data", "forgetting ~ Acc1 + Incr + Train + Data"};
  std::vector<PairwiseSpec> pairwise = {PairwiseSpec{}};
  double gram_threshold = 1e-8;
};

struct GridConfig {
  std::string name = "grid";
  std::uint64_t base_seed = 0;
  int repetitions = 1;
  int n_incr_steps = 10;
  std::vector<ScenarioKind> scenarios;
  std::vector<DatasetSpec> datasets;
  std::vector<StrategySpec> strategies;
  std::vector<LearnerSpec> learners;
  /// Per-kind defaults, keyed by learner kind name.
  std::map<std::string, HyperPatch> hyperparams;
  std::vector<RunOverride> overrides;
  AnalysisSpec analysis;

  /// Canonical JSON of the parsed document and its 64-bit hash in hex.
  std::string canonical;
  std::string hash;
};

/// Parses a config document. Relative file paths resolve against
/// `base_dir`. Throws Error(Config) with the offending field path.
GridConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
GridConfig load_config(const std::filesystem::path& path);

/// Replaces the base seed and refreshes the hash.
void set_base_seed(GridConfig& config, std::uint64_t seed);

/// Writes `patch` into `params` for the fields used by `kind`. Unknown
/// keys are rejected with Error(Config).
void apply_hyperparams(LearnerParams& params, LearnerKind kind, const HyperPatch& patch);

}  // namespace efcil
