#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "efcil/dataset.hpp"
#include "efcil/rational.hpp"

namespace efcil {

enum class ScenarioKind {
  Equal,  // K equal steps
  Half,   // half the classes up front, the rest split over the incremental steps
};

std::string to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(const std::string& text);

/// Assignment of classes to K disjoint steps. Each step's ids are sorted.
struct Scenario {
  ScenarioKind kind = ScenarioKind::Equal;
  std::vector<std::vector<ClassId>> steps;
  Fraction b;  // |C_1| / |C|

  std::size_t num_steps() const { return steps.size(); }
  std::size_t num_classes() const;

  /// "K <n>", "b <p/q>" and one "step <k>: ids..." line per step.
  std::string to_text() const;
};

/// Splits `class_ids` after a seeded shuffle. Equal gives n_incr_steps equal
/// steps; Half gives an initial step with half of the classes followed by
/// n_incr_steps equal steps. Sizes must divide exactly.
Scenario build_scenario(std::span<const ClassId> class_ids, ScenarioKind kind, int n_incr_steps,
                        std::uint64_t seed);

/// Row indices into a FeatureDataset for one step of the process.
struct StepView {
  std::size_t step = 0;  // 0-based
  std::vector<ClassId> classes;
  std::vector<std::size_t> train_rows;       // classes of this step only
  std::vector<std::size_t> test_rows;        // test subset D_k
  std::vector<std::size_t> cumulative_test;  // test rows of steps 0..k
};

std::vector<StepView> partition_dataset(const FeatureDataset& ds, const Scenario& sc);

/// Training data handed to a learner for one step. Copies the rows, so a
/// learner never holds a reference into the full dataset.
struct StepBatch {
  std::size_t step = 0;
  Eigen::MatrixXd features;
  std::vector<ClassId> labels;
};

StepBatch make_step_batch(const FeatureDataset& ds, const StepView& view);

}  // namespace efcil
