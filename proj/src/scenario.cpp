#include "efcil/scenario.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "efcil/error.hpp"
#include "efcil/random.hpp"

namespace efcil {

std::string to_string(ScenarioKind kind) { return kind == ScenarioKind::Equal ? "equal" : "half"; }

ScenarioKind parse_scenario_kind(const std::string& text) {
  if (text == "equal") return ScenarioKind::Equal;
  if (text == "half") return ScenarioKind::Half;
  fail(ErrorCode::InvalidArgument, "unknown scenario kind '" + text + "' (expected equal or half)");
}

std::size_t Scenario::num_classes() const {
  std::size_t n = 0;
  for (const auto& s : steps) n += s.size();
  return n;
}

std::string Scenario::to_text() const {
  std::string out = "scenario " + to_string(kind) + "\n";
  out += "K " + std::to_string(steps.size()) + "\n";
  out += "b " + b.to_string() + "\n";
  for (std::size_t k = 0; k < steps.size(); ++k) {
    out += "step " + std::to_string(k + 1) + ":";
    for (const ClassId c : steps[k]) out += " " + std::to_string(c);
    out += "\n";
  }
  return out;
}

Scenario build_scenario(std::span<const ClassId> class_ids, ScenarioKind kind, int n_incr_steps,
                        std::uint64_t seed) {
  if (class_ids.empty()) fail(ErrorCode::InvalidArgument, "build_scenario: empty class list");
  if (n_incr_steps < 1) fail(ErrorCode::InvalidArgument, "build_scenario: n_incr_steps must be >= 1");
  {
    std::set<ClassId> unique(class_ids.begin(), class_ids.end());
    if (unique.size() != class_ids.size()) fail(ErrorCode::InvalidArgument, "build_scenario: duplicate class ids");
  }
  const std::size_t n = class_ids.size();
  const auto steps_u = static_cast<std::size_t>(n_incr_steps);

  std::vector<std::size_t> sizes;
  if (kind == ScenarioKind::Equal) {
    if (n % steps_u != 0) {
      fail(ErrorCode::InvalidArgument, "build_scenario: " + std::to_string(n) + " classes are not divisible into " +
                                           std::to_string(n_incr_steps) + " equal steps");
    }
    sizes.assign(steps_u, n / steps_u);
  } else {
    if (n % 2 != 0) {
      fail(ErrorCode::InvalidArgument,
           "build_scenario: half scenario needs an even class count, got " + std::to_string(n));
    }
    const std::size_t rest = n / 2;
    if (rest % steps_u != 0) {
      fail(ErrorCode::InvalidArgument, "build_scenario: second half of " + std::to_string(rest) +
                                           " classes is not divisible into " + std::to_string(n_incr_steps) +
                                           " steps");
    }
    sizes.push_back(n / 2);
    sizes.insert(sizes.end(), steps_u, rest / steps_u);
  }

  std::vector<ClassId> order(class_ids.begin(), class_ids.end());
  Rng rng(seed);
  rng.shuffle(order);

  Scenario sc;
  sc.kind = kind;
  std::size_t offset = 0;
  for (const std::size_t size : sizes) {
    std::vector<ClassId> step(order.begin() + static_cast<std::ptrdiff_t>(offset),
                              order.begin() + static_cast<std::ptrdiff_t>(offset + size));
    std::sort(step.begin(), step.end());
    sc.steps.push_back(std::move(step));
    offset += size;
  }
  sc.b = Fraction(static_cast<std::int64_t>(sizes.front()), static_cast<std::int64_t>(n));
  return sc;
}

std::vector<StepView> partition_dataset(const FeatureDataset& ds, const Scenario& sc) {
  std::map<ClassId, std::size_t> step_of;
  for (std::size_t k = 0; k < sc.steps.size(); ++k) {
    for (const ClassId c : sc.steps[k]) step_of[c] = k;
  }

  std::map<ClassId, std::pair<bool, bool>> present;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto& p = present[ds.labels[i]];
    (ds.splits[i] == Split::Train ? p.first : p.second) = true;
  }
  std::vector<ClassId> missing;
  for (const auto& [c, k] : step_of) {
    auto it = present.find(c);
    if (it == present.end() || !it->second.first || !it->second.second) missing.push_back(c);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size(); ++i) list += (i ? ", " : "") + std::to_string(missing[i]);
    fail(ErrorCode::InvalidArgument, "missing classes: [" + list + "]");
  }

  std::vector<StepView> views(sc.steps.size());
  for (std::size_t k = 0; k < views.size(); ++k) {
    views[k].step = k;
    views[k].classes = sc.steps[k];
  }
  // Rows are visited in index order, so every list comes out sorted.
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto it = step_of.find(ds.labels[i]);
    if (it == step_of.end()) continue;
    auto& view = views[it->second];
    (ds.splits[i] == Split::Train ? view.train_rows : view.test_rows).push_back(i);
  }
  std::vector<std::size_t> cumulative;
  for (auto& view : views) {
    std::vector<std::size_t> merged;
    std::merge(cumulative.begin(), cumulative.end(), view.test_rows.begin(), view.test_rows.end(),
               std::back_inserter(merged));
    cumulative = std::move(merged);
    view.cumulative_test = cumulative;
  }
  return views;
}

StepBatch make_step_batch(const FeatureDataset& ds, const StepView& view) {
  StepBatch batch;
  batch.step = view.step;
  batch.features.resize(static_cast<Eigen::Index>(view.train_rows.size()), ds.features.cols());
  batch.labels.reserve(view.train_rows.size());
  for (std::size_t r = 0; r < view.train_rows.size(); ++r) {
    batch.features.row(static_cast<Eigen::Index>(r)) = ds.features.row(static_cast<Eigen::Index>(view.train_rows[r]));
    batch.labels.push_back(ds.labels[view.train_rows[r]]);
  }
  return batch;
}

}  // namespace efcil
