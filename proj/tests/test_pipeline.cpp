#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "efcil/analysis.hpp"
#include "efcil/commands.hpp"
#include "efcil/config.hpp"
#include "efcil/error.hpp"
#include "efcil/grid.hpp"
#include "efcil/text.hpp"

using namespace efcil;
namespace fs = std::filesystem;

namespace {

const fs::path kToyConfig = fs::path(EFCIL_SOURCE_DIR) / "tests" / "data" / "toy_grid.json";

std::string toy_text() { return read_text_file(kToyConfig); }

/// The toy grid with one cell forced to an invalid learning rate.
std::string toy_with_failure() {
  auto doc = nlohmann::json::parse(toy_text());
  doc["overrides"] = nlohmann::json::array(
      {{{"data", "toy-a"}, {"train", "weak"}, {"incr", "fetril"}, {"scenario", "half"}, {"hyperparams", {{"learning_rate", -1}}}}});
  return doc.dump(2);
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "efcil_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_text_file(e.path());
  }
  return out;
}

void expect_config_error(const std::string& text, const std::string& fragment) {
  try {
    parse_config(text);
    FAIL("expected a config error for " << fragment);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
    INFO(std::string(e.what()));
    CHECK(std::string(e.what()).find(fragment) != std::string::npos);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

TEST_CASE("the toy config parses and enumerates 36 sorted runs") {
  const GridConfig c = parse_config(toy_text());
  const auto runs = enumerate_runs(c);
  CHECK(runs.size() == 36);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    ids.insert(runs[i].run_id);
    if (i > 0) CHECK(runs[i - 1].run_id < runs[i].run_id);
  }
  CHECK(ids.size() == 36);
  CHECK(c.hash.size() == 16);
}

TEST_CASE("the shipped default grid has 216 runs") {
  const GridConfig c = load_config(fs::path(EFCIL_SOURCE_DIR) / "configs" / "default_grid.json");
  CHECK(enumerate_runs(c).size() == 3 * 3 * 4 * 2 * 3);
}

TEST_CASE("the config hash ignores layout and key order but not values") {
  const GridConfig a = parse_config(toy_text());
  const GridConfig b = parse_config(nlohmann::json::parse(toy_text()).dump());
  CHECK(a.hash == b.hash);
  auto doc = nlohmann::json::parse(toy_text());
  doc["base_seed"] = 8;
  CHECK(parse_config(doc.dump()).hash != a.hash);
  GridConfig reseeded = a;
  set_base_seed(reseeded, 8);
  CHECK(reseeded.hash == parse_config(doc.dump()).hash);
}

TEST_CASE("config errors name the offending field") {
  auto doc = nlohmann::json::parse(toy_text());
  doc["colour"] = "blue";
  expect_config_error(doc.dump(), "colour");

  doc = nlohmann::json::parse(toy_text());
  doc["datasets"][0]["name"] = "bad__name";
  expect_config_error(doc.dump(), "datasets[0]");

  doc = nlohmann::json::parse(toy_text());
  doc["hyperparams"]["fetril"]["momentum"] = 0.9;
  expect_config_error(doc.dump(), "momentum");

  doc = nlohmann::json::parse(toy_text());
  doc.erase("learners");
  expect_config_error(doc.dump(), "learners");

  doc = nlohmann::json::parse(toy_text());
  doc["overrides"] = nlohmann::json::array({{{"incr", "svm"}, {"hyperparams", nlohmann::json::object()}}});
  expect_config_error(doc.dump(), "overrides[0].incr");

  expect_config_error("{not json", "");
}

TEST_CASE("hyperparameters resolve from defaults, kind, learner and overrides") {
  const GridConfig c = parse_config(toy_with_failure());
  for (const auto& run : enumerate_runs(c)) {
    const LearnerParams p = resolve_params(c, run);
    if (c.learners[run.learner].kind != LearnerKind::Fetril) continue;
    CHECK(p.fetril.epochs == 60);
    const bool target = run.run_id == "toy-a__weak__fetril__half__r0";
    CHECK((p.fetril.learning_rate == -1.0) == target);
  }
}

TEST_CASE("seeds of a cell do not depend on the rest of the grid") {
  const GridConfig small = parse_config(toy_text());
  auto doc = nlohmann::json::parse(toy_text());
  doc["datasets"].push_back({{"name", "toy-c"}, {"n_classes", 10}, {"dim", 4}, {"n_train", 5}, {"n_test", 5}});
  doc["learners"].push_back("bsil");
  const GridConfig big = parse_config(doc.dump());
  std::map<std::string, RunSpec> before;
  for (const auto& r : enumerate_runs(small)) before[r.run_id] = r;
  std::size_t shared = 0;
  for (const auto& r : enumerate_runs(big)) {
    const auto it = before.find(r.run_id);
    if (it == before.end()) continue;
    ++shared;
    CHECK(it->second.seed == r.seed);
    CHECK(scenario_seed(small, it->second) == scenario_seed(big, r));
    if (shared % 9 == 1) {
      CHECK(format_features(materialize_dataset(small, it->second)) == format_features(materialize_dataset(big, r)));
    }
  }
  CHECK(shared == 36);
}

// ---------------------------------------------------------------------------
// Grid execution

TEST_CASE("one invalid cell fails alone and the grid reports a partial result") {
  const GridConfig c = parse_config(toy_with_failure());
  const GridResult result = run_grid(c, enumerate_runs(c), 2);
  CHECK(result.runs.size() == 35);
  REQUIRE(result.failures.size() == 1);
  CHECK(result.failures.front().run_id == "toy-a__weak__fetril__half__r0");
  CHECK(result.failures.front().message.find("learning_rate") != std::string::npos);

  const fs::path dir = scratch("partial");
  write_text_file(dir / "grid.json", toy_with_failure());
  CommandOptions o;
  o.config = dir / "grid.json";
  o.out = dir / "out";
  o.jobs = 2;
  const CommandResult r = cmd_grid(o);
  CHECK(r.code == ExitCode::Partial);
  const ResultsTable table = read_results(dir / "out" / "results.csv");
  CHECK(table.records.size() == 35);
  const std::string failures = read_text_file(dir / "out" / "failures.csv");
  CHECK(std::count(failures.begin(), failures.end(), '\n') == 3);  // hash comment, header, one row
}

TEST_CASE("grid output is byte identical across reruns and worker counts") {
  const fs::path dir = scratch("determinism");
  CommandOptions o;
  o.config = kToyConfig;
  o.out = dir / "a";
  o.jobs = 1;
  REQUIRE(cmd_grid(o).code == ExitCode::Ok);
  o.out = dir / "b";
  o.jobs = 4;
  REQUIRE(cmd_grid(o).code == ExitCode::Ok);
  CHECK(tree_bytes(dir / "a") == tree_bytes(dir / "b"));
}

TEST_CASE("results tables round-trip") {
  const GridConfig c = parse_config(toy_text());
  auto runs = enumerate_runs(c);
  runs.resize(4);
  const GridResult result = run_grid(c, runs, 1);
  ResultsTable t{c.hash, artifact_version(), {}};
  for (const auto& r : result.runs) t.records.push_back(r.record);
  const std::string text = format_results_csv(t);
  const ResultsTable back = parse_results_csv(text);
  CHECK(back.config_hash == c.hash);
  CHECK(back.version == artifact_version());
  REQUIRE(back.records.size() == 4);
  CHECK(format_results_csv(back) == text);
  CHECK(text.find(kResultsHeader) != std::string::npos);
  CHECK_THROWS_AS(parse_results_csv("run_id,data\nx,y\n"), Error);
}

TEST_CASE("records carry the scenario and dataset descriptors") {
  const GridConfig c = parse_config(toy_text());
  for (const auto& run : enumerate_runs(c)) {
    if (run.run_id != "toy-b__medium__ncm__half__r0" && run.run_id != "toy-a__medium__ncm__equal__r0") continue;
    const RunOutcome o = execute_run(c, run);
    const bool half = run.scenario == ScenarioKind::Half;
    CHECK(o.record.scenario_b == (half ? 1 : 0));
    CHECK(o.record.n_classes == 10);
    const double per_class = run.dataset == 0 ? 12.0 : 8.0;
    CHECK(o.record.n_mean == per_class);
    CHECK(o.record.n1 == per_class * (half ? 5.0 : 2.0));
    CHECK(o.record.small == (run.dataset == 1 ? 1 : 0));
    CHECK(o.record.acc1 == o.accuracy.at(0, 0));
  }
}

TEST_CASE("run and synth commands") {
  const fs::path dir = scratch("commands");
  CommandOptions o;
  o.config = kToyConfig;
  o.out = dir / "one";
  o.data = "toy-a";
  o.train = "strong";
  o.incr = "ncm";
  o.scenario = "equal";
  o.rep = 0;
  CHECK(cmd_run(o).code == ExitCode::Ok);
  CHECK(read_results(dir / "one" / "results.csv").records.size() == 1);
  o.scenario.reset();
  CHECK(cmd_run(o).code == ExitCode::Config);

  CommandOptions s;
  s.config = kToyConfig;
  s.out = dir / "synth";
  CHECK(cmd_synth(s).code == ExitCode::Ok);
  CHECK(fs::exists(dir / "synth" / "features" / "toy-b__weak__r0.csv"));
  const FeatureDataset ds = load_features(dir / "synth" / "features" / "toy-b__weak__r0.csv");
  CHECK(ds.classes().size() == 10);
  CHECK(read_text_file(dir / "synth" / "dataset_stats.csv").find("toy-b,weak,0,10,8,") != std::string::npos);

  CommandOptions missing;
  missing.config = dir / "absent.json";
  missing.out = dir / "x";
  CHECK(cmd_grid(missing).code == ExitCode::Config);
}

// ---------------------------------------------------------------------------
// Analysis

TEST_CASE("analysis of the toy grid is fast and re-renders identically") {
  const fs::path dir = scratch("analysis");
  CommandOptions g;
  g.config = kToyConfig;
  g.out = dir / "grid";
  REQUIRE(cmd_grid(g).code == ExitCode::Ok);

  CommandOptions a;
  a.results = {dir / "grid" / "results.csv"};
  a.out = dir / "analysis";
  const auto start = std::chrono::steady_clock::now();
  const CommandResult r = cmd_analyze(a);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  INFO(r.message);
  REQUIRE(r.code == ExitCode::Ok);
  CHECK(seconds < 1.0);

  const std::string text = read_text_file(dir / "analysis" / "bundle.json");
  CHECK(bundle_to_json(bundle_from_json(text)) == text);

  CommandOptions rep;
  rep.bundle = dir / "analysis" / "bundle.json";
  rep.out = dir / "rerendered";
  REQUIRE(cmd_report(rep).code == ExitCode::Ok);
  auto analyzed = tree_bytes(dir / "analysis");
  analyzed.erase("bundle.json");
  CHECK(analyzed == tree_bytes(dir / "rerendered"));
}

TEST_CASE("results from different configs are only combined on request") {
  const fs::path dir = scratch("mixed");
  CommandOptions g;
  g.config = kToyConfig;
  g.out = dir / "a";
  REQUIRE(cmd_grid(g).code == ExitCode::Ok);
  g.seed = 99;
  g.out = dir / "b";
  REQUIRE(cmd_grid(g).code == ExitCode::Ok);

  // Same run ids in both files, so give the second set distinct ids.
  ResultsTable second = read_results(dir / "b" / "results.csv");
  for (auto& rec : second.records) rec.run_id += "_seed99";
  write_text_file(dir / "b" / "results.csv", format_results_csv(second));

  CommandOptions a;
  a.results = {dir / "a" / "results.csv", dir / "b" / "results.csv"};
  a.out = dir / "analysis";
  const CommandResult refused = cmd_analyze(a);
  CHECK(refused.code == ExitCode::Config);
  CHECK(refused.message.find("--force-mixed") != std::string::npos);
  a.force_mixed = true;
  CHECK(cmd_analyze(a).code == ExitCode::Ok);
  CHECK(read_text_file(dir / "analysis" / "bundle.json").find("\"mixed\"") != std::string::npos);

  a.results = {dir / "a" / "results.csv", dir / "a" / "results.csv"};
  CHECK(cmd_analyze(a).code == ExitCode::Config);
}

TEST_CASE("a constant response is skipped while the other models still run") {
  const GridConfig c = parse_config(toy_text());
  const GridResult result = run_grid(c, enumerate_runs(c), 1);
  std::vector<RunRecord> records;
  for (const auto& r : result.runs) {
    records.push_back(r.record);
    records.back().forgetting = 0.125;
  }
  const AnalysisBundle b = analyze_records(records, AnalysisSpec{});
  bool forgetting_warned = false;
  for (const auto& w : b.warnings) forgetting_warned = forgetting_warned || w.reason.find("zero variance") != std::string::npos;
  CHECK(forgetting_warned);
  REQUIRE_FALSE(b.models.empty());
  for (const auto& m : b.models) CHECK(m.formula.rfind("avg_acc", 0) == 0);
  CHECK(b.models.size() == 2);
}

TEST_CASE("analysis fails cleanly when nothing can be fitted") {
  std::vector<RunRecord> records(3);
  for (std::size_t i = 0; i < 3; ++i) {
    records[i].run_id = "r" + std::to_string(i);
    records[i].train = "t";
    records[i].incr = "i";
    records[i].data = "d";
  }
  try {
    analyze_records(records, AnalysisSpec{});
    FAIL("expected an infeasible analysis");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Infeasible);
  }
}
