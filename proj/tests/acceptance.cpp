// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
// when any of them fails.
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "criteria.hpp"
#include "efcil/commands.hpp"
#include "efcil/grid.hpp"
#include "efcil/metrics.hpp"
#include "efcil/stats.hpp"

namespace fs = std::filesystem;
using criteria::Outcome;

namespace {

const fs::path kDefaultConfig = fs::path(EFCIL_SOURCE_DIR) / "configs" / "default_grid.json";

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

/// Relative path -> contents for every regular file below `root`.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) files[fs::relative(entry.path(), root).generic_string()] = read_bytes(entry.path());
  }
  return files;
}

struct GridRun {
  fs::path grid_dir;
  fs::path analysis_dir;
  double grid_seconds = 0.0;
  efcil::CommandResult grid;
  efcil::CommandResult analysis;
};

GridRun run_default_grid(const fs::path& work) {
  fs::remove_all(work);
  GridRun run;
  run.grid_dir = work / "grid";
  run.analysis_dir = work / "analysis";

  efcil::CommandOptions grid;
  grid.config = kDefaultConfig;
  grid.out = run.grid_dir;
  const auto start = std::chrono::steady_clock::now();
  run.grid = efcil::cmd_grid(grid);
  run.grid_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  efcil::CommandOptions analyze;
  analyze.results = {run.grid_dir / "results.csv"};
  analyze.out = run.analysis_dir;
  if (run.grid.code == efcil::ExitCode::Ok) run.analysis = efcil::cmd_analyze(analyze);
  return run;
}

Outcome table2_ordering(const GridRun& run, const std::vector<efcil::RunRecord>& records) {
  if (run.grid.code != efcil::ExitCode::Ok) return {false, "grid failed: " + run.grid.message};
  if (run.analysis.code != efcil::ExitCode::Ok) return {false, "analysis failed: " + run.analysis.message};
  std::ostringstream detail;
  bool pass = records.size() == 216 && run.grid_seconds < 120.0;
  detail << records.size() << " runs in " << run.grid_seconds << " s";

  const auto table = efcil::anova_partial_eta2(records, efcil::parse_formula("forgetting ~ Incr + Train + Data"));
  const auto ranked = table.ranked();
  pass = pass && !ranked.empty() && ranked.front().term == "Incr";
  detail << "; partial eta2 ranking:";
  for (const auto& row : ranked) detail << " " << row.term << "=" << criteria::sci(row.partial_eta2);

  std::map<std::string, std::pair<double, std::size_t>> by_learner;
  for (const auto& r : records) {
    auto& [sum, n] = by_learner[r.incr];
    sum += r.forgetting;
    ++n;
  }
  auto mean_f = [&](const std::string& learner) {
    const auto it = by_learner.find(learner);
    return it == by_learner.end() || it->second.second == 0 ? -1.0 : it->second.first / it->second.second;
  };
  const double bsil = mean_f("bsil");
  pass = pass && bsil >= 0.0;
  detail << "; mean F:";
  for (const char* frozen : {"dslda", "fetril", "ncm"}) {
    const double f = mean_f(frozen);
    pass = pass && f >= 0.0 && f < bsil;
    detail << " " << frozen << "=" << criteria::sci(f);
  }
  detail << " bsil=" << criteria::sci(bsil);
  return {pass, detail.str()};
}

Outcome correlation_sign(const std::vector<efcil::RunRecord>& records) {
  std::vector<double> avg, last;
  for (const auto& r : records) {
    avg.push_back(r.avg_acc);
    last.push_back(r.acc_k);
  }
  const auto r = efcil::pearson(avg, last);
  if (!r) return {false, "correlation undefined (constant column)"};
  return {*r > 0.0, "corr(avg_acc, accK) = " + criteria::sci(*r) + " over " + std::to_string(records.size()) + " runs"};
}

Outcome determinism(const GridRun& first, const GridRun& second) {
  if (second.grid.code != efcil::ExitCode::Ok || second.analysis.code != efcil::ExitCode::Ok) {
    return {false, "second run failed: " + second.grid.message + " " + second.analysis.message};
  }
  const auto a = tree(first.grid_dir);
  const auto b = tree(second.grid_dir);
  const auto c = tree(first.analysis_dir);
  const auto d = tree(second.analysis_dir);
  std::vector<std::string> differing;
  auto compare = [&](const std::map<std::string, std::string>& x, const std::map<std::string, std::string>& y,
                     const std::string& prefix) {
    for (const auto& [name, bytes] : x) {
      const auto it = y.find(name);
      if (it == y.end() || it->second != bytes) differing.push_back(prefix + name);
    }
    for (const auto& [name, bytes] : y) {
      if (!x.contains(name)) differing.push_back(prefix + name);
    }
  };
  compare(a, b, "grid/");
  compare(c, d, "analysis/");
  if (!a.contains("results.csv")) differing.push_back("grid/results.csv (missing)");
  if (!c.contains("report.md")) differing.push_back("analysis/report.md (missing)");
  if (!differing.empty()) return {false, std::to_string(differing.size()) + " file(s) differ, first " + differing.front()};
  return {true, std::to_string(a.size() + c.size()) + " files byte-identical across two runs"};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const Outcome& o) {
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << o.detail << std::endl;
    if (!o.pass) ++failed;
  };

  report(1, criteria::metrics_oracle());
  report(2, criteria::zero_forgetting());
  report(3, criteria::ols_oracle());
  report(4, criteria::reference_invariance());
  report(5, criteria::anova_identity());
  report(6, criteria::dslda_streaming());
  report(7, criteria::bsil_gradients());

  const fs::path work = fs::temp_directory_path() / "efcil_acceptance";
  const GridRun first = run_default_grid(work / "first");
  std::vector<efcil::RunRecord> records;
  if (first.grid.code == efcil::ExitCode::Ok) records = efcil::read_results(first.grid_dir / "results.csv").records;
  report(8, table2_ordering(first, records));
  report(9, records.empty() ? Outcome{false, "no results"} : correlation_sign(records));
  const GridRun second = run_default_grid(work / "second");
  report(10, determinism(first, second));

  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
