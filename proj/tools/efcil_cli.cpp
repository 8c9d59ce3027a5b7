// Command-line front end. Links only the C interface of libefcil.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "efcil/efcil.h"

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 0;
  std::optional<double> alpha;
  bool force_mixed = false;
  std::vector<std::string> results;
  std::string bundle;
  std::string formats = "csv,md,svg";
  std::optional<std::string> data;
  std::optional<std::string> train;
  std::optional<std::string> incr;
  std::optional<std::string> scenario;
  std::optional<int> rep;
};

efcil_command_options to_options(const Flags& f, std::vector<const char*>& results) {
  efcil_command_options o;
  efcil_command_options_init(&o);
  o.config = f.config.empty() ? nullptr : f.config.c_str();
  o.out = f.out.empty() ? nullptr : f.out.c_str();
  o.has_seed = f.seed.has_value();
  o.seed = f.seed.value_or(0);
  o.jobs = f.jobs;
  o.has_alpha = f.alpha.has_value();
  o.alpha = f.alpha.value_or(0.05);
  o.force_mixed = f.force_mixed ? 1 : 0;
  results.clear();
  for (const auto& r : f.results) results.push_back(r.c_str());
  o.results = results.data();
  o.n_results = results.size();
  o.bundle = f.bundle.empty() ? nullptr : f.bundle.c_str();
  o.formats = f.formats.c_str();
  o.data = f.data ? f.data->c_str() : nullptr;
  o.train = f.train ? f.train->c_str() : nullptr;
  o.incr = f.incr ? f.incr->c_str() : nullptr;
  o.scenario = f.scenario ? f.scenario->c_str() : nullptr;
  o.has_rep = f.rep.has_value();
  o.rep = f.rep.value_or(0);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exemplar-free class-incremental learning laboratory and analysis engine"};
  app.set_version_flag("--version", std::string(efcil_version()));
  app.require_subcommand(1);
  Flags f;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", f.config, "Grid config document (JSON)");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", f.out, "Output directory")->required();
  };

  auto* synth = app.add_subcommand("synth", "Write the synthetic feature files of a config");
  add_common(synth, true);
  synth->add_option("--seed", f.seed, "Override the config base seed");

  auto* run = app.add_subcommand("run", "Run a single grid cell");
  add_common(run, true);
  run->add_option("--seed", f.seed, "Override the config base seed");
  run->add_option("--data", f.data, "Data level");
  run->add_option("--train", f.train, "Train (strategy) level");
  run->add_option("--incr", f.incr, "Incr (learner) level");
  run->add_option("--scenario", f.scenario, "equal or half");
  run->add_option("--rep", f.rep, "Repetition index");

  auto* grid = app.add_subcommand("grid", "Run every combination of the config");
  add_common(grid, true);
  grid->add_option("--seed", f.seed, "Override the config base seed");
  grid->add_option("--jobs", f.jobs, "Worker threads (default: logical cores)");

  auto* analyze = app.add_subcommand("analyze", "Analyze results files and write the report bundle");
  add_common(analyze, false);
  analyze->add_option("--results", f.results, "results.csv files")->required()->check(CLI::ExistingFile);
  analyze->add_option("--alpha", f.alpha, "Significance level (default 0.05)");
  analyze->add_flag("--force-mixed", f.force_mixed, "Combine results produced by different configs");
  analyze->add_option("--formats", f.formats, "Report formats, e.g. csv,md,svg");

  auto* report = app.add_subcommand("report", "Render reports from a bundle");
  report->add_option("--bundle", f.bundle, "bundle.json written by analyze")->required()->check(CLI::ExistingFile);
  report->add_option("--out", f.out, "Output directory")->required();
  report->add_option("--formats", f.formats, "Report formats, e.g. csv,md,svg");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  std::vector<const char*> results;
  const efcil_command_options options = to_options(f, results);
  int code = 1;
  if (synth->parsed()) code = efcil_cmd_synth(&options);
  if (run->parsed()) code = efcil_cmd_run(&options);
  if (grid->parsed()) code = efcil_cmd_grid(&options);
  if (analyze->parsed()) code = efcil_cmd_analyze(&options);
  if (report->parsed()) code = efcil_cmd_report(&options);
  (code == 0 ? std::cout : std::cerr) << efcil_last_message() << "\n";
  return code;
}
