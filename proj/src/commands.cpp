#include "efcil/commands.hpp"

#include <functional>
#include <set>

#include <json.hpp>

#include "efcil/analysis.hpp"
#include "efcil/error.hpp"
#include "efcil/grid.hpp"
#include "efcil/report.hpp"
#include "efcil/text.hpp"

namespace efcil {

namespace {

using nlohmann::json;

ExitCode exit_code_for(ErrorCode code) {
  return code == ErrorCode::Infeasible ? ExitCode::Infeasible : ExitCode::Config;
}

/// Converts any thrown error into a CommandResult.
CommandResult guarded(const std::function<CommandResult()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    return {exit_code_for(e.code()), e.what()};
  } catch (const std::exception& e) {
    return {ExitCode::Config, e.what()};
  }
}

GridConfig config_from(const CommandOptions& options) {
  if (options.config.empty()) fail(ErrorCode::Config, "--config is required");
  GridConfig config = load_config(options.config);
  if (options.seed) set_base_seed(config, *options.seed);
  if (options.alpha) {
    if (!(*options.alpha > 0.0 && *options.alpha < 1.0)) fail(ErrorCode::Config, "--alpha must be in (0, 1)");
    config.analysis.alpha = *options.alpha;
  }
  return config;
}

void require_out(const CommandOptions& options) {
  if (options.out.empty()) fail(ErrorCode::Config, "--out is required");
}

/// Persists grid outcomes and returns the summary.
CommandResult persist(const GridConfig& config, const std::vector<RunSpec>& runs, const GridResult& result,
                      const std::filesystem::path& out, bool manifest) {
  ResultsTable table{config.hash, artifact_version(), {}};
  for (const auto& r : result.runs) {
    table.records.push_back(r.record);
    write_text_file(out / "accuracy" / (r.record.run_id + ".csv"), r.accuracy.to_csv());
  }
  write_text_file(out / "results.csv", format_results_csv(table));
  write_text_file(out / "failures.csv", format_failures_csv(config.hash, result.failures));
  if (manifest) {
    std::set<std::string> failed;
    for (const auto& f : result.failures) failed.insert(f.run_id);
    json list = json::array();
    for (const auto& run : runs) {
      list.push_back({{"run_id", run.run_id},
                      {"learner_seed", run.seed},
                      {"scenario_seed", scenario_seed(config, run)},
                      {"status", failed.count(run.run_id) > 0 ? "failed" : "ok"}});
    }
    json doc = {{"name", config.name},
                {"config_hash", config.hash},
                {"version", artifact_version()},
                {"base_seed", config.base_seed},
                {"repetitions", config.repetitions},
                {"runs_total", runs.size()},
                {"runs_ok", result.runs.size()},
                {"runs_failed", result.failures.size()},
                {"runs", list}};
    write_text_file(out / "manifest.json", doc.dump(1) + "\n");
  }
  std::string message = std::to_string(result.runs.size()) + " of " + std::to_string(runs.size()) +
                         " runs succeeded; results in " + (out / "results.csv").string();
  for (const auto& f : result.failures) message += "\n  failed " + f.run_id + ": " + f.message;
  return {result.failures.empty() ? ExitCode::Ok : ExitCode::Partial, message};
}

}  // namespace

CommandResult cmd_synth(const CommandOptions& options) {
  return guarded([&] {
    const GridConfig config = config_from(options);
    require_out(options);
    std::string stats = "data,train,rep,N,n_mean,sigma_train,mu_test,sigma_test,small,width\n";
    std::size_t files = 0;
    for (std::size_t d = 0; d < config.datasets.size(); ++d) {
      for (std::size_t s = 0; s < config.strategies.size(); ++s) {
        for (int rep = 0; rep < config.repetitions; ++rep) {
          RunSpec run;
          run.dataset = d;
          run.strategy = s;
          run.rep = rep;
          const FeatureDataset ds = materialize_dataset(config, run);
          const std::string stem = config.datasets[d].name + "__" + config.strategies[s].name + "__r" + std::to_string(rep);
          if (config.datasets[d].synthetic()) {
            save_features(ds, options.out / "features" / (stem + ".csv"));
            ++files;
          }
          const DatasetStats st = dataset_stats(ds);
          stats += config.datasets[d].name + "," + config.strategies[s].name + "," + std::to_string(rep) + "," +
                   std::to_string(st.n_classes) + "," + format_double(st.n_mean) + "," + format_double(st.sigma_train) +
                   "," + format_double(st.mu_test) + "," + format_double(st.sigma_test) + "," +
                   (st.small ? "1" : "0") + "," + format_double(st.width) + "\n";
        }
      }
    }
    write_text_file(options.out / "dataset_stats.csv", stats);
    return CommandResult{ExitCode::Ok, "wrote " + std::to_string(files) + " feature files and dataset_stats.csv to " +
                                           options.out.string()};
  });
}

CommandResult cmd_run(const CommandOptions& options) {
  return guarded([&] {
    const GridConfig config = config_from(options);
    require_out(options);
    std::vector<RunSpec> selected;
    for (const auto& run : enumerate_runs(config)) {
      if (options.data && config.datasets[run.dataset].name != *options.data) continue;
      if (options.train && config.strategies[run.strategy].name != *options.train) continue;
      if (options.incr && config.learners[run.learner].name != *options.incr) continue;
      if (options.scenario && to_string(run.scenario) != to_string(parse_scenario_kind(*options.scenario))) continue;
      if (options.rep && run.rep != *options.rep) continue;
      selected.push_back(run);
    }
    if (selected.size() != 1) {
      fail(ErrorCode::Config, "run: the selection matches " + std::to_string(selected.size()) +
                                  " grid cells; narrow it with --data, --train, --incr, --scenario, --rep");
    }
    return persist(config, selected, run_grid(config, selected, 1), options.out, false);
  });
}

CommandResult cmd_grid(const CommandOptions& options) {
  return guarded([&] {
    const GridConfig config = config_from(options);
    require_out(options);
    const auto runs = enumerate_runs(config);
    return persist(config, runs, run_grid(config, runs, options.jobs), options.out, true);
  });
}

CommandResult cmd_analyze(const CommandOptions& options) {
  return guarded([&] {
    require_out(options);
    if (options.results.empty()) fail(ErrorCode::Config, "analyze: at least one results file is required");
    AnalysisSpec spec;
    if (!options.config.empty()) spec = config_from(options).analysis;
    if (options.alpha) {
      if (!(*options.alpha > 0.0 && *options.alpha < 1.0)) fail(ErrorCode::Config, "--alpha must be in (0, 1)");
      spec.alpha = *options.alpha;
    }

    std::vector<RunRecord> records;
    std::set<std::string> hashes;
    std::set<std::string> ids;
    std::string version;
    for (const auto& path : options.results) {
      ResultsTable t = read_results(path);
      hashes.insert(t.config_hash);
      if (version.empty()) version = t.version;
      for (auto& r : t.records) {
        if (!ids.insert(r.run_id).second) fail(ErrorCode::Config, "analyze: run id '" + r.run_id + "' appears twice");
        records.push_back(std::move(r));
      }
    }
    if (hashes.size() > 1 && !options.force_mixed) {
      std::string list;
      for (const auto& h : hashes) list += (list.empty() ? "" : ", ") + (h.empty() ? std::string("<none>") : h);
      fail(ErrorCode::Config, "analyze: results come from different configs (" + list + "); pass --force-mixed to combine them");
    }
    if (records.empty()) fail(ErrorCode::Infeasible, "analyze: no records");
    std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) { return a.run_id < b.run_id; });

    AnalysisBundle bundle = analyze_records(records, spec);
    bundle.config_hash = hashes.size() == 1 ? *hashes.begin() : "mixed";
    bundle.version = artifact_version();
    const std::string text = bundle_to_json(bundle);
    write_text_file(options.out / "bundle.json", text);
    // Render from the parsed bundle so analyze and report produce the same bytes.
    const auto files = write_reports(bundle_from_json(text), options.out, parse_report_formats(options.formats));
    return CommandResult{ExitCode::Ok, "analyzed " + std::to_string(records.size()) + " runs; wrote bundle.json and " +
                                           std::to_string(files.size()) + " report files to " + options.out.string() +
                                           " (" + std::to_string(bundle.warnings.size()) + " warnings)"};
  });
}

CommandResult cmd_report(const CommandOptions& options) {
  return guarded([&] {
    require_out(options);
    if (options.bundle.empty()) fail(ErrorCode::Config, "report: --bundle is required");
    const AnalysisBundle bundle = bundle_from_json(read_text_file(options.bundle));
    const auto files = write_reports(bundle, options.out, parse_report_formats(options.formats));
    return CommandResult{ExitCode::Ok, "wrote " + std::to_string(files.size()) + " report files to " + options.out.string()};
  });
}

}  // namespace efcil
