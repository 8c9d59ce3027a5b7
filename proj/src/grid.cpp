#include "efcil/grid.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

#include "efcil/error.hpp"
#include "efcil/metrics.hpp"
#include "efcil/random.hpp"
#include "efcil/text.hpp"

namespace efcil {

const char* artifact_version() { return EFCIL_VERSION_STRING; }

std::string make_run_id(const std::string& data, const std::string& train, const std::string& incr,
                        ScenarioKind scenario, int rep) {
  return data + "__" + train + "__" + incr + "__" + to_string(scenario) + "__r" + std::to_string(rep);
}

std::uint64_t derive_seed(std::uint64_t base_seed, const std::string& key) { return base_seed + stable_hash(key); }

std::vector<RunSpec> enumerate_runs(const GridConfig& config) {
  std::vector<RunSpec> runs;
  for (std::size_t d = 0; d < config.datasets.size(); ++d) {
    for (std::size_t s = 0; s < config.strategies.size(); ++s) {
      for (std::size_t l = 0; l < config.learners.size(); ++l) {
        for (const ScenarioKind kind : config.scenarios) {
          for (int rep = 0; rep < config.repetitions; ++rep) {
            RunSpec run;
            run.dataset = d;
            run.strategy = s;
            run.learner = l;
            run.scenario = kind;
            run.rep = rep;
            run.run_id = make_run_id(config.datasets[d].name, config.strategies[s].name, config.learners[l].name,
                                     kind, rep);
            run.seed = derive_seed(config.base_seed, "learner|" + run.run_id);
            runs.push_back(std::move(run));
          }
        }
      }
    }
  }
  std::sort(runs.begin(), runs.end(), [](const RunSpec& a, const RunSpec& b) { return a.run_id < b.run_id; });
  return runs;
}

FeatureDataset materialize_dataset(const GridConfig& config, const RunSpec& run) {
  const DatasetSpec& spec = config.datasets.at(run.dataset);
  const StrategySpec& strategy = config.strategies.at(run.strategy);
  FeatureDataset ds;
  if (spec.synthetic()) {
    SynthSpec synth = spec.synth;
    synth.separation = strategy.separation * spec.separation_scale;
    synth.strategy_tag = strategy.name;
    synth.seed = derive_seed(config.base_seed, "dataset|" + spec.name + "|r" + std::to_string(run.rep));
    ds = synth_features(synth);
  } else {
    const auto it = strategy.embeddings.find(spec.name);
    ds = load_features(it != strategy.embeddings.end() ? it->second : spec.file);
    ds.name = spec.name;
    ds.metadata["strategy"] = strategy.name;
  }
  if (spec.small) ds.metadata["small"] = std::to_string(*spec.small);
  if (spec.width) ds.metadata["width"] = format_double(*spec.width);
  return ds;
}

std::uint64_t scenario_seed(const GridConfig& config, const RunSpec& run) {
  return derive_seed(config.base_seed, "scenario|" + config.datasets.at(run.dataset).name + "|" +
                                           to_string(run.scenario) + "|r" + std::to_string(run.rep));
}

LearnerParams resolve_params(const GridConfig& config, const RunSpec& run) {
  const LearnerSpec& learner = config.learners.at(run.learner);
  LearnerParams params;
  params.seed = run.seed;
  const auto defaults = config.hyperparams.find(to_string(learner.kind));
  if (defaults != config.hyperparams.end()) apply_hyperparams(params, learner.kind, defaults->second);
  apply_hyperparams(params, learner.kind, learner.hyperparams);
  const std::string& data = config.datasets.at(run.dataset).name;
  const std::string& train = config.strategies.at(run.strategy).name;
  const std::string scenario = to_string(run.scenario);
  for (const auto& o : config.overrides) {
    if (o.data && *o.data != data) continue;
    if (o.train && *o.train != train) continue;
    if (o.incr && *o.incr != learner.name) continue;
    if (o.scenario && *o.scenario != scenario) continue;
    if (o.rep && *o.rep != run.rep) continue;
    apply_hyperparams(params, learner.kind, o.hyperparams);
  }
  return params;
}

RunOutcome execute_run(const GridConfig& config, const RunSpec& run) {
  const FeatureDataset ds = materialize_dataset(config, run);
  const std::vector<ClassId> ids = ds.classes();
  const Scenario sc = build_scenario(ids, run.scenario, config.n_incr_steps, scenario_seed(config, run));
  const LearnerKind kind = config.learners.at(run.learner).kind;
  RunOutcome out;
  out.accuracy = run_incremental(kind, ds, sc, resolve_params(config, run));
  if (out.accuracy.steps() < 2) {
    fail(ErrorCode::InvalidArgument, "scenario has a single step; incremental metrics are undefined");
  }
  const MetricSet m = compute_metrics(out.accuracy, sc.b);
  const DatasetStats stats = dataset_stats(ds);
  const auto views = partition_dataset(ds, sc);

  RunRecord& r = out.record;
  r.run_id = run.run_id;
  r.data = config.datasets.at(run.dataset).name;
  r.train = config.strategies.at(run.strategy).name;
  r.incr = config.learners.at(run.learner).name;
  r.scenario_b = run.scenario == ScenarioKind::Half ? 1 : 0;
  r.n_classes = stats.n_classes;
  r.n1 = static_cast<double>(views.front().train_rows.size());
  r.n_mean = stats.n_mean;
  r.small = stats.small ? 1 : 0;
  r.width = stats.width;
  r.acc1 = m.acc1;
  r.avg_acc = m.avg_acc;
  r.forgetting = m.forgetting;
  r.acc_k = m.acc_k;
  return out;
}

GridResult run_grid(const GridConfig& config, const std::vector<RunSpec>& runs, unsigned jobs) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, runs.size())));

  // One slot per run, written by exactly one worker; collection afterwards
  // walks the slots in run order, so scheduling never shows in the output.
  std::vector<std::optional<RunOutcome>> outcomes(runs.size());
  std::vector<std::string> errors(runs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < runs.size(); i = next.fetch_add(1)) {
      try {
        outcomes[i] = execute_run(config, runs[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        if (errors[i].empty()) errors[i] = "unknown error";
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  GridResult result;
  std::vector<std::size_t> order(runs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return runs[a].run_id < runs[b].run_id; });
  for (const std::size_t i : order) {
    if (outcomes[i]) {
      result.runs.push_back(std::move(*outcomes[i]));
    } else {
      result.failures.push_back({runs[i].run_id, errors[i]});
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
  std::string out = "\"";
  for (const char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_results_csv(const ResultsTable& table) {
  std::vector<const RunRecord*> sorted;
  for (const auto& r : table.records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const RunRecord* a, const RunRecord* b) { return a->run_id < b->run_id; });
  std::string out = "# config_hash=" + table.config_hash + " version=" + table.version + "\n";
  out += kResultsHeader;
  out += '\n';
  for (const RunRecord* r : sorted) {
    out += csv_field(r->run_id) + ',' + csv_field(r->data) + ',' + csv_field(r->train) + ',' + csv_field(r->incr) +
           ',' + std::to_string(r->scenario_b) + ',' + std::to_string(r->n_classes) + ',' + format_double(r->n1) +
           ',' + format_double(r->n_mean) + ',' + std::to_string(r->small) + ',' + format_double(r->width) + ',' +
           format_double(r->acc1) + ',' + format_double(r->avg_acc) + ',' + format_double(r->forgetting) + ',' +
           format_double(r->acc_k) + '\n';
  }
  return out;
}

ResultsTable parse_results_csv(const std::string& text, const std::string& source) {
  ResultsTable table;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  auto where = [&] { return source + ": line " + std::to_string(line_no) + ": "; };
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    if (line.front() == '#') {
      for (const auto token : split_fields(line.substr(1), ' ')) {
        const auto t = trim(token);
        if (t.starts_with("config_hash=")) table.config_hash = std::string(t.substr(12));
        if (t.starts_with("version=")) table.version = std::string(t.substr(8));
      }
      continue;
    }
    if (!header_seen) {
      if (trim(line) != kResultsHeader) fail(ErrorCode::Parse, where() + "unexpected header '" + std::string(line) + "'");
      header_seen = true;
      continue;
    }
    const auto f = split_fields(line, ',');
    if (f.size() != 14) {
      fail(ErrorCode::Parse, where() + "expected 14 fields, found " + std::to_string(f.size()));
    }
    RunRecord r;
    r.run_id = std::string(f[0]);
    r.data = std::string(f[1]);
    r.train = std::string(f[2]);
    r.incr = std::string(f[3]);
    long long b = 0;
    long long n = 0;
    long long small = 0;
    if (!parse_int64(f[4], b) || (b != 0 && b != 1)) fail(ErrorCode::Parse, where() + "scenario_B must be 0 or 1");
    if (!parse_int64(f[5], n) || n < 1) fail(ErrorCode::Parse, where() + "N must be a positive integer");
    if (!parse_int64(f[8], small) || (small != 0 && small != 1)) fail(ErrorCode::Parse, where() + "small must be 0 or 1");
    r.scenario_b = static_cast<int>(b);
    r.n_classes = static_cast<int>(n);
    r.small = static_cast<int>(small);
    const std::pair<std::size_t, double*> numeric[] = {{6, &r.n1},     {7, &r.n_mean},      {9, &r.width},
                                                       {10, &r.acc1},  {11, &r.avg_acc},    {12, &r.forgetting},
                                                       {13, &r.acc_k}};
    for (const auto& [col, dst] : numeric) {
      if (!parse_double(f[col], *dst) || !std::isfinite(*dst)) {
        fail(ErrorCode::Parse, where() + "bad number '" + std::string(f[col]) + "' in column " + std::to_string(col + 1));
      }
    }
    table.records.push_back(std::move(r));
  }
  if (!header_seen) fail(ErrorCode::Parse, source + ": missing header");
  std::vector<std::string> ids;
  for (const auto& r : table.records) ids.push_back(r.run_id);
  std::sort(ids.begin(), ids.end());
  const auto dup = std::adjacent_find(ids.begin(), ids.end());
  if (dup != ids.end()) fail(ErrorCode::Parse, source + ": duplicate run id '" + *dup + "'");
  return table;
}

ResultsTable read_results(const std::filesystem::path& path) {
  return parse_results_csv(read_text_file(path), path.string());
}

std::string format_failures_csv(const std::string& config_hash, const std::vector<RunFailure>& failures) {
  std::string out = "# config_hash=" + config_hash + " version=" + artifact_version() + "\nrun_id,error\n";
  for (const auto& f : failures) out += csv_field(f.run_id) + ',' + csv_field(f.message) + '\n';
  return out;
}

}  // namespace efcil
