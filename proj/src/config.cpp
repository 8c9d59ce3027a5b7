#include "efcil/config.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "efcil/error.hpp"
#include "efcil/random.hpp"
#include "efcil/text.hpp"

namespace efcil {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
  fail(ErrorCode::Config, "config: " + where + ": " + what);
}

void check_keys(const json& object, const std::string& where, const std::set<std::string>& allowed) {
  if (!object.is_object()) config_error(where, "expected an object");
  for (const auto& item : object.items()) {
    if (allowed.count(item.key()) == 0) config_error(where, "unknown field '" + item.key() + "'");
  }
}

std::string get_string(const json& v, const std::string& where) {
  if (!v.is_string()) config_error(where, "expected a string");
  const std::string s = v.get<std::string>();
  if (s.empty()) config_error(where, "must not be empty");
  return s;
}

double get_number(const json& v, const std::string& where) {
  if (!v.is_number()) config_error(where, "expected a number");
  return v.get<double>();
}

int get_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) config_error(where, "expected an integer");
  const auto value = v.get<long long>();
  if (value < -2147483647LL || value > 2147483647LL) config_error(where, "integer out of range");
  return static_cast<int>(value);
}

std::vector<std::string> get_strings(const json& v, const std::string& where) {
  if (!v.is_array()) config_error(where, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_string(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

HyperPatch get_patch(const json& v, const std::string& where) {
  if (!v.is_object()) config_error(where, "expected an object of numbers");
  HyperPatch patch;
  for (const auto& item : v.items()) patch[item.key()] = get_number(item.value(), where + "." + item.key());
  return patch;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& file) {
  const std::filesystem::path p(file);
  return p.is_absolute() || base.empty() ? p : base / p;
}

DatasetSpec parse_dataset(const json& v, const std::string& where, const std::filesystem::path& base_dir) {
  check_keys(v, where, {"name", "n_classes", "dim", "n_train", "n_test", "anisotropy", "file", "separation_scale",
                        "small", "width"});
  DatasetSpec d;
  if (!v.contains("name")) config_error(where, "missing 'name'");
  d.name = get_string(v["name"], where + ".name");
  d.synth.name = d.name;
  if (v.contains("file")) {
    d.file = resolve(base_dir, get_string(v["file"], where + ".file"));
    for (const char* key : {"n_classes", "dim", "n_train", "n_test", "anisotropy"}) {
      if (v.contains(key)) config_error(where, std::string("'") + key + "' is only valid for synthetic datasets");
    }
  } else {
    if (v.contains("n_classes")) d.synth.n_classes = get_int(v["n_classes"], where + ".n_classes");
    if (v.contains("dim")) d.synth.dim = get_int(v["dim"], where + ".dim");
    if (v.contains("n_train")) d.synth.n_train = get_int(v["n_train"], where + ".n_train");
    if (v.contains("n_test")) d.synth.n_test = get_int(v["n_test"], where + ".n_test");
    if (v.contains("anisotropy")) d.synth.anisotropy = get_number(v["anisotropy"], where + ".anisotropy");
    if (d.synth.n_classes < 2) config_error(where + ".n_classes", "must be >= 2");
    if (d.synth.dim < 1) config_error(where + ".dim", "must be >= 1");
    if (d.synth.n_train < 1 || d.synth.n_test < 1) config_error(where, "n_train and n_test must be >= 1");
    if (d.synth.anisotropy < 0.0) config_error(where + ".anisotropy", "must be >= 0");
  }
  if (v.contains("separation_scale")) {
    d.separation_scale = get_number(v["separation_scale"], where + ".separation_scale");
    if (!(d.separation_scale >= 0.0)) config_error(where + ".separation_scale", "must be >= 0");
  }
  if (v.contains("small")) {
    const int small = get_int(v["small"], where + ".small");
    if (small != 0 && small != 1) config_error(where + ".small", "must be 0 or 1");
    d.small = small;
  }
  if (v.contains("width")) d.width = get_number(v["width"], where + ".width");
  return d;
}

StrategySpec parse_strategy(const json& v, const std::string& where, const std::filesystem::path& base_dir) {
  check_keys(v, where, {"name", "separation", "embeddings"});
  StrategySpec s;
  if (!v.contains("name")) config_error(where, "missing 'name'");
  s.name = get_string(v["name"], where + ".name");
  if (v.contains("separation")) {
    s.separation = get_number(v["separation"], where + ".separation");
    if (!(s.separation >= 0.0)) config_error(where + ".separation", "must be >= 0");
  }
  if (v.contains("embeddings")) {
    const json& e = v["embeddings"];
    if (!e.is_object()) config_error(where + ".embeddings", "expected an object");
    for (const auto& item : e.items()) {
      s.embeddings[item.key()] = resolve(base_dir, get_string(item.value(), where + ".embeddings." + item.key()));
    }
  }
  return s;
}

LearnerSpec parse_learner(const json& v, const std::string& where) {
  LearnerSpec l;
  if (v.is_string()) {
    l.name = v.get<std::string>();
    try {
      l.kind = parse_learner_kind(l.name);
    } catch (const Error& e) {
      config_error(where, e.what());
    }
    return l;
  }
  check_keys(v, where, {"name", "kind", "hyperparams"});
  if (!v.contains("name")) config_error(where, "missing 'name'");
  l.name = get_string(v["name"], where + ".name");
  const std::string kind = v.contains("kind") ? get_string(v["kind"], where + ".kind") : l.name;
  try {
    l.kind = parse_learner_kind(kind);
  } catch (const Error& e) {
    config_error(where + ".kind", e.what());
  }
  if (v.contains("hyperparams")) l.hyperparams = get_patch(v["hyperparams"], where + ".hyperparams");
  return l;
}

AnalysisSpec parse_analysis(const json& v, const std::string& where) {
  check_keys(v, where, {"alpha", "screening_responses", "screening_candidates", "ladders", "anova", "pairwise",
                        "gram_threshold"});
  AnalysisSpec a;
  if (v.contains("alpha")) {
    a.alpha = get_number(v["alpha"], where + ".alpha");
    if (!(a.alpha > 0.0 && a.alpha < 1.0)) config_error(where + ".alpha", "must be in (0, 1)");
  }
  if (v.contains("screening_responses")) {
    a.screening_responses = get_strings(v["screening_responses"], where + ".screening_responses");
  }
  if (v.contains("screening_candidates")) {
    a.screening_candidates = get_strings(v["screening_candidates"], where + ".screening_candidates");
  }
  if (v.contains("ladders")) {
    const json& l = v["ladders"];
    if (!l.is_array()) config_error(where + ".ladders", "expected an array of formula arrays");
    a.ladders.clear();
    for (std::size_t i = 0; i < l.size(); ++i) {
      a.ladders.push_back(get_strings(l[i], where + ".ladders[" + std::to_string(i) + "]"));
    }
  }
  if (v.contains("anova")) a.anova = get_strings(v["anova"], where + ".anova");
  if (v.contains("pairwise")) {
    const json& p = v["pairwise"];
    if (!p.is_array()) config_error(where + ".pairwise", "expected an array");
    a.pairwise.clear();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const std::string w = where + ".pairwise[" + std::to_string(i) + "]";
      check_keys(p[i], w, {"factor", "formula", "splits"});
      PairwiseSpec spec;
      if (p[i].contains("factor")) spec.factor = get_string(p[i]["factor"], w + ".factor");
      if (p[i].contains("formula")) spec.formula = get_string(p[i]["formula"], w + ".formula");
      if (p[i].contains("splits")) spec.splits = get_strings(p[i]["splits"], w + ".splits");
      a.pairwise.push_back(spec);
    }
  }
  if (v.contains("gram_threshold")) {
    a.gram_threshold = get_number(v["gram_threshold"], where + ".gram_threshold");
    if (!(a.gram_threshold >= 0.0)) config_error(where + ".gram_threshold", "must be >= 0");
  }
  return a;
}

template <typename T>
void require_unique(const std::vector<T>& items, const std::string& where) {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string& name = items[i].name;
    const std::string field = where + "[" + std::to_string(i) + "].name";
    if (!seen.insert(name).second) config_error(field, "level '" + name + "' declared more than once");
    if (name.find_first_of(",\"\n\r") != std::string::npos || name.find("__") != std::string::npos) {
      config_error(field, "level '" + name + "' contains a reserved character sequence");
    }
  }
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace

void apply_hyperparams(LearnerParams& params, LearnerKind kind, const HyperPatch& patch) {
  for (const auto& [key, value] : patch) {
    bool known = false;
    switch (kind) {
      case LearnerKind::Dslda:
        if (key == "shrinkage") params.dslda.shrinkage = value, known = true;
        break;
      case LearnerKind::Fetril:
        if (key == "learning_rate") params.fetril.learning_rate = value, known = true;
        if (key == "epochs") params.fetril.epochs = static_cast<int>(value), known = true;
        if (key == "weight_decay") params.fetril.weight_decay = value, known = true;
        break;
      case LearnerKind::Bsil:
        if (key == "learning_rate") params.bsil.learning_rate = value, known = true;
        if (key == "epochs") params.bsil.epochs = static_cast<int>(value), known = true;
        if (key == "anchor_weight") params.bsil.anchor_weight = value, known = true;
        if (key == "initial_scale") params.bsil.initial_scale = value, known = true;
        break;
      case LearnerKind::Ncm:
        break;
    }
    if (!known) {
      fail(ErrorCode::Config, "config: hyperparameter '" + key + "' does not apply to learner kind " + to_string(kind));
    }
  }
}

GridConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Config, std::string("config: malformed JSON: ") + e.what());
  }
  check_keys(doc, "root", {"name", "base_seed", "repetitions", "n_incr_steps", "scenarios", "datasets",
                           "strategies", "learners", "hyperparams", "overrides", "analysis"});
  GridConfig c;
  if (doc.contains("name")) c.name = get_string(doc["name"], "name");
  if (doc.contains("base_seed")) {
    const json& s = doc["base_seed"];
    if (!s.is_number_unsigned()) config_error("base_seed", "expected a nonnegative integer");
    c.base_seed = s.get<std::uint64_t>();
  }
  if (doc.contains("repetitions")) c.repetitions = get_int(doc["repetitions"], "repetitions");
  if (c.repetitions < 1) config_error("repetitions", "must be >= 1");
  if (doc.contains("n_incr_steps")) c.n_incr_steps = get_int(doc["n_incr_steps"], "n_incr_steps");
  if (c.n_incr_steps < 1) config_error("n_incr_steps", "must be >= 1");

  if (!doc.contains("scenarios")) config_error("scenarios", "missing");
  {
    std::set<std::string> seen;
    for (const auto& s : get_strings(doc["scenarios"], "scenarios")) {
      try {
        const ScenarioKind kind = parse_scenario_kind(s);
        if (!seen.insert(to_string(kind)).second) config_error("scenarios", "'" + s + "' declared more than once");
        c.scenarios.push_back(kind);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::Config) throw;
        config_error("scenarios", e.what());
      }
    }
  }
  for (const char* key : {"datasets", "strategies", "learners"}) {
    if (!doc.contains(key) || !doc[key].is_array() || doc[key].empty()) {
      config_error(key, "expected a nonempty array");
    }
  }
  for (std::size_t i = 0; i < doc["datasets"].size(); ++i) {
    c.datasets.push_back(parse_dataset(doc["datasets"][i], "datasets[" + std::to_string(i) + "]", base_dir));
  }
  for (std::size_t i = 0; i < doc["strategies"].size(); ++i) {
    c.strategies.push_back(parse_strategy(doc["strategies"][i], "strategies[" + std::to_string(i) + "]", base_dir));
  }
  for (std::size_t i = 0; i < doc["learners"].size(); ++i) {
    c.learners.push_back(parse_learner(doc["learners"][i], "learners[" + std::to_string(i) + "]"));
  }
  if (c.scenarios.empty()) config_error("scenarios", "expected a nonempty array");
  require_unique(c.datasets, "datasets");
  require_unique(c.strategies, "strategies");
  require_unique(c.learners, "learners");

  for (const auto& s : c.strategies) {
    for (const auto& [data, path] : s.embeddings) {
      const bool known = std::any_of(c.datasets.begin(), c.datasets.end(), [&](const DatasetSpec& d) { return d.name == data; });
      if (!known) config_error("strategies." + s.name + ".embeddings", "unknown dataset '" + data + "'");
    }
  }

  if (doc.contains("hyperparams")) {
    const json& h = doc["hyperparams"];
    if (!h.is_object()) config_error("hyperparams", "expected an object keyed by learner kind");
    for (const auto& item : h.items()) {
      LearnerKind kind;
      try {
        kind = parse_learner_kind(item.key());
      } catch (const Error& e) {
        config_error("hyperparams", e.what());
      }
      HyperPatch patch = get_patch(item.value(), "hyperparams." + item.key());
      LearnerParams probe;
      apply_hyperparams(probe, kind, patch);
      c.hyperparams[to_string(kind)] = std::move(patch);
    }
  }
  for (const auto& l : c.learners) {
    LearnerParams probe;
    apply_hyperparams(probe, l.kind, l.hyperparams);
  }

  if (doc.contains("overrides")) {
    const json& o = doc["overrides"];
    if (!o.is_array()) config_error("overrides", "expected an array");
    for (std::size_t i = 0; i < o.size(); ++i) {
      const std::string w = "overrides[" + std::to_string(i) + "]";
      check_keys(o[i], w, {"data", "train", "incr", "scenario", "rep", "hyperparams"});
      RunOverride r;
      if (o[i].contains("data")) r.data = get_string(o[i]["data"], w + ".data");
      if (o[i].contains("train")) r.train = get_string(o[i]["train"], w + ".train");
      if (o[i].contains("incr")) r.incr = get_string(o[i]["incr"], w + ".incr");
      if (o[i].contains("scenario")) r.scenario = to_string(parse_scenario_kind(get_string(o[i]["scenario"], w + ".scenario")));
      if (o[i].contains("rep")) r.rep = get_int(o[i]["rep"], w + ".rep");
      if (!o[i].contains("hyperparams")) config_error(w, "missing 'hyperparams'");
      r.hyperparams = get_patch(o[i]["hyperparams"], w + ".hyperparams");
      if (r.data && std::none_of(c.datasets.begin(), c.datasets.end(), [&](const auto& d) { return d.name == *r.data; })) {
        config_error(w + ".data", "unknown level '" + *r.data + "'");
      }
      if (r.train && std::none_of(c.strategies.begin(), c.strategies.end(), [&](const auto& s) { return s.name == *r.train; })) {
        config_error(w + ".train", "unknown level '" + *r.train + "'");
      }
      if (r.incr) {
        const auto it = std::find_if(c.learners.begin(), c.learners.end(), [&](const auto& l) { return l.name == *r.incr; });
        if (it == c.learners.end()) config_error(w + ".incr", "unknown level '" + *r.incr + "'");
        LearnerParams probe;
        apply_hyperparams(probe, it->kind, r.hyperparams);
      }
      c.overrides.push_back(std::move(r));
    }
  }
  if (doc.contains("analysis")) c.analysis = parse_analysis(doc["analysis"], "analysis");

  // Dataset files must exist for every strategy they are run with.
  for (const auto& d : c.datasets) {
    if (d.synthetic()) continue;
    for (const auto& s : c.strategies) {
      const auto it = s.embeddings.find(d.name);
      if (it == s.embeddings.end() && d.file.empty()) {
        config_error("datasets." + d.name, "no embedding file for strategy '" + s.name + "'");
      }
    }
  }

  doc["base_seed"] = c.base_seed;
  c.canonical = doc.dump();
  c.hash = hex64(stable_hash(c.canonical));
  return c;
}

GridConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    fail(ErrorCode::Config, std::string("config: ") + e.what());
  }
  return parse_config(text, path.parent_path());
}

void set_base_seed(GridConfig& config, std::uint64_t seed) {
  json doc = json::parse(config.canonical);
  doc["base_seed"] = seed;
  config.base_seed = seed;
  config.canonical = doc.dump();
  config.hash = hex64(stable_hash(config.canonical));
}

}  // namespace efcil
