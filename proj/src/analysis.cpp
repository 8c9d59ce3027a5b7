#include "efcil/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "efcil/error.hpp"
#include "efcil/text.hpp"

namespace efcil {

namespace {

using nlohmann::json;

bool constant_response(const std::vector<RunRecord>& records, const std::string& response) {
  if (records.empty()) return true;
  const double first = numeric_value(records.front(), response);
  return std::all_of(records.begin(), records.end(),
                     [&](const RunRecord& r) { return numeric_value(r, response) == first; });
}

/// Removes every term mentioning `variable`.
Formula without_variable(Formula f, const std::string& variable) {
  std::erase_if(f.terms, [&](const Term& t) { return std::find(t.begin(), t.end(), variable) != t.end(); });
  return f;
}

std::string split_value(const RunRecord& r, const std::string& variable) {
  if (lookup_variable(variable).kind == VariableKind::Categorical) return categorical_value(r, variable);
  return format_double(numeric_value(r, variable));
}

ModelReport make_model_report(const std::vector<RunRecord>& records, const Formula& formula, double gram_threshold) {
  const DesignMatrix design = encode_design(records, formula);
  const RegressionFit fit = ols_fit(design);
  ModelReport m;
  m.formula = formula.to_string();
  m.n = fit.n;
  m.params = fit.p;
  m.r2 = fit.r2;
  m.adj_r2 = fit.adj_r2;
  m.aic = fit.aic;
  m.f_stat = fit.f_stat;
  m.f_pvalue = fit.f_pvalue;
  for (std::size_t j = 0; j < fit.p; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    m.coefficients.push_back(
        {fit.labels[j], fit.coefficients(jj), fit.std_errors(jj), fit.t_stats(jj), fit.p_values(jj)});
  }
  m.gram = gram_min_eigenvalue(design, gram_threshold);
  m.anova = anova_partial_eta2(design, m.formula);
  return m;
}

// --- JSON helpers ----------------------------------------------------------

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json opt(const std::optional<double>& v) { return v && std::isfinite(*v) ? json(*v) : json(nullptr); }

double get_num(const json& v) {
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return v.get<double>();
}

std::optional<double> get_opt(const json& v) {
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

json pairs_json(const std::vector<std::pair<double, double>>& points) {
  json out = json::array();
  for (const auto& [x, y] : points) out.push_back(json::array({num(x), num(y)}));
  return out;
}

std::vector<std::pair<double, double>> pairs_from(const json& v) {
  std::vector<std::pair<double, double>> out;
  for (const auto& p : v) out.emplace_back(get_num(p.at(0)), get_num(p.at(1)));
  return out;
}

json anova_json(const AnovaTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"term", r.term}, {"ss", num(r.ss)}, {"df", r.df}, {"f", num(r.f_stat)},
                    {"p", num(r.p_value)}, {"partial_eta2", num(r.partial_eta2)}});
  }
  return {{"formula", t.formula}, {"rows", rows}, {"ss_resid", num(t.ss_resid)}, {"df_resid", t.df_resid},
          {"r2", num(t.r2)}, {"n", t.n}};
}

AnovaTable anova_from(const json& v) {
  AnovaTable t;
  t.formula = v.at("formula").get<std::string>();
  for (const auto& r : v.at("rows")) {
    t.rows.push_back({r.at("term").get<std::string>(), get_num(r.at("ss")), r.at("df").get<std::size_t>(),
                      get_num(r.at("f")), get_num(r.at("p")), get_num(r.at("partial_eta2"))});
  }
  t.ss_resid = get_num(v.at("ss_resid"));
  t.df_resid = v.at("df_resid").get<std::size_t>();
  t.r2 = get_num(v.at("r2"));
  t.n = v.at("n").get<std::size_t>();
  return t;
}

json pairwise_json(const PairwiseMatrix& m) {
  json gain = json::array();
  json p = json::array();
  json sig = json::array();
  json sig_u = json::array();
  for (std::size_t i = 0; i < m.levels.size(); ++i) {
    json g_row = json::array();
    json p_row = json::array();
    json s_row = json::array();
    json u_row = json::array();
    for (std::size_t j = 0; j < m.levels.size(); ++j) {
      g_row.push_back(opt(m.gain[i][j]));
      p_row.push_back(opt(m.p_value[i][j]));
      s_row.push_back(static_cast<bool>(m.significant[i][j]));
      u_row.push_back(static_cast<bool>(m.significant_uncorrected[i][j]));
    }
    gain.push_back(g_row);
    p.push_back(p_row);
    sig.push_back(s_row);
    sig_u.push_back(u_row);
  }
  return {{"factor", m.factor},       {"formula", m.formula}, {"levels", m.levels},
          {"gain", gain},             {"p", p},               {"significant", sig},
          {"significant_uncorrected", sig_u}, {"tests", m.tests}, {"alpha", m.alpha},
          {"threshold", m.threshold}, {"max_refit_discrepancy", num(m.max_refit_discrepancy)}};
}

PairwiseMatrix pairwise_from(const json& v) {
  PairwiseMatrix m;
  m.factor = v.at("factor").get<std::string>();
  m.formula = v.at("formula").get<std::string>();
  m.levels = v.at("levels").get<std::vector<std::string>>();
  const std::size_t l = m.levels.size();
  m.gain.assign(l, std::vector<std::optional<double>>(l));
  m.p_value.assign(l, std::vector<std::optional<double>>(l));
  m.significant.assign(l, std::vector<bool>(l, false));
  m.significant_uncorrected.assign(l, std::vector<bool>(l, false));
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = 0; j < l; ++j) {
      m.gain[i][j] = get_opt(v.at("gain").at(i).at(j));
      m.p_value[i][j] = get_opt(v.at("p").at(i).at(j));
      m.significant[i][j] = v.at("significant").at(i).at(j).get<bool>();
      m.significant_uncorrected[i][j] = v.at("significant_uncorrected").at(i).at(j).get<bool>();
    }
  }
  m.tests = v.at("tests").get<std::size_t>();
  m.alpha = v.at("alpha").get<double>();
  m.threshold = v.at("threshold").get<double>();
  m.max_refit_discrepancy = get_num(v.at("max_refit_discrepancy"));
  return m;
}

json screening_rows(const std::vector<ScreeningRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) out.push_back({{"variable", r.variable}, {"p", num(r.p_value)}, {"r2", num(r.r2)}, {"df", r.df}});
  return out;
}

std::vector<ScreeningRow> screening_rows_from(const json& v) {
  std::vector<ScreeningRow> out;
  for (const auto& r : v) {
    out.push_back({r.at("variable").get<std::string>(), get_num(r.at("p")), get_num(r.at("r2")), r.at("df").get<std::size_t>()});
  }
  return out;
}

}  // namespace

AnalysisBundle analyze_records(const std::vector<RunRecord>& records, const AnalysisSpec& spec) {
  AnalysisBundle b;
  b.n_records = records.size();
  b.alpha = spec.alpha;
  std::size_t fitted = 0;

  std::set<std::string> constant;
  for (const char* r : {"avg_acc", "forgetting", "Acc1", "AccK"}) {
    if (constant_response(records, r)) constant.insert(r);
  }
  auto response_guard = [&](const std::string& stage, const Formula& f) {
    if (constant.count(f.response) > 0) {
      b.warnings.push_back({stage, f.to_string(), "response '" + f.response + "' has zero variance"});
      return false;
    }
    return true;
  };

  // 1. Correlations between the four metrics.
  if (records.size() >= 3) {
    std::vector<MetricSet> table;
    for (const auto& r : records) table.push_back({r.acc1, r.avg_acc, r.forgetting, r.acc_k});
    b.correlations = metric_correlations(table);
  } else {
    b.warnings.push_back({"correlations", "", "fewer than 3 records"});
  }

  // 2. One-variable screening.
  for (const auto& response : spec.screening_responses) {
    const std::string name = lookup_variable(response).name;
    if (constant.count(name) > 0) {
      b.warnings.push_back({"screening", name, "response '" + name + "' has zero variance"});
      continue;
    }
    std::vector<std::string> candidates;
    for (const auto& c : spec.screening_candidates) {
      if (lookup_variable(c).name != name) candidates.push_back(c);
    }
    ScreeningResult s = screen_variables(records, name, candidates, spec.alpha);
    for (const auto& [variable, reason] : s.failed) b.warnings.push_back({"screening", name + " ~ " + variable, reason});
    fitted += s.selected.size() + s.rejected.size();
    b.screening.push_back(std::move(s));
  }

  // 3. AIC over each formula ladder.
  std::vector<Formula> winners;
  for (const auto& ladder : spec.ladders) {
    if (ladder.empty()) continue;
    std::vector<Formula> formulas;
    for (const auto& text : ladder) formulas.push_back(parse_formula(text));
    if (!response_guard("aic", formulas.front())) continue;
    try {
      AicReport report{formulas.front().response, select_model_aic(records, formulas)};
      for (const auto& e : report.selection.entries) {
        if (!e.aic) b.warnings.push_back({"aic", e.formula, e.error});
      }
      winners.push_back(formulas[report.selection.best]);
      ++fitted;
      b.aic.push_back(std::move(report));
    } catch (const Error& e) {
      b.warnings.push_back({"aic", formulas.front().response, e.what()});
    }
  }

  // 4-5. ANOVA with partial eta^2, plus the Gram-matrix collinearity check.
  for (const auto& text : spec.anova) {
    const Formula f = parse_formula(text);
    if (!response_guard("anova", f)) continue;
    try {
      ModelReport m = make_model_report(records, f, spec.gram_threshold);
      if (m.gram.collinear) {
        b.warnings.push_back({"anova", m.formula, "smallest Gram eigenvalue " + format_double(m.gram.min_eigenvalue) +
                                                      " below threshold " + format_double(m.gram.threshold)});
      }
      b.models.push_back(std::move(m));
      ++fitted;
    } catch (const Error& e) {
      b.warnings.push_back({"anova", f.to_string(), e.what()});
    }
  }

  // Pairwise matrices: overall, then one per level of each split variable.
  for (const auto& p : spec.pairwise) {
    const Formula f = parse_formula(p.formula);
    if (!response_guard("pairwise", f)) continue;
    auto attempt = [&](const std::vector<RunRecord>& subset, const Formula& formula, const std::string& split,
                       const std::string& level) {
      const std::string name = split.empty() ? "overall" : split + "=" + level;
      try {
        PairwiseReport r{name, split, level, subset.size(),
                         pairwise_comparison(subset, formula, p.factor, spec.alpha)};
        b.pairwise.push_back(std::move(r));
        ++fitted;
      } catch (const Error& e) {
        b.warnings.push_back({"pairwise", formula.to_string() + " [" + name + "]", e.what()});
      }
    };
    attempt(records, f, "", "");
    for (const auto& split : p.splits) {
      const std::string variable = lookup_variable(split).name;
      std::map<std::string, std::vector<RunRecord>> groups;
      for (const auto& r : records) groups[split_value(r, variable)].push_back(r);
      const Formula reduced = without_variable(f, variable);
      for (const auto& [level, subset] : groups) attempt(subset, reduced, variable, level);
    }
  }

  // Diagnostics for each ladder's selected model.
  for (const auto& f : winners) {
    try {
      const DesignMatrix design = encode_design(records, f);
      const RegressionFit fit = ols_fit(design);
      b.diagnostics.push_back({f.to_string(), diagnostics(fit, design)});
    } catch (const Error& e) {
      b.warnings.push_back({"diagnostics", f.to_string(), e.what()});
    }
  }

  if (fitted == 0) {
    std::string reasons;
    for (const auto& w : b.warnings) reasons += "\n  " + w.stage + " " + w.model + ": " + w.reason;
    fail(ErrorCode::Infeasible, "analysis infeasible: no model could be fitted" + reasons);
  }
  return b;
}

std::string bundle_to_json(const AnalysisBundle& b) {
  json doc;
  doc["config_hash"] = b.config_hash;
  doc["version"] = b.version;
  doc["n_records"] = b.n_records;
  doc["alpha"] = b.alpha;
  doc["aic_convention"] = "2(p+1) + n[ln(2 pi SSR/n) + 1]";
  doc["anova_type"] = "II";
  doc["bonferroni_tests"] = "unordered estimable pairs L(L-1)/2";
  if (b.correlations) {
    json r = json::array();
    for (const auto& row : b.correlations->r) {
      json jr = json::array();
      for (const auto& v : row) jr.push_back(opt(v));
      r.push_back(jr);
    }
    doc["correlations"] = {{"metrics", {"acc1", "avg_acc", "forgetting", "accK"}}, {"n", b.correlations->n}, {"r", r}};
  } else {
    doc["correlations"] = nullptr;
  }
  json screening = json::array();
  for (const auto& s : b.screening) {
    json failed = json::array();
    for (const auto& [variable, reason] : s.failed) failed.push_back({{"variable", variable}, {"reason", reason}});
    screening.push_back({{"response", s.response}, {"alpha", s.alpha}, {"selected", screening_rows(s.selected)},
                         {"rejected", screening_rows(s.rejected)}, {"failed", failed}});
  }
  doc["screening"] = screening;
  json aic = json::array();
  for (const auto& a : b.aic) {
    json entries = json::array();
    for (const auto& e : a.selection.entries) {
      entries.push_back({{"formula", e.formula}, {"aic", opt(e.aic)}, {"params", e.params}, {"r2", opt(e.r2)},
                         {"error", e.error}});
    }
    aic.push_back({{"response", a.response}, {"best", a.selection.best}, {"entries", entries}});
  }
  doc["aic"] = aic;
  json models = json::array();
  for (const auto& m : b.models) {
    json coefs = json::array();
    for (const auto& c : m.coefficients) {
      coefs.push_back({{"label", c.label}, {"estimate", num(c.estimate)}, {"se", num(c.std_error)},
                       {"t", num(c.t_stat)}, {"p", num(c.p_value)}});
    }
    models.push_back({{"formula", m.formula},
                      {"n", m.n},
                      {"params", m.params},
                      {"r2", num(m.r2)},
                      {"adj_r2", num(m.adj_r2)},
                      {"aic", num(m.aic)},
                      {"f", num(m.f_stat)},
                      {"f_p", num(m.f_pvalue)},
                      {"coefficients", coefs},
                      {"gram", {{"min_eigenvalue", num(m.gram.min_eigenvalue)},
                                {"max_eigenvalue", num(m.gram.max_eigenvalue)},
                                {"threshold", num(m.gram.threshold)},
                                {"collinear", m.gram.collinear}}},
                      {"anova", anova_json(m.anova)}});
  }
  doc["models"] = models;
  json pairwise = json::array();
  for (const auto& p : b.pairwise) {
    pairwise.push_back({{"name", p.name}, {"split", p.split}, {"split_level", p.split_level}, {"n", p.n},
                        {"matrix", pairwise_json(p.matrix)}});
  }
  doc["pairwise"] = pairwise;
  json diag = json::array();
  for (const auto& d : b.diagnostics) {
    json std_res = json::array();
    for (const double v : d.bundle.standardized) std_res.push_back(num(v));
    diag.push_back({{"formula", d.formula},
                    {"qq", pairs_json(d.bundle.qq)},
                    {"scale_location", pairs_json(d.bundle.scale_location)},
                    {"leverage", pairs_json(d.bundle.leverage)},
                    {"standardized", std_res}});
  }
  doc["diagnostics"] = diag;
  json warnings = json::array();
  for (const auto& w : b.warnings) warnings.push_back({{"stage", w.stage}, {"model", w.model}, {"reason", w.reason}});
  doc["warnings"] = warnings;
  return doc.dump(1) + "\n";
}

AnalysisBundle bundle_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Parse, std::string("bundle: malformed JSON: ") + e.what());
  }
  try {
    AnalysisBundle b;
    b.config_hash = doc.at("config_hash").get<std::string>();
    b.version = doc.at("version").get<std::string>();
    b.n_records = doc.at("n_records").get<std::size_t>();
    b.alpha = doc.at("alpha").get<double>();
    if (!doc.at("correlations").is_null()) {
      CorrelationMatrix c;
      c.n = doc["correlations"].at("n").get<std::size_t>();
      for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) c.r[i][j] = get_opt(doc["correlations"].at("r").at(i).at(j));
      }
      b.correlations = c;
    }
    for (const auto& s : doc.at("screening")) {
      ScreeningResult r;
      r.response = s.at("response").get<std::string>();
      r.alpha = s.at("alpha").get<double>();
      r.selected = screening_rows_from(s.at("selected"));
      r.rejected = screening_rows_from(s.at("rejected"));
      for (const auto& f : s.at("failed")) r.failed.emplace_back(f.at("variable").get<std::string>(), f.at("reason").get<std::string>());
      b.screening.push_back(std::move(r));
    }
    for (const auto& a : doc.at("aic")) {
      AicReport r;
      r.response = a.at("response").get<std::string>();
      r.selection.best = a.at("best").get<std::size_t>();
      for (const auto& e : a.at("entries")) {
        r.selection.entries.push_back({e.at("formula").get<std::string>(), get_opt(e.at("aic")),
                                       e.at("params").get<std::size_t>(), get_opt(e.at("r2")),
                                       e.at("error").get<std::string>()});
      }
      b.aic.push_back(std::move(r));
    }
    for (const auto& m : doc.at("models")) {
      ModelReport r;
      r.formula = m.at("formula").get<std::string>();
      r.n = m.at("n").get<std::size_t>();
      r.params = m.at("params").get<std::size_t>();
      r.r2 = get_num(m.at("r2"));
      r.adj_r2 = get_num(m.at("adj_r2"));
      r.aic = get_num(m.at("aic"));
      r.f_stat = get_num(m.at("f"));
      r.f_pvalue = get_num(m.at("f_p"));
      for (const auto& c : m.at("coefficients")) {
        r.coefficients.push_back({c.at("label").get<std::string>(), get_num(c.at("estimate")), get_num(c.at("se")),
                                  get_num(c.at("t")), get_num(c.at("p"))});
      }
      const json& g = m.at("gram");
      r.gram = {get_num(g.at("min_eigenvalue")), get_num(g.at("max_eigenvalue")), get_num(g.at("threshold")),
                g.at("collinear").get<bool>()};
      r.anova = anova_from(m.at("anova"));
      b.models.push_back(std::move(r));
    }
    for (const auto& p : doc.at("pairwise")) {
      b.pairwise.push_back({p.at("name").get<std::string>(), p.at("split").get<std::string>(),
                            p.at("split_level").get<std::string>(), p.at("n").get<std::size_t>(),
                            pairwise_from(p.at("matrix"))});
    }
    for (const auto& d : doc.at("diagnostics")) {
      DiagnosticsReport r;
      r.formula = d.at("formula").get<std::string>();
      r.bundle.qq = pairs_from(d.at("qq"));
      r.bundle.scale_location = pairs_from(d.at("scale_location"));
      r.bundle.leverage = pairs_from(d.at("leverage"));
      for (const auto& v : d.at("standardized")) r.bundle.standardized.push_back(get_num(v));
      b.diagnostics.push_back(std::move(r));
    }
    for (const auto& w : doc.at("warnings")) {
      b.warnings.push_back({w.at("stage").get<std::string>(), w.at("model").get<std::string>(),
                            w.at("reason").get<std::string>()});
    }
    return b;
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("bundle: ") + e.what());
  }
}

}  // namespace efcil
