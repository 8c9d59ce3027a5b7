#include "efcil/stats.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <set>

#include "efcil/distributions.hpp"
#include "efcil/error.hpp"
#include "efcil/linalg.hpp"
#include "efcil/text.hpp"

namespace efcil {

namespace {

constexpr double kRankThreshold = 1e-10;
constexpr double kAicTieTolerance = 1e-9;

std::string lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct RegistryEntry {
  const char* key;  // lower-case spelling accepted on input
  const char* name;
  VariableKind kind;
};

constexpr RegistryEntry kRegistry[] = {
    {"train", "Train", VariableKind::Categorical},
    {"incr", "Incr", VariableKind::Categorical},
    {"data", "Data", VariableKind::Categorical},
    {"b", "B", VariableKind::Numeric},
    {"scenario_b", "B", VariableKind::Numeric},
    {"n", "N", VariableKind::Numeric},
    {"n1", "N1", VariableKind::Numeric},
    {"n_mean", "n_mean", VariableKind::Numeric},
    {"small", "Small", VariableKind::Numeric},
    {"width", "Width", VariableKind::Numeric},
    {"acc1", "Acc1", VariableKind::Numeric},
    {"avg_acc", "avg_acc", VariableKind::Numeric},
    {"acc", "avg_acc", VariableKind::Numeric},
    {"forgetting", "forgetting", VariableKind::Numeric},
    {"f", "forgetting", VariableKind::Numeric},
    {"acck", "AccK", VariableKind::Numeric},
    {"acc_k", "AccK", VariableKind::Numeric},
};

std::string level_label(const std::string& variable, const std::string& level) {
  return variable + "[" + level + "]";
}

/// One factor of a term: either a numeric value or the indicator columns of a
/// categorical.
struct FactorColumns {
  std::vector<std::string> labels;
  std::vector<Eigen::VectorXd> values;
};

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x, const std::vector<std::size_t>& columns) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(columns[j]));
  return out;
}

std::vector<std::string> sorted_vars(const Term& term) {
  std::vector<std::string> vars = term;
  std::sort(vars.begin(), vars.end());
  return vars;
}

/// True when every variable of `inner` appears in `outer`.
bool term_contains(const Term& outer, const Term& inner) {
  const auto o = sorted_vars(outer);
  const auto i = sorted_vars(inner);
  return std::includes(o.begin(), o.end(), i.begin(), i.end());
}

std::string join_labels(const std::vector<std::string>& labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i > 0) out += ", ";
    out += labels[i];
  }
  return out;
}

}  // namespace

Variable lookup_variable(const std::string& name) {
  const std::string key = lower(trim(name));
  for (const auto& entry : kRegistry) {
    if (key == entry.key) return {entry.name, entry.kind};
  }
  fail(ErrorCode::InvalidArgument, "unknown variable '" + std::string(trim(name)) + "'");
}

std::string categorical_value(const RunRecord& r, const std::string& variable) {
  const Variable v = lookup_variable(variable);
  if (v.name == "Train") return r.train;
  if (v.name == "Incr") return r.incr;
  if (v.name == "Data") return r.data;
  fail(ErrorCode::InvalidArgument, "variable '" + v.name + "' is not categorical");
}

double numeric_value(const RunRecord& r, const std::string& variable) {
  const Variable v = lookup_variable(variable);
  if (v.name == "B") return r.scenario_b;
  if (v.name == "N") return r.n_classes;
  if (v.name == "N1") return r.n1;
  if (v.name == "n_mean") return r.n_mean;
  if (v.name == "Small") return r.small;
  if (v.name == "Width") return r.width;
  if (v.name == "Acc1") return r.acc1;
  if (v.name == "avg_acc") return r.avg_acc;
  if (v.name == "forgetting") return r.forgetting;
  if (v.name == "AccK") return r.acc_k;
  fail(ErrorCode::InvalidArgument, "variable '" + v.name + "' is not numeric");
}

std::string term_name(const Term& term) {
  std::string out;
  for (std::size_t i = 0; i < term.size(); ++i) {
    if (i > 0) out += ":";
    out += term[i];
  }
  return out;
}

std::string Formula::to_string() const {
  std::string out = response + " ~ ";
  if (terms.empty()) return out + "1";
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i > 0) out += " + ";
    out += term_name(terms[i]);
  }
  return out;
}

Formula parse_formula(const std::string& text) {
  const auto tilde = text.find('~');
  if (tilde == std::string::npos || text.find('~', tilde + 1) != std::string::npos) {
    fail(ErrorCode::Parse, "formula '" + text + "': expected exactly one '~'");
  }
  const std::string lhs(trim(std::string_view(text).substr(0, tilde)));
  if (lhs.empty()) fail(ErrorCode::Parse, "formula '" + text + "': missing response");
  const Variable response = lookup_variable(lhs);
  if (response.kind != VariableKind::Numeric) {
    fail(ErrorCode::Parse, "formula '" + text + "': response '" + response.name + "' must be numeric");
  }
  Formula formula;
  formula.response = response.name;
  std::set<std::vector<std::string>> seen;
  for (const auto field : split_fields(std::string_view(text).substr(tilde + 1), '+')) {
    const auto token = trim(field);
    if (token.empty()) fail(ErrorCode::Parse, "formula '" + text + "': empty term");
    if (token == "1") continue;
    Term term;
    for (const auto part : split_fields(token, ':')) {
      const auto name = trim(part);
      if (name.empty()) fail(ErrorCode::Parse, "formula '" + text + "': empty factor in term '" + std::string(token) + "'");
      const Variable v = lookup_variable(std::string(name));
      if (v.name == response.name) {
        fail(ErrorCode::Parse, "formula '" + text + "': response '" + v.name + "' also used as a regressor");
      }
      if (std::find(term.begin(), term.end(), v.name) != term.end()) {
        fail(ErrorCode::Parse, "formula '" + text + "': variable '" + v.name + "' repeated inside a term");
      }
      term.push_back(v.name);
    }
    if (!seen.insert(sorted_vars(term)).second) {
      fail(ErrorCode::Parse, "formula '" + text + "': duplicate variable '" + term_name(term) + "'");
    }
    formula.terms.push_back(std::move(term));
  }
  return formula;
}

std::size_t DesignMatrix::column(const std::string& label) const {
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].label == label) return j;
  }
  fail(ErrorCode::InvalidArgument, "design has no column '" + label + "'");
}

DesignMatrix encode_design(const std::vector<RunRecord>& records, const Formula& formula,
                           const EncodeOptions& options) {
  if (records.empty()) fail(ErrorCode::InvalidArgument, "encode design: no records");
  const auto n = static_cast<Eigen::Index>(records.size());
  DesignMatrix design;
  design.response = formula.response;
  design.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) design.y(i) = numeric_value(records[static_cast<std::size_t>(i)], formula.response);

  // Level sets and references for every categorical in the formula.
  for (const auto& term : formula.terms) {
    for (const auto& var : term) {
      if (lookup_variable(var).kind != VariableKind::Categorical || design.levels.count(var) > 0) continue;
      std::set<std::string> observed;
      for (const auto& r : records) observed.insert(categorical_value(r, var));
      std::vector<std::string> levels(observed.begin(), observed.end());
      const auto declared = options.declared_levels.find(var);
      if (declared != options.declared_levels.end()) {
        const std::set<std::string> allowed(declared->second.begin(), declared->second.end());
        for (const auto& level : levels) {
          if (allowed.count(level) == 0) fail(ErrorCode::InvalidArgument, var + ": unknown level '" + level + "'");
        }
        for (const auto& level : allowed) {
          if (observed.count(level) == 0) fail(ErrorCode::InvalidArgument, var + ": level '" + level + "' has no records");
        }
      }
      std::string reference = levels.front();
      const auto ref = options.reference_levels.find(var);
      if (ref != options.reference_levels.end()) {
        if (observed.count(ref->second) == 0) {
          fail(ErrorCode::InvalidArgument, var + ": reference level '" + ref->second + "' has no records");
        }
        reference = ref->second;
      }
      design.levels[var] = levels;
      design.references[var] = reference;
    }
  }

  std::vector<Eigen::VectorXd> columns;
  columns.push_back(Eigen::VectorXd::Ones(n));
  design.columns.push_back({"(Intercept)", "(Intercept)"});
  for (const auto& term : formula.terms) {
    // Expand the term as a product of its factors' columns, first factor slowest.
    FactorColumns acc{{""}, {Eigen::VectorXd::Ones(n)}};
    for (const auto& var : term) {
      FactorColumns factor;
      if (lookup_variable(var).kind == VariableKind::Numeric) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = numeric_value(records[static_cast<std::size_t>(i)], var);
        factor.labels.push_back(var);
        factor.values.push_back(std::move(v));
      } else {
        for (const auto& level : design.levels.at(var)) {
          if (level == design.references.at(var)) continue;
          Eigen::VectorXd v(n);
          for (Eigen::Index i = 0; i < n; ++i) {
            v(i) = categorical_value(records[static_cast<std::size_t>(i)], var) == level ? 1.0 : 0.0;
          }
          factor.labels.push_back(level_label(var, level));
          factor.values.push_back(std::move(v));
        }
      }
      FactorColumns next;
      for (std::size_t a = 0; a < acc.labels.size(); ++a) {
        for (std::size_t b = 0; b < factor.labels.size(); ++b) {
          next.labels.push_back(acc.labels[a].empty() ? factor.labels[b] : acc.labels[a] + ":" + factor.labels[b]);
          next.values.push_back(acc.values[a].cwiseProduct(factor.values[b]));
        }
      }
      acc = std::move(next);
    }
    TermSpan span{term_name(term), columns.size(), columns.size()};
    for (std::size_t j = 0; j < acc.labels.size(); ++j) {
      columns.push_back(std::move(acc.values[j]));
      design.columns.push_back({span.term, acc.labels[j]});
    }
    span.end = columns.size();
    design.terms.push_back(span);
  }

  const auto p = static_cast<Eigen::Index>(columns.size());
  if (n <= p) {
    fail(ErrorCode::InvalidArgument, "underdetermined design: " + std::to_string(n) + " rows for " +
                                         std::to_string(p) + " parameters in '" + formula.to_string() + "'");
  }
  design.x.resize(n, p);
  for (Eigen::Index j = 0; j < p; ++j) design.x.col(j) = columns[static_cast<std::size_t>(j)];
  return design;
}

RegressionFit ols_fit(const DesignMatrix& design) {
  const Eigen::Index n = design.x.rows();
  const Eigen::Index p = design.x.cols();
  if (p == 0) fail(ErrorCode::InvalidArgument, "ols: design has no columns");
  if (n <= p) {
    fail(ErrorCode::InvalidArgument,
         "underdetermined design: " + std::to_string(n) + " rows for " + std::to_string(p) + " parameters");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.x);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < p) {
    std::vector<std::string> dropped;
    for (Eigen::Index k = qr.rank(); k < p; ++k) {
      const auto col = static_cast<std::size_t>(qr.colsPermutation().indices()(k));
      dropped.push_back(col < design.columns.size() ? design.columns[col].label : "column " + std::to_string(col));
    }
    fail(ErrorCode::Numeric, "rank-deficient design (rank " + std::to_string(qr.rank()) + " of " +
                                 std::to_string(p) + "); collinear columns: " + join_labels(dropped));
  }

  RegressionFit fit;
  fit.n = static_cast<std::size_t>(n);
  fit.p = static_cast<std::size_t>(p);
  fit.df_resid = fit.n - fit.p;
  for (const auto& c : design.columns) fit.labels.push_back(c.label);
  fit.coefficients = qr.solve(design.y);
  fit.fitted = design.x * fit.coefficients;
  fit.residuals = design.y - fit.fitted;
  fit.ssr = fit.residuals.squaredNorm();
  const double mean = design.y.mean();
  fit.sst = (design.y.array() - mean).matrix().squaredNorm();
  fit.sigma2 = fit.ssr / static_cast<double>(fit.df_resid);

  // (X^T X)^-1 = P R^-1 R^-T P^T from X P = Q R.
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.template triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd inner = r_inv * r_inv.transpose();
  fit.xtx_inverse = qr.colsPermutation() * inner * qr.colsPermutation().transpose();

  fit.std_errors.resize(p);
  fit.t_stats.resize(p);
  fit.p_values.resize(p);
  const double df = static_cast<double>(fit.df_resid);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double se = std::sqrt(std::max(0.0, fit.sigma2 * fit.xtx_inverse(j, j)));
    fit.std_errors(j) = se;
    const double beta = fit.coefficients(j);
    if (se > 0.0) {
      fit.t_stats(j) = beta / se;
      fit.p_values(j) = student_t_pvalue(fit.t_stats(j), df);
    } else {
      // A perfect fit: the coefficient is known exactly.
      fit.t_stats(j) = beta == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), beta);
      fit.p_values(j) = beta == 0.0 ? 1.0 : 0.0;
    }
  }

  fit.r2 = fit.sst > 0.0 ? std::clamp(1.0 - fit.ssr / fit.sst, 0.0, 1.0) : 0.0;
  fit.adj_r2 = 1.0 - (1.0 - fit.r2) * static_cast<double>(n - 1) / df;
  const double nd = static_cast<double>(n);
  fit.aic = 2.0 * static_cast<double>(p + 1) + nd * (std::log(2.0 * std::numbers::pi * fit.ssr / nd) + 1.0);
  if (p > 1 && fit.sst > 0.0) {
    const double df1 = static_cast<double>(p - 1);
    const double explained = std::max(0.0, fit.sst - fit.ssr);
    if (fit.ssr > 0.0) {
      fit.f_stat = (explained / df1) / (fit.ssr / df);
      fit.f_pvalue = f_pvalue(fit.f_stat, df1, df);
    } else {
      fit.f_stat = std::numeric_limits<double>::infinity();
      fit.f_pvalue = 0.0;
    }
  }
  return fit;
}

double fit_ssr(const DesignMatrix& design, const std::vector<std::size_t>& columns) {
  if (columns.empty()) return design.y.squaredNorm();
  const Eigen::MatrixXd x = select_columns(design.x, columns);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < x.cols()) {
    std::vector<std::string> dropped;
    for (Eigen::Index k = qr.rank(); k < x.cols(); ++k) {
      dropped.push_back(design.columns[columns[static_cast<std::size_t>(qr.colsPermutation().indices()(k))]].label);
    }
    fail(ErrorCode::Numeric, "rank-deficient reduced model; collinear columns: " + join_labels(dropped));
  }
  const Eigen::VectorXd beta = qr.solve(design.y);
  return (design.y - x * beta).squaredNorm();
}

ScreeningResult screen_variables(const std::vector<RunRecord>& records, const std::string& response,
                                 const std::vector<std::string>& candidates, double alpha) {
  if (candidates.empty()) fail(ErrorCode::InvalidArgument, "screening: no candidate variables");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::InvalidArgument, "screening: alpha must be in (0, 1)");
  ScreeningResult result;
  result.response = lookup_variable(response).name;
  result.alpha = alpha;
  for (const auto& candidate : candidates) {
    try {
      const Formula formula = parse_formula(result.response + " ~ " + candidate);
      const DesignMatrix design = encode_design(records, formula);
      const RegressionFit fit = ols_fit(design);
      ScreeningRow row{formula.terms.front().front(), fit.f_pvalue, fit.r2, fit.p - 1};
      if (row.p_value < alpha) {
        result.selected.push_back(row);
      } else {
        result.rejected.push_back(row);
      }
    } catch (const Error& e) {
      result.failed.emplace_back(candidate, e.what());
    }
  }
  std::stable_sort(result.selected.begin(), result.selected.end(),
                   [](const ScreeningRow& a, const ScreeningRow& b) { return a.r2 > b.r2; });
  return result;
}

AicSelection select_model_aic(const std::vector<RunRecord>& records, const std::vector<Formula>& formulas,
                              const EncodeOptions& options) {
  if (formulas.empty()) fail(ErrorCode::InvalidArgument, "AIC selection: no candidate formulas");
  AicSelection selection;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < formulas.size(); ++i) {
    AicEntry entry;
    entry.formula = formulas[i].to_string();
    try {
      const RegressionFit fit = ols_fit(encode_design(records, formulas[i], options));
      entry.aic = fit.aic;
      entry.r2 = fit.r2;
      entry.params = fit.p;
    } catch (const Error& e) {
      entry.error = e.what();
    }
    selection.entries.push_back(entry);
    if (!entry.aic) continue;
    if (!best) {
      best = i;
      continue;
    }
    const AicEntry& current = selection.entries[*best];
    const double a = *entry.aic;
    const double b = *current.aic;
    const double tol = kAicTieTolerance * std::max({1.0, std::fabs(a), std::fabs(b)});
    if (a < b - tol || (std::fabs(a - b) <= tol && entry.params < current.params)) best = i;
  }
  if (!best) fail(ErrorCode::Infeasible, "AIC selection: no candidate formula could be fitted");
  selection.best = *best;
  return selection;
}

std::vector<AnovaRow> AnovaTable::ranked() const {
  std::vector<AnovaRow> out = rows;
  std::stable_sort(out.begin(), out.end(),
                   [](const AnovaRow& a, const AnovaRow& b) { return a.partial_eta2 > b.partial_eta2; });
  return out;
}

AnovaTable anova_partial_eta2(const DesignMatrix& design, const std::string& formula_text) {
  const RegressionFit full = ols_fit(design);
  AnovaTable table;
  table.formula = formula_text;
  table.ss_resid = full.ssr;
  table.df_resid = full.df_resid;
  table.r2 = full.r2;
  table.n = full.n;

  std::vector<Term> terms;
  for (const auto& span : design.terms) {
    Term t;
    for (const auto part : split_fields(span.term, ':')) t.emplace_back(part);
    terms.push_back(std::move(t));
  }
  const double df_res = static_cast<double>(full.df_resid);
  for (std::size_t t = 0; t < design.terms.size(); ++t) {
    // Reduced model: intercept plus every term that does not contain term t.
    std::vector<std::size_t> reduced{0};
    for (std::size_t u = 0; u < design.terms.size(); ++u) {
      if (u == t || term_contains(terms[u], terms[t])) continue;
      for (std::size_t j = design.terms[u].begin; j < design.terms[u].end; ++j) reduced.push_back(j);
    }
    std::vector<std::size_t> augmented = reduced;
    for (std::size_t j = design.terms[t].begin; j < design.terms[t].end; ++j) augmented.push_back(j);
    std::sort(reduced.begin(), reduced.end());
    std::sort(augmented.begin(), augmented.end());
    double ss = 0.0;
    try {
      ss = std::max(0.0, fit_ssr(design, reduced) - fit_ssr(design, augmented));
    } catch (const Error& e) {
      fail(ErrorCode::Numeric, "ANOVA term '" + design.terms[t].term + "': " + e.what());
    }
    AnovaRow row;
    row.term = design.terms[t].term;
    row.ss = ss;
    row.df = design.terms[t].df();
    if (full.ssr > 0.0) {
      row.f_stat = (ss / static_cast<double>(row.df)) / (full.ssr / df_res);
      row.p_value = f_pvalue(row.f_stat, static_cast<double>(row.df), df_res);
    } else {
      row.f_stat = ss > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
      row.p_value = ss > 0.0 ? 0.0 : 1.0;
    }
    const double denom = ss + full.ssr;
    row.partial_eta2 = denom > 0.0 ? ss / denom : 0.0;
    table.rows.push_back(row);
  }
  return table;
}

AnovaTable anova_partial_eta2(const std::vector<RunRecord>& records, const Formula& formula,
                              const EncodeOptions& options) {
  return anova_partial_eta2(encode_design(records, formula, options), formula.to_string());
}

PairwiseMatrix pairwise_comparison(const std::vector<RunRecord>& records, const Formula& formula,
                                   const std::string& factor, double alpha, const EncodeOptions& options) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::InvalidArgument, "pairwise: alpha must be in (0, 1)");
  const Variable var = lookup_variable(factor);
  if (var.kind != VariableKind::Categorical) fail(ErrorCode::InvalidArgument, "pairwise: '" + var.name + "' is not categorical");
  const bool present = std::any_of(formula.terms.begin(), formula.terms.end(),
                                   [&](const Term& t) { return t.size() == 1 && t.front() == var.name; });
  if (!present) fail(ErrorCode::InvalidArgument, "pairwise: '" + var.name + "' is not a main term of " + formula.to_string());

  std::set<std::string> observed;
  for (const auto& r : records) observed.insert(categorical_value(r, var.name));
  std::set<std::string> all = observed;
  EncodeOptions base = options;
  const auto declared = options.declared_levels.find(var.name);
  if (declared != options.declared_levels.end()) {
    for (const auto& level : observed) {
      if (std::find(declared->second.begin(), declared->second.end(), level) == declared->second.end()) {
        fail(ErrorCode::InvalidArgument, var.name + ": unknown level '" + level + "'");
      }
    }
    all.insert(declared->second.begin(), declared->second.end());
    base.declared_levels.erase(var.name);
  }

  PairwiseMatrix out;
  out.factor = var.name;
  out.formula = formula.to_string();
  out.levels.assign(all.begin(), all.end());
  out.alpha = alpha;
  const std::size_t levels = out.levels.size();
  if (levels < 1) fail(ErrorCode::InvalidArgument, "pairwise: no levels");
  out.gain.assign(levels, std::vector<std::optional<double>>(levels));
  out.p_value.assign(levels, std::vector<std::optional<double>>(levels));
  out.significant.assign(levels, std::vector<bool>(levels, false));
  out.significant_uncorrected.assign(levels, std::vector<bool>(levels, false));

  // raw[i][j]: (coefficient, p) of level i in the refit with reference j.
  std::vector<std::vector<std::optional<std::pair<double, double>>>> raw(
      levels, std::vector<std::optional<std::pair<double, double>>>(levels));
  for (std::size_t j = 0; j < levels; ++j) {
    if (observed.count(out.levels[j]) == 0) continue;
    EncodeOptions opts = base;
    opts.reference_levels[var.name] = out.levels[j];
    try {
      const DesignMatrix design = encode_design(records, formula, opts);
      const RegressionFit fit = ols_fit(design);
      for (std::size_t i = 0; i < levels; ++i) {
        if (i == j || observed.count(out.levels[i]) == 0) continue;
        const std::size_t col = design.column(level_label(var.name, out.levels[i]));
        raw[i][j] = std::make_pair(fit.coefficients(static_cast<Eigen::Index>(col)),
                                   fit.p_values(static_cast<Eigen::Index>(col)));
      }
    } catch (const Error&) {
      // Every pair against this reference stays inestimable unless the
      // mirrored refit supplies it.
    }
  }

  for (std::size_t i = 0; i < levels; ++i) {
    if (observed.count(out.levels[i]) > 0) {
      out.gain[i][i] = 0.0;
    }
    for (std::size_t j = i + 1; j < levels; ++j) {
      const auto& a = raw[i][j];  // level i against reference j
      const auto& b = raw[j][i];  // level j against reference i
      if (!a && !b) continue;
      double g = 0.0;
      double p = 0.0;
      if (a && b) {
        g = 0.5 * (a->first - b->first);
        p = std::max(a->second, b->second);
        out.max_refit_discrepancy = std::max(out.max_refit_discrepancy, std::fabs(a->first + b->first));
      } else if (a) {
        g = a->first;
        p = a->second;
      } else {
        g = -b->first;
        p = b->second;
      }
      out.gain[i][j] = g;
      out.gain[j][i] = -g;
      out.p_value[i][j] = p;
      out.p_value[j][i] = p;
      ++out.tests;
    }
  }
  out.threshold = out.tests > 0 ? alpha / static_cast<double>(out.tests) : alpha;
  for (std::size_t i = 0; i < levels; ++i) {
    for (std::size_t j = 0; j < levels; ++j) {
      if (i == j || !out.p_value[i][j]) continue;
      out.significant_uncorrected[i][j] = *out.p_value[i][j] < alpha;
      out.significant[i][j] = *out.p_value[i][j] < out.threshold;
    }
  }
  return out;
}

Eigen::VectorXd leverages(const DesignMatrix& design) {
  const Eigen::Index n = design.x.rows();
  const Eigen::Index p = design.x.cols();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.x);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < p) fail(ErrorCode::Numeric, "leverage: rank-deficient design");
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
  return q.rowwise().squaredNorm();
}

DiagnosticBundle diagnostics(const RegressionFit& fit, const DesignMatrix& design) {
  const auto n = static_cast<std::size_t>(design.x.rows());
  if (static_cast<std::size_t>(fit.residuals.size()) != n) {
    fail(ErrorCode::InvalidArgument, "diagnostics: fit and design have different row counts");
  }
  const Eigen::VectorXd h = leverages(design);
  // Residuals at rounding level mean an exact fit; standardizing them would
  // only amplify noise.
  const bool exact = std::sqrt(fit.ssr) <= 1e-12 * std::max(1.0, fit.fitted.norm());
  const double sigma = exact ? 0.0 : std::sqrt(fit.sigma2);
  DiagnosticBundle bundle;
  bundle.standardized.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double room = 1.0 - h(ii);
    const double scale = sigma * std::sqrt(std::max(room, 0.0));
    bundle.standardized[i] = scale > 0.0 ? fit.residuals(ii) / scale : 0.0;
  }
  std::vector<double> sorted = bundle.standardized;
  std::sort(sorted.begin(), sorted.end());
  const double nd = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    bundle.qq.emplace_back(inv_norm_cdf((static_cast<double>(i) + 0.5) / nd), sorted[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    bundle.scale_location.emplace_back(fit.fitted(ii), std::sqrt(std::fabs(bundle.standardized[i])));
    bundle.leverage.emplace_back(h(ii), bundle.standardized[i]);
  }
  return bundle;
}

GramCheck gram_min_eigenvalue(const DesignMatrix& design, double relative_threshold) {
  if (design.x.size() == 0) fail(ErrorCode::InvalidArgument, "gram check: empty design");
  const Eigen::MatrixXd gram = design.x.transpose() * design.x;
  const std::vector<double> eig = jacobi_eigenvalues(gram);
  GramCheck check;
  check.min_eigenvalue = eig.front();
  check.max_eigenvalue = eig.back();
  check.threshold = relative_threshold * std::max(0.0, check.max_eigenvalue);
  check.collinear = check.min_eigenvalue < check.threshold;
  return check;
}

}  // namespace efcil
