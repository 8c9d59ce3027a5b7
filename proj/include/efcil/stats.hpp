#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace efcil {

/// One experiment: its factor levels and the four metrics.
struct RunRecord {
  std::string run_id;
  std::string data;
  std::string train;
  std::string incr;
  int scenario_b = 0;  // 1 when half of the classes come first
  int n_classes = 0;
  double n1 = 0.0;  // train samples in the first step
  double n_mean = 0.0;
  int small = 0;
  double width = 0.0;
  double acc1 = 0.0;
  double avg_acc = 0.0;
  double forgetting = 0.0;
  double acc_k = 0.0;
};

enum class VariableKind { Categorical, Numeric };

/// Canonical variable names: Train, Incr, Data (categorical); B, N, N1,
/// n_mean, Small, Width, Acc1, avg_acc, forgetting, AccK (numeric).
/// Lookup is case-insensitive and accepts a few aliases (F, Acc, acc_k).
struct Variable {
  std::string name;
  VariableKind kind;
};

Variable lookup_variable(const std::string& name);
std::string categorical_value(const RunRecord& r, const std::string& variable);
double numeric_value(const RunRecord& r, const std::string& variable);

/// A term is one variable or a product of variables ("Train:Incr").
using Term = std::vector<std::string>;
std::string term_name(const Term& term);

/// response ~ term + term + ... with an implicit intercept. "y ~ 1" is the
/// intercept-only model.
struct Formula {
  std::string response;
  std::vector<Term> terms;

  std::string to_string() const;
};

Formula parse_formula(const std::string& text);

struct EncodeOptions {
  /// Reference level per categorical; default is the lexicographically first level.
  std::map<std::string, std::string> reference_levels;
  /// Declared level sets. A declared level with no records is an error.
  std::map<std::string, std::vector<std::string>> declared_levels;
};

struct DesignColumn {
  std::string term;
  std::string label;  // e.g. "Train[ssl]" or "Train[ssl]:Incr[bsil]"
};

struct TermSpan {
  std::string term;
  std::size_t begin = 0;
  std::size_t end = 0;  // one past the last column
  std::size_t df() const { return end - begin; }
};

/// Response vector and model matrix. Column 0 is the intercept; each
/// categorical with L levels contributes L-1 indicator columns, reference
/// omitted, in declaration order with levels sorted lexicographically.
struct DesignMatrix {
  std::string response;
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
  std::vector<DesignColumn> columns;
  std::vector<TermSpan> terms;
  std::map<std::string, std::string> references;
  std::map<std::string, std::vector<std::string>> levels;

  /// Column index by label; throws when absent.
  std::size_t column(const std::string& label) const;
};

DesignMatrix encode_design(const std::vector<RunRecord>& records, const Formula& formula,
                           const EncodeOptions& options = {});

/// Ordinary least squares via column-pivoted Householder QR.
struct RegressionFit {
  std::vector<std::string> labels;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd std_errors;
  Eigen::VectorXd t_stats;
  Eigen::VectorXd p_values;
  Eigen::VectorXd fitted;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd xtx_inverse;
  double ssr = 0.0;  // residual sum of squares
  double sst = 0.0;  // centred total sum of squares
  double sigma2 = 0.0;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  /// 2(p+1) + n[ln(2 pi SSR/n) + 1]: Gaussian log-likelihood with the
  /// variance counted as a parameter.
  double aic = 0.0;
  double f_stat = 0.0;     // overall F against the intercept-only model
  double f_pvalue = 1.0;
  std::size_t n = 0;
  std::size_t p = 0;
  std::size_t df_resid = 0;
};

/// Throws Error(Numeric) naming the collinear columns when X is rank
/// deficient, and Error(InvalidArgument) when n <= p.
RegressionFit ols_fit(const DesignMatrix& design);

/// Residual sum of squares of y on the given columns of design.x.
double fit_ssr(const DesignMatrix& design, const std::vector<std::size_t>& columns);

struct ScreeningRow {
  std::string variable;
  double p_value = 1.0;
  double r2 = 0.0;
  std::size_t df = 0;
};

struct ScreeningResult {
  std::string response;
  double alpha = 0.05;
  std::vector<ScreeningRow> selected;  // p < alpha, by decreasing R^2
  std::vector<ScreeningRow> rejected;  // p >= alpha, in candidate order
  std::vector<std::pair<std::string, std::string>> failed;  // variable, reason
};

/// One-variable regressions of `response` on each candidate.
ScreeningResult screen_variables(const std::vector<RunRecord>& records, const std::string& response,
                                 const std::vector<std::string>& candidates, double alpha);

struct AicEntry {
  std::string formula;
  std::optional<double> aic;
  std::size_t params = 0;
  std::optional<double> r2;
  std::string error;
};

struct AicSelection {
  std::size_t best = 0;
  std::vector<AicEntry> entries;
};

/// Fits every formula and picks the smallest AIC; near ties (relative 1e-9)
/// go to fewer parameters, then declaration order. Failing formulas are kept
/// with their error and skipped. Throws Error(Infeasible) if none fits.
AicSelection select_model_aic(const std::vector<RunRecord>& records, const std::vector<Formula>& formulas,
                              const EncodeOptions& options = {});

struct AnovaRow {
  std::string term;
  double ss = 0.0;
  std::size_t df = 0;
  double f_stat = 0.0;
  double p_value = 1.0;
  double partial_eta2 = 0.0;
};

/// Type-II sums of squares: each term is tested against the model holding
/// every term that does not contain it. partial eta^2 = SS / (SS + SS_res).
struct AnovaTable {
  std::string formula;
  std::vector<AnovaRow> rows;  // formula order
  double ss_resid = 0.0;
  std::size_t df_resid = 0;
  double r2 = 0.0;
  std::size_t n = 0;

  /// Rows sorted by decreasing partial eta^2 (stable).
  std::vector<AnovaRow> ranked() const;
};

AnovaTable anova_partial_eta2(const std::vector<RunRecord>& records, const Formula& formula,
                              const EncodeOptions& options = {});
AnovaTable anova_partial_eta2(const DesignMatrix& design, const std::string& formula_text);

/// gain[i][j]: effect of level i relative to level j, read from the refit
/// that uses j as reference. Kept exactly antisymmetric; the raw asymmetry
/// between the two refits is reported in `max_refit_discrepancy`.
struct PairwiseMatrix {
  std::string factor;
  std::string formula;
  std::vector<std::string> levels;
  std::vector<std::vector<std::optional<double>>> gain;
  std::vector<std::vector<std::optional<double>>> p_value;
  std::vector<std::vector<bool>> significant;              // p < alpha / m
  std::vector<std::vector<bool>> significant_uncorrected;  // p < alpha
  std::size_t tests = 0;  // m = number of estimable unordered pairs
  double alpha = 0.05;
  double threshold = 0.05;  // alpha / m
  double max_refit_discrepancy = 0.0;
};

/// Refits `formula` once per level of `factor` as the reference. Levels in
/// options.declared_levels[factor] without records are kept and flagged as
/// inestimable (empty entries).
PairwiseMatrix pairwise_comparison(const std::vector<RunRecord>& records, const Formula& formula,
                                   const std::string& factor, double alpha, const EncodeOptions& options = {});

struct DiagnosticBundle {
  std::vector<std::pair<double, double>> qq;               // (normal quantile, sorted std residual)
  std::vector<std::pair<double, double>> scale_location;   // (fitted, sqrt|std residual|)
  std::vector<std::pair<double, double>> leverage;         // (h_ii, std residual)
  std::vector<double> standardized;                        // per observation
};

/// Internally studentized residuals e_i / (sigma sqrt(1 - h_ii)) with
/// Q-Q positions Phi^-1((i - 0.5)/n).
DiagnosticBundle diagnostics(const RegressionFit& fit, const DesignMatrix& design);

/// Diagonal of the hat matrix X (X^T X)^-1 X^T.
Eigen::VectorXd leverages(const DesignMatrix& design);

struct GramCheck {
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  double threshold = 0.0;  // relative_threshold * max_eigenvalue
  bool collinear = false;
};

GramCheck gram_min_eigenvalue(const DesignMatrix& design, double relative_threshold = 1e-8);

}  // namespace efcil
