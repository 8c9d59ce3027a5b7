#pragma once

#include <optional>
#include <string>
#include <vector>

#include "efcil/config.hpp"
#include "efcil/metrics.hpp"
#include "efcil/stats.hpp"

namespace efcil {

struct AnalysisWarning {
  std::string stage;  // "screening", "aic", "anova", "pairwise", "diagnostics", "correlations"
  std::string model;
  std::string reason;
};

struct CoefficientRow {
  std::string label;
  double estimate = 0.0;
  double std_error = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
};

struct ModelReport {
  std::string formula;
  std::size_t n = 0;
  std::size_t params = 0;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  double aic = 0.0;
  double f_stat = 0.0;
  double f_pvalue = 1.0;
  std::vector<CoefficientRow> coefficients;
  GramCheck gram;
  AnovaTable anova;
};

struct AicReport {
  std::string response;
  AicSelection selection;
};

struct PairwiseReport {
  std::string name;          // "overall" or "<Variable>=<level>"
  std::string split;         // empty for the overall matrix
  std::string split_level;
  std::size_t n = 0;
  PairwiseMatrix matrix;
};

struct DiagnosticsReport {
  std::string formula;
  DiagnosticBundle bundle;
};

/// Everything cmd_analyze computes, in the order it is reported.
struct AnalysisBundle {
  std::string config_hash;
  std::string version;
  std::size_t n_records = 0;
  double alpha = 0.05;
  std::optional<CorrelationMatrix> correlations;
  std::vector<ScreeningResult> screening;
  std::vector<AicReport> aic;
  std::vector<ModelReport> models;  // one per configured ANOVA formula that fitted
  std::vector<PairwiseReport> pairwise;
  std::vector<DiagnosticsReport> diagnostics;
  std::vector<AnalysisWarning> warnings;
};

/// Runs the methodology on `records`: correlations, screening, AIC ladders,
/// ANOVA with Gram check, pairwise matrices (overall and per split level),
/// then diagnostics of each ladder's AIC winner. Models that cannot be fitted
/// are skipped and recorded as warnings. Throws Error(Infeasible) when not a
/// single model could be fitted.
AnalysisBundle analyze_records(const std::vector<RunRecord>& records, const AnalysisSpec& spec);

std::string bundle_to_json(const AnalysisBundle& bundle);
AnalysisBundle bundle_from_json(const std::string& text);

}  // namespace efcil
