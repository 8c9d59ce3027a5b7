#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "efcil/analysis.hpp"

namespace efcil {

/// Cell text of a pairwise heatmap: gain x 100 with one decimal, "n/a" when
/// the pair is inestimable.
std::string pairwise_cell_text(const std::optional<double>& gain);

std::string render_correlations_csv(const CorrelationMatrix& c);
std::string render_correlations_md(const CorrelationMatrix& c);

std::string render_screening_csv(const ScreeningResult& s);
std::string render_screening_md(const ScreeningResult& s);

std::string render_aic_csv(const AicReport& a);
std::string render_aic_md(const AicReport& a);

/// ANOVA rows ranked by partial eta^2.
std::string render_anova_csv(const AnovaTable& t);
std::string render_anova_md(const AnovaTable& t);

std::string render_coefficients_csv(const ModelReport& m);

/// Rows are the "better" level i, columns the compared level j.
std::string render_pairwise_csv(const PairwiseMatrix& m);
/// A Markdown table with levels+1 columns; significant cells in bold.
std::string render_pairwise_md(const PairwiseMatrix& m);
/// Heatmap. Significant cells are bold at full opacity, others dimmed,
/// inestimable cells grey.
std::string render_pairwise_svg(const PairwiseMatrix& m, const std::string& title);

/// Long format: plot,x,y for the Q-Q, scale-location and leverage panels.
std::string render_diagnostics_csv(const DiagnosticBundle& d);

/// The whole bundle as one Markdown document, sections in analysis order.
std::string render_report_md(const AnalysisBundle& b);

struct ReportFormats {
  bool csv = true;
  bool md = true;
  bool svg = true;
};

/// Parses "csv,md,svg" (any subset).
ReportFormats parse_report_formats(const std::string& text);

/// Writes every rendered file under `dir`; returns the paths in write order.
std::vector<std::filesystem::path> write_reports(const AnalysisBundle& b, const std::filesystem::path& dir,
                                                 const ReportFormats& formats);

/// Lower-case alphanumerics with single underscores, for file names.
std::string slugify(const std::string& text);

}  // namespace efcil
