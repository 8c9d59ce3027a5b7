#include "efcil/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "efcil/error.hpp"
#include "efcil/grid.hpp"
#include "efcil/text.hpp"

namespace efcil {

namespace {

std::string fixed(double v, int decimals) { return std::isfinite(v) ? format_fixed(v, decimals) : "n/a"; }

std::string sci(double v) {
  if (!std::isfinite(v)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string num(double v) { return std::isfinite(v) ? format_double(v) : ""; }

std::string xml_escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string md_escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

std::string md_row(const std::vector<std::string>& cells) {
  std::string out = "|";
  for (const auto& c : cells) out += " " + c + " |";
  return out + "\n";
}

std::string md_rule(std::size_t columns) {
  std::string out = "|";
  for (std::size_t i = 0; i < columns; ++i) out += " --- |";
  return out + "\n";
}

std::string hex_color(double t, int r, int g, int b) {
  t = std::clamp(t, 0.0, 1.0);
  auto mix = [&](int c) { return static_cast<int>(std::lround(255.0 + (c - 255.0) * t)); };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", mix(r), mix(g), mix(b));
  return buf;
}

std::string pairwise_legend(const PairwiseMatrix& m) {
  return "Rows: level i, columns: level j; cell = 100 x gain of i over j on " + m.formula.substr(0, m.formula.find(' ')) +
         ". Bold: p < " + sci(m.threshold) + " (alpha " + format_double(m.alpha) + " / m = " + std::to_string(m.tests) +
         "); max refit discrepancy " + sci(m.max_refit_discrepancy) + ".\n";
}

}  // namespace

std::string slugify(const std::string& text) {
  std::string out;
  bool pending = false;
  for (const char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      if (pending && !out.empty()) out += '_';
      pending = false;
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      pending = true;
    }
  }
  return out.empty() ? "x" : out;
}

std::string pairwise_cell_text(const std::optional<double>& gain) {
  if (!gain || !std::isfinite(*gain)) return "n/a";
  return format_fixed(*gain * 100.0, 1);
}

std::string render_correlations_csv(const CorrelationMatrix& c) {
  std::string out = "metric";
  for (const char* name : kMetricNames) out += std::string(",") + name;
  out += "\n";
  for (std::size_t i = 0; i < 4; ++i) {
    out += kMetricNames[i];
    for (std::size_t j = 0; j < 4; ++j) out += "," + (c.r[i][j] ? num(*c.r[i][j]) : std::string("undefined"));
    out += "\n";
  }
  return out;
}

std::string render_correlations_md(const CorrelationMatrix& c) {
  std::vector<std::string> header{"metric"};
  for (const char* name : kMetricNames) header.emplace_back(name);
  std::string out = md_row(header) + md_rule(header.size());
  for (std::size_t i = 0; i < 4; ++i) {
    std::vector<std::string> row{kMetricNames[i]};
    for (std::size_t j = 0; j < 4; ++j) row.push_back(c.r[i][j] ? fixed(*c.r[i][j], 3) : "undefined");
    out += md_row(row);
  }
  return out + "\nPopulation Pearson correlations over " + std::to_string(c.n) + " runs.\n";
}

std::string render_screening_csv(const ScreeningResult& s) {
  std::string out = "variable,p_value,r2,df,selected\n";
  for (const auto& r : s.selected) out += r.variable + "," + num(r.p_value) + "," + num(r.r2) + "," + std::to_string(r.df) + ",1\n";
  for (const auto& r : s.rejected) out += r.variable + "," + num(r.p_value) + "," + num(r.r2) + "," + std::to_string(r.df) + ",0\n";
  return out;
}

std::string render_screening_md(const ScreeningResult& s) {
  std::string out = md_row({"Variable", "p-value", "R2"}) + md_rule(3);
  for (const auto& r : s.selected) out += md_row({r.variable, sci(r.p_value), fixed(r.r2, 2)});
  for (const auto& r : s.rejected) out += md_row({r.variable + " (p >= " + format_double(s.alpha) + ")", sci(r.p_value), fixed(r.r2, 2)});
  for (const auto& [variable, reason] : s.failed) out += md_row({variable, "not fitted", md_escape(reason)});
  return out;
}

std::string render_aic_csv(const AicReport& a) {
  std::string out = "formula,params,aic,r2,selected,error\n";
  for (std::size_t i = 0; i < a.selection.entries.size(); ++i) {
    const auto& e = a.selection.entries[i];
    out += csv_field(e.formula) + "," + std::to_string(e.params) + "," + (e.aic ? num(*e.aic) : "") + "," +
           (e.r2 ? num(*e.r2) : "") + "," + (i == a.selection.best ? "1" : "0") + "," + csv_field(e.error) + "\n";
  }
  return out;
}

std::string render_aic_md(const AicReport& a) {
  std::string out = md_row({"Formula", "params", "AIC", "R2", ""}) + md_rule(5);
  for (std::size_t i = 0; i < a.selection.entries.size(); ++i) {
    const auto& e = a.selection.entries[i];
    const std::string mark = i == a.selection.best ? "selected" : (e.aic ? "" : "failed: " + md_escape(e.error));
    out += md_row({md_escape(e.formula), std::to_string(e.params), e.aic ? fixed(*e.aic, 2) : "n/a",
                   e.r2 ? fixed(*e.r2, 3) : "n/a", mark});
  }
  return out;
}

std::string render_anova_csv(const AnovaTable& t) {
  std::string out = "term,ss,df,f,p_value,partial_eta2\n";
  for (const auto& r : t.ranked()) {
    out += r.term + "," + num(r.ss) + "," + std::to_string(r.df) + "," + num(r.f_stat) + "," + num(r.p_value) + "," +
           num(r.partial_eta2) + "\n";
  }
  out += "Residual," + num(t.ss_resid) + "," + std::to_string(t.df_resid) + ",,,\n";
  return out;
}

std::string render_anova_md(const AnovaTable& t) {
  std::string out = "Model `" + t.formula + "`, R2 = " + fixed(t.r2, 3) + ", n = " + std::to_string(t.n) + "\n\n";
  out += md_row({"variable", "SS", "df", "F", "p-value", "partial eta2"}) + md_rule(6);
  for (const auto& r : t.ranked()) {
    out += md_row({r.term, fixed(r.ss, 4), std::to_string(r.df), fixed(r.f_stat, 2), sci(r.p_value), fixed(r.partial_eta2, 3)});
  }
  out += md_row({"Residual", fixed(t.ss_resid, 4), std::to_string(t.df_resid), "", "", ""});
  return out;
}

std::string render_coefficients_csv(const ModelReport& m) {
  std::string out = "term,estimate,std_error,t,p_value\n";
  for (const auto& c : m.coefficients) {
    out += csv_field(c.label) + "," + num(c.estimate) + "," + num(c.std_error) + "," + num(c.t_stat) + "," +
           num(c.p_value) + "\n";
  }
  return out;
}

std::string render_pairwise_csv(const PairwiseMatrix& m) {
  std::string out = "level_i,level_j,gain,p_value,significant,significant_uncorrected\n";
  for (std::size_t i = 0; i < m.levels.size(); ++i) {
    for (std::size_t j = 0; j < m.levels.size(); ++j) {
      if (i == j) continue;
      out += csv_field(m.levels[i]) + "," + csv_field(m.levels[j]) + "," + (m.gain[i][j] ? num(*m.gain[i][j]) : "") +
             "," + (m.p_value[i][j] ? num(*m.p_value[i][j]) : "") + "," + (m.significant[i][j] ? "1" : "0") + "," +
             (m.significant_uncorrected[i][j] ? "1" : "0") + "\n";
    }
  }
  return out;
}

std::string render_pairwise_md(const PairwiseMatrix& m) {
  std::vector<std::string> header{md_escape(m.factor)};
  for (const auto& level : m.levels) header.push_back(md_escape(level));
  std::string out = md_row(header) + md_rule(header.size());
  for (std::size_t i = 0; i < m.levels.size(); ++i) {
    std::vector<std::string> row{md_escape(m.levels[i])};
    for (std::size_t j = 0; j < m.levels.size(); ++j) {
      const std::string text = pairwise_cell_text(m.gain[i][j]);
      row.push_back(m.significant[i][j] ? "**" + text + "**" : text);
    }
    out += md_row(row);
  }
  return out + "\n" + pairwise_legend(m);
}

std::string render_pairwise_svg(const PairwiseMatrix& m, const std::string& title) {
  constexpr int cell = 56;
  constexpr int char_w = 7;
  const std::size_t n = std::max<std::size_t>(1, m.levels.size());
  std::size_t longest = 1;
  for (const auto& l : m.levels) longest = std::max(longest, l.size());
  const int label_w = 16 + static_cast<int>(longest) * char_w;
  const int left = label_w;
  const int top = 40 + label_w;
  const int width = left + static_cast<int>(n) * cell + 16;
  const int height = top + static_cast<int>(n) * cell + 16;

  double scale = 0.0;
  for (const auto& row : m.gain) {
    for (const auto& g : row) {
      if (g && std::isfinite(*g)) scale = std::max(scale, std::fabs(*g));
    }
  }

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) +
         "\" font-family=\"Helvetica, Arial, sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  out += "<text x=\"8\" y=\"20\" font-size=\"14\">" + xml_escape(title) + "</text>\n";
  for (std::size_t j = 0; j < m.levels.size(); ++j) {
    const int x = left + static_cast<int>(j) * cell + cell / 2;
    out += "<text transform=\"translate(" + std::to_string(x) + "," + std::to_string(top - 6) +
           ") rotate(-45)\" text-anchor=\"start\">" + xml_escape(m.levels[j]) + "</text>\n";
  }
  for (std::size_t i = 0; i < m.levels.size(); ++i) {
    const int y = top + static_cast<int>(i) * cell + cell / 2 + 4;
    out += "<text x=\"" + std::to_string(left - 6) + "\" y=\"" + std::to_string(y) + "\" text-anchor=\"end\">" +
           xml_escape(m.levels[i]) + "</text>\n";
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const int x = left + static_cast<int>(j) * cell;
      const int y = top + static_cast<int>(i) * cell;
      const std::optional<double> g = i < m.levels.size() && j < m.gain[i].size() ? m.gain[i][j] : std::nullopt;
      const bool sig = i < m.levels.size() && j < m.levels.size() && m.significant[i][j];
      std::string fill = "#d9d9d9";
      if (g && std::isfinite(*g)) {
        const double t = scale > 0.0 ? std::fabs(*g) / scale : 0.0;
        fill = *g >= 0.0 ? hex_color(t, 44, 123, 182) : hex_color(t, 215, 48, 39);
      }
      const char* opacity = sig || !g ? "1" : "0.35";
      out += "<rect class=\"cell\" x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" + std::to_string(cell) +
             "\" height=\"" + std::to_string(cell) + "\" fill=\"" + fill + "\" fill-opacity=\"" + opacity +
             "\" stroke=\"#ffffff\"/>\n";
      out += "<text x=\"" + std::to_string(x + cell / 2) + "\" y=\"" + std::to_string(y + cell / 2 + 4) +
             "\" text-anchor=\"middle\"" + (sig ? " font-weight=\"bold\"" : " fill-opacity=\"0.6\"") + ">" +
             pairwise_cell_text(g) + "</text>\n";
    }
  }
  out += "</svg>\n";
  return out;
}

std::string render_diagnostics_csv(const DiagnosticBundle& d) {
  std::string out = "plot,x,y\n";
  for (const auto& [x, y] : d.qq) out += "qq," + num(x) + "," + num(y) + "\n";
  for (const auto& [x, y] : d.scale_location) out += "scale_location," + num(x) + "," + num(y) + "\n";
  for (const auto& [x, y] : d.leverage) out += "leverage," + num(x) + "," + num(y) + "\n";
  return out;
}

std::string render_report_md(const AnalysisBundle& b) {
  std::string out = "# EFCIL analysis report\n\n";
  out += "- records: " + std::to_string(b.n_records) + "\n";
  out += "- config hash: " + b.config_hash + "\n";
  out += "- version: " + b.version + "\n";
  out += "- alpha: " + format_double(b.alpha) + "\n";
  out += "- AIC convention: 2(p+1) + n[ln(2 pi SSR/n) + 1]; ANOVA sums of squares: type II\n\n";

  out += "## Metric correlations\n\n";
  out += b.correlations ? render_correlations_md(*b.correlations) : "Not computed (fewer than 3 records).\n";

  out += "\n## Variable screening\n";
  for (const auto& s : b.screening) out += "\n### " + s.response + "\n\n" + render_screening_md(s);

  out += "\n## Model selection (AIC)\n";
  for (const auto& a : b.aic) out += "\n### " + a.response + "\n\n" + render_aic_md(a);

  out += "\n## ANOVA\n";
  for (const auto& m : b.models) {
    out += "\n### " + m.formula + "\n\n" + render_anova_md(m.anova);
    out += "\nSmallest Gram eigenvalue " + sci(m.gram.min_eigenvalue) + " (threshold " + sci(m.gram.threshold) + ")" +
           (m.gram.collinear ? ", collinear." : ".") + "\n\n";
    out += md_row({"coefficient", "estimate", "std. error", "p-value"}) + md_rule(4);
    for (const auto& c : m.coefficients) {
      out += md_row({md_escape(c.label), fixed(c.estimate, 4), fixed(c.std_error, 4), sci(c.p_value)});
    }
  }

  out += "\n## Pairwise comparisons\n";
  for (const auto& p : b.pairwise) {
    out += "\n### " + p.name + " (" + std::to_string(p.n) + " runs)\n\n" + render_pairwise_md(p.matrix);
  }

  out += "\n## Diagnostics\n\n";
  if (!b.diagnostics.empty()) {
    out += md_row({"model", "n", "max |std. residual|", "max leverage", "Q-Q slope"}) + md_rule(5);
    for (const auto& d : b.diagnostics) {
      double max_res = 0.0;
      double max_lev = 0.0;
      for (const double r : d.bundle.standardized) max_res = std::max(max_res, std::fabs(r));
      for (const auto& [h, r] : d.bundle.leverage) max_lev = std::max(max_lev, h);
      // Least-squares slope of sample on theoretical quantiles.
      double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
      for (const auto& [x, y] : d.bundle.qq) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
      }
      const double k = static_cast<double>(d.bundle.qq.size());
      const double denom = k * sxx - sx * sx;
      const double slope = denom != 0.0 ? (k * sxy - sx * sy) / denom : 0.0;
      out += md_row({md_escape(d.formula), std::to_string(d.bundle.standardized.size()), fixed(max_res, 3),
                     fixed(max_lev, 3), fixed(slope, 3)});
    }
  } else {
    out += "No model selected.\n";
  }

  out += "\n## Warnings\n\n";
  if (b.warnings.empty()) out += "None.\n";
  for (const auto& w : b.warnings) {
    out += "- " + w.stage + (w.model.empty() ? "" : " `" + w.model + "`") + ": " + w.reason + "\n";
  }
  return out;
}

ReportFormats parse_report_formats(const std::string& text) {
  ReportFormats f{false, false, false};
  for (const auto field : split_fields(text, ',')) {
    const auto t = trim(field);
    if (t == "csv") {
      f.csv = true;
    } else if (t == "md") {
      f.md = true;
    } else if (t == "svg") {
      f.svg = true;
    } else {
      fail(ErrorCode::InvalidArgument, "unknown report format '" + std::string(t) + "' (expected csv, md, svg)");
    }
  }
  return f;
}

std::vector<std::filesystem::path> write_reports(const AnalysisBundle& b, const std::filesystem::path& dir,
                                                 const ReportFormats& formats) {
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    const auto path = dir / name;
    write_text_file(path, content);
    written.push_back(path);
  };
  auto index = [](std::size_t i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02zu", i + 1);
    return std::string(buf);
  };
  if (b.correlations) {
    if (formats.csv) emit("correlations.csv", render_correlations_csv(*b.correlations));
    if (formats.md) emit("correlations.md", render_correlations_md(*b.correlations));
  }
  for (const auto& s : b.screening) {
    if (formats.csv) emit("screening_" + slugify(s.response) + ".csv", render_screening_csv(s));
    if (formats.md) emit("screening_" + slugify(s.response) + ".md", render_screening_md(s));
  }
  for (const auto& a : b.aic) {
    if (formats.csv) emit("aic_" + slugify(a.response) + ".csv", render_aic_csv(a));
    if (formats.md) emit("aic_" + slugify(a.response) + ".md", render_aic_md(a));
  }
  for (std::size_t i = 0; i < b.models.size(); ++i) {
    const std::string stem = "anova_" + index(i) + "_" + slugify(b.models[i].formula);
    if (formats.csv) {
      emit(stem + ".csv", render_anova_csv(b.models[i].anova));
      emit("coefficients_" + index(i) + "_" + slugify(b.models[i].formula) + ".csv", render_coefficients_csv(b.models[i]));
    }
    if (formats.md) emit(stem + ".md", render_anova_md(b.models[i].anova));
  }
  for (const auto& p : b.pairwise) {
    const std::string stem = "pairwise_" + slugify(p.name);
    if (formats.csv) emit(stem + ".csv", render_pairwise_csv(p.matrix));
    if (formats.md) emit(stem + ".md", render_pairwise_md(p.matrix));
    if (formats.svg) emit(stem + ".svg", render_pairwise_svg(p.matrix, p.matrix.factor + " pairwise gain x100: " + p.name));
  }
  for (std::size_t i = 0; i < b.diagnostics.size(); ++i) {
    if (formats.csv) emit("diagnostics_" + index(i) + "_" + slugify(b.diagnostics[i].formula) + ".csv",
                          render_diagnostics_csv(b.diagnostics[i].bundle));
  }
  if (formats.md) emit("report.md", render_report_md(b));
  return written;
}

}  // namespace efcil
