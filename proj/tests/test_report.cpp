#include <doctest.h>

#include <regex>

#include "criteria.hpp"
#include "efcil/analysis.hpp"
#include "efcil/error.hpp"
#include "efcil/report.hpp"

using namespace efcil;

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + needle.size())) ++n;
  return n;
}

PairwiseMatrix sample_matrix(std::uint64_t seed) {
  Rng rng(seed);
  const auto recs = criteria::random_categorical_records(rng, 0.1, 0.02);
  return pairwise_comparison(recs, parse_formula("avg_acc ~ Incr + Train + Data"), "Train", 0.05);
}

}  // namespace

TEST_CASE("a single-level pairwise matrix still renders one cell") {
  PairwiseMatrix m;
  m.factor = "Train";
  m.formula = "avg_acc ~ Train";
  m.levels = {"only"};
  m.gain = {{std::nullopt}};
  m.p_value = {{std::nullopt}};
  m.significant = {{false}};
  m.significant_uncorrected = {{false}};
  const std::string svg = render_pairwise_svg(m, "single");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(count(svg, "<rect class=\"cell\"") == 1);
  CHECK(svg.find("n/a") != std::string::npos);
}

TEST_CASE("Markdown pairwise tables have one column more than levels") {
  const PairwiseMatrix m = sample_matrix(1);
  const std::string md = render_pairwise_md(m);
  std::istringstream lines(md);
  std::string line;
  std::size_t table_rows = 0;
  while (std::getline(lines, line)) {
    if (line.rfind("|", 0) != 0) continue;
    ++table_rows;
    CHECK(count(line, "|") == m.levels.size() + 2);
  }
  CHECK(table_rows == m.levels.size() + 2);  // header, rule, one row per level
}

TEST_CASE("significant cells are bold in Markdown and SVG") {
  const PairwiseMatrix m = sample_matrix(2);
  std::size_t significant = 0;
  for (const auto& row : m.significant) {
    for (const bool s : row) significant += s ? 1 : 0;
  }
  CHECK(count(render_pairwise_md(m), "**") == 2 * significant);
  CHECK(count(render_pairwise_svg(m, "t"), "font-weight=\"bold\"") == significant);
}

TEST_CASE("SVG cells equal the pairwise cell text") {
  const PairwiseMatrix m = sample_matrix(3);
  const std::string svg = render_pairwise_svg(m, "t");
  for (std::size_t i = 0; i < m.levels.size(); ++i) {
    for (std::size_t j = 0; j < m.levels.size(); ++j) {
      CHECK(svg.find(">" + pairwise_cell_text(m.gain[i][j]) + "</text>") != std::string::npos);
    }
  }
  CHECK(pairwise_cell_text(0.1234) == "12.3");
  CHECK(pairwise_cell_text(-0.0004) == "0.0");
  CHECK(pairwise_cell_text(std::nullopt) == "n/a");
}

TEST_CASE("rendering is deterministic") {
  Rng rng(4);
  const auto recs = criteria::random_categorical_records(rng);
  const AnalysisBundle a = analyze_records(recs, AnalysisSpec{});
  const AnalysisBundle b = analyze_records(recs, AnalysisSpec{});
  CHECK(render_report_md(a) == render_report_md(b));
  CHECK(bundle_to_json(a) == bundle_to_json(b));
  for (const auto& p : a.pairwise) CHECK(render_pairwise_svg(p.matrix, p.name) == render_pairwise_svg(p.matrix, p.name));
  CHECK(render_report_md(bundle_from_json(bundle_to_json(a))) == render_report_md(a));
}

TEST_CASE("report formats and file names") {
  const ReportFormats f = parse_report_formats("md, svg");
  CHECK_FALSE(f.csv);
  CHECK(f.md);
  CHECK(f.svg);
  CHECK_THROWS_AS(parse_report_formats("pdf"), Error);
  CHECK(slugify("avg_acc ~ Incr + Train") == "avg_acc_incr_train");
  CHECK(slugify("Data=blobs-a") == "data_blobs_a");
}

TEST_CASE("ANOVA tables list terms by decreasing partial eta squared") {
  Rng rng(5);
  const auto recs = criteria::random_categorical_records(rng);
  const AnovaTable t = anova_partial_eta2(recs, parse_formula("avg_acc ~ Data + Incr + Train"));
  const std::string csv = render_anova_csv(t);
  const auto ranked = t.ranked();
  std::size_t last = 0;
  for (const auto& row : ranked) {
    const auto pos = csv.find("\n" + row.term + ",");
    REQUIRE(pos != std::string::npos);
    CHECK(pos >= last);
    last = pos;
  }
}
