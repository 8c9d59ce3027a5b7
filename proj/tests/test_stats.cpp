#include <doctest.h>

#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "criteria.hpp"
#include "efcil/distributions.hpp"
#include "efcil/error.hpp"
#include "efcil/linalg.hpp"
#include "efcil/random.hpp"
#include "efcil/stats.hpp"

using namespace efcil;

namespace {

DesignMatrix numeric_design(const std::vector<std::vector<double>>& rows, const std::vector<double>& y) {
  DesignMatrix d;
  d.response = "y";
  d.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  d.y.resize(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    d.y(static_cast<Eigen::Index>(i)) = y[i];
  }
  for (std::size_t j = 0; j < rows.front().size(); ++j) {
    const std::string label = j == 0 ? "(Intercept)" : "x" + std::to_string(j);
    d.columns.push_back({label, label});
  }
  return d;
}

RunRecord record(const std::string& id) {
  RunRecord r;
  r.run_id = id;
  r.train = "t";
  r.incr = "i";
  r.data = "d";
  return r;
}

/// n records whose Train level cycles through one level per entry of
/// `effects`, with avg_acc = effects[level] + noise.
std::vector<RunRecord> one_factor(Rng& rng, const std::vector<double>& effects, std::size_t n, double noise) {
  std::vector<RunRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    RunRecord r = record("r" + std::to_string(i));
    const std::size_t level = i % effects.size();
    r.train = std::string(1, static_cast<char>('a' + level));
    r.avg_acc = effects[level] + noise * rng.normal();
    out.push_back(r);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Formulas and encoding

TEST_CASE("formula parsing") {
  const Formula f = parse_formula("avg_acc ~ Incr + Train:Data + 1");
  CHECK(f.response == "avg_acc");
  REQUIRE(f.terms.size() == 2);
  CHECK(term_name(f.terms[1]) == "Train:Data");
  CHECK(parse_formula("F ~ incr").response == "forgetting");
  CHECK_THROWS_AS(parse_formula("avg_acc ~ Train + Train"), Error);
  CHECK_THROWS_AS(parse_formula("avg_acc ~ Train:Train"), Error);
  CHECK_THROWS_AS(parse_formula("avg_acc ~ avg_acc"), Error);
  CHECK_THROWS_AS(parse_formula("avg_acc ~ Colour"), Error);
  CHECK_THROWS_AS(parse_formula("avg_acc Train"), Error);
}

TEST_CASE("a three-level factor encodes to two indicators and an intercept") {
  std::vector<RunRecord> recs;
  for (const std::string level : {"A", "B", "C", "A"}) {
    RunRecord r = record(level + std::to_string(recs.size()));
    r.train = level;
    recs.push_back(r);
  }
  const DesignMatrix d = encode_design(recs, parse_formula("avg_acc ~ Train"));
  REQUIRE(d.x.cols() == 3);
  CHECK(d.columns[0].label == "(Intercept)");
  CHECK(d.columns[1].label == "Train[B]");
  CHECK(d.columns[2].label == "Train[C]");
  CHECK(d.references.at("Train") == "A");
  CHECK(d.x.col(0).sum() == 4.0);
  CHECK(d.x(1, 1) == 1.0);
  CHECK(d.x(3, 1) == 0.0);

  EncodeOptions opts;
  opts.reference_levels["Train"] = "C";
  const DesignMatrix moved = encode_design(recs, parse_formula("avg_acc ~ Train"), opts);
  CHECK(moved.columns[1].label == "Train[A]");
  opts.reference_levels["Train"] = "Z";
  CHECK_THROWS_AS(encode_design(recs, parse_formula("avg_acc ~ Train"), opts), Error);
}

TEST_CASE("fitted values do not depend on reference levels and pairwise gains are antisymmetric") {
  const auto out = criteria::reference_invariance();
  INFO(out.detail);
  CHECK(out.pass);
}

TEST_CASE("interaction terms encode as products") {
  Rng rng(3);
  auto recs = criteria::random_categorical_records(rng);
  const DesignMatrix d = encode_design(recs, parse_formula("avg_acc ~ Train + Incr + Train:Incr"));
  const std::size_t lt = criteria::levels_of(recs, "Train").size();
  const std::size_t li = criteria::levels_of(recs, "Incr").size();
  CHECK(static_cast<std::size_t>(d.x.cols()) == 1 + (lt - 1) + (li - 1) + (lt - 1) * (li - 1));
}

// ---------------------------------------------------------------------------
// OLS

TEST_CASE("an exact line is recovered") {
  const RegressionFit fit = ols_fit(numeric_design({{1, 0}, {1, 1}, {1, 2}}, {1, 3, 5}));
  CHECK(fit.coefficients(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(fit.coefficients(1) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(fit.residuals.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("the intercept-only model fits the mean") {
  const std::vector<double> y{2, 4, 9, 1};
  const RegressionFit fit = ols_fit(numeric_design({{1}, {1}, {1}, {1}}, y));
  CHECK(fit.coefficients(0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(fit.r2 == doctest::Approx(0.0).epsilon(1e-15).scale(1.0));
}

TEST_CASE("least squares matches the normal-equation oracle") {
  const auto out = criteria::ols_oracle();
  INFO(out.detail);
  CHECK(out.pass);
}

TEST_CASE("AIC, R2 and the overall F follow their definitions") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto r = criteria::random_regression(rng);
    const RegressionFit fit = ols_fit(r.design);
    const auto ref = oracle::normal_equations(r.rows, r.y);
    const double n = static_cast<double>(fit.n);
    const double p = static_cast<double>(fit.p);
    const double ssr = static_cast<double>(ref.ssr);
    const double aic = 2.0 * (p + 1.0) + n * (std::log(2.0 * M_PI * ssr / n) + 1.0);
    CHECK(fit.aic == doctest::Approx(aic).epsilon(1e-10));
    const double mean = std::accumulate(r.y.begin(), r.y.end(), 0.0) / n;
    double sst = 0.0;
    for (const double v : r.y) sst += (v - mean) * (v - mean);
    CHECK(fit.r2 == doctest::Approx(1.0 - ssr / sst).epsilon(1e-10));
    if (fit.p > 1) {
      const double f = ((sst - ssr) / (p - 1.0)) / (ssr / (n - p));
      CHECK(fit.f_stat == doctest::Approx(f).epsilon(1e-8));
      CHECK(fit.f_pvalue == doctest::Approx(oracle::f_pvalue(f, p - 1.0, n - p)).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("rank deficiency names the collinear column") {
  try {
    ols_fit(numeric_design({{1, 1, 2}, {1, 2, 4}, {1, 3, 6}, {1, 5, 10}}, {1, 2, 3, 4}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Numeric);
    CHECK(std::string(e.what()).find("collinear columns") != std::string::npos);
  }
  CHECK_THROWS_AS(ols_fit(numeric_design({{1, 0}, {1, 1}}, {1, 2})), Error);
}

// ---------------------------------------------------------------------------
// Screening and AIC

TEST_CASE("a candidate equal to the response screens first with R2 = 1") {
  Rng rng(41);
  std::vector<RunRecord> recs;
  for (int i = 0; i < 60; ++i) {
    RunRecord r = record("r" + std::to_string(i));
    r.avg_acc = rng.uniform();
    r.acc_k = r.avg_acc;
    r.acc1 = rng.uniform();
    r.train = i % 3 == 0 ? "a" : "b";
    recs.push_back(r);
  }
  const ScreeningResult s = screen_variables(recs, "avg_acc", {"Acc1", "Train", "AccK"}, 0.05);
  REQUIRE_FALSE(s.selected.empty());
  CHECK(s.selected.front().variable == "AccK");
  CHECK(s.selected.front().r2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pure-noise candidates are rarely selected") {
  int excluded = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    std::vector<RunRecord> recs;
    for (int i = 0; i < 500; ++i) {
      RunRecord r = record("r" + std::to_string(i));
      r.avg_acc = rng.normal();
      r.acc1 = rng.normal();
      recs.push_back(r);
    }
    const ScreeningResult s = screen_variables(recs, "avg_acc", {"Acc1"}, 0.05);
    excluded += s.selected.empty() ? 1 : 0;
  }
  CHECK(excluded >= 90);
}

TEST_CASE("AIC prefers the smaller model when the extra regressor is noise") {
  int smaller = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed + 1000);
    auto recs = one_factor(rng, {0.2, 0.5, 0.6}, 300, 0.1);
    for (auto& r : recs) r.acc1 = rng.normal();
    const AicSelection sel =
        select_model_aic(recs, {parse_formula("avg_acc ~ Train"), parse_formula("avg_acc ~ Train + Acc1")});
    smaller += sel.best == 0 ? 1 : 0;
  }
  CHECK(smaller > 50);
}

TEST_CASE("AIC does not depend on term order and the true model beats its sub-models") {
  Rng rng(51);
  const auto recs = criteria::random_categorical_records(rng, 0.2, 0.02);
  const std::vector<Formula> formulas{
      parse_formula("avg_acc ~ Incr"),        parse_formula("avg_acc ~ Train"),
      parse_formula("avg_acc ~ Data"),        parse_formula("avg_acc ~ Incr + Train"),
      parse_formula("avg_acc ~ Incr + Data"), parse_formula("avg_acc ~ Train + Data"),
      parse_formula("avg_acc ~ Incr + Train + Data"), parse_formula("avg_acc ~ Data + Train + Incr")};
  const AicSelection sel = select_model_aic(recs, formulas);
  CHECK(sel.best == 6);
  CHECK(*sel.entries[6].aic == doctest::Approx(*sel.entries[7].aic).epsilon(1e-12));
}

TEST_CASE("AIC selection skips failing formulas and fails when none fits") {
  std::vector<RunRecord> recs;
  for (int i = 0; i < 3; ++i) {
    RunRecord r = record("r" + std::to_string(i));
    r.avg_acc = i;
    r.acc1 = i;
    recs.push_back(r);
  }
  const AicSelection sel = select_model_aic(recs, {parse_formula("avg_acc ~ Width"), parse_formula("avg_acc ~ 1")});
  CHECK(sel.best == 1);
  CHECK_FALSE(sel.entries[0].aic.has_value());
  CHECK_FALSE(sel.entries[0].error.empty());
  try {
    select_model_aic(recs, {parse_formula("avg_acc ~ Width")});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Infeasible);
  }
}

// ---------------------------------------------------------------------------
// ANOVA

TEST_CASE("partial eta squared matches independently assembled sums of squares") {
  const auto out = criteria::anova_identity();
  INFO(out.detail);
  CHECK(out.pass);
}

TEST_CASE("a factor unrelated to the response explains almost nothing") {
  Rng rng(61);
  const auto recs = one_factor(rng, {0.0, 0.0, 0.0}, 1000, 1.0);
  const AnovaTable t = anova_partial_eta2(recs, parse_formula("avg_acc ~ Train"));
  CHECK(t.rows.front().partial_eta2 < 0.02);
}

TEST_CASE("ranked ANOVA rows are sorted by partial eta squared") {
  Rng rng(62);
  const auto recs = criteria::random_categorical_records(rng);
  const AnovaTable t = anova_partial_eta2(recs, parse_formula("avg_acc ~ Incr + Train + Data"));
  const auto ranked = t.ranked();
  for (std::size_t i = 1; i < ranked.size(); ++i) CHECK(ranked[i - 1].partial_eta2 >= ranked[i].partial_eta2);
}

// ---------------------------------------------------------------------------
// Pairwise comparisons

TEST_CASE("pairwise gains recover additive level effects") {
  Rng rng(71);
  const auto recs = one_factor(rng, {0.0, 1.0, 2.0}, 300, 0.01);
  const PairwiseMatrix m = pairwise_comparison(recs, parse_formula("avg_acc ~ Train"), "Train", 0.05);
  REQUIRE(m.levels == std::vector<std::string>{"a", "b", "c"});
  CHECK(m.tests == 3);
  CHECK(m.threshold == doctest::Approx(0.05 / 3));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(*m.gain[i][i] == 0.0);
    for (std::size_t j = 0; j < 3; ++j) {
      if (i == j) continue;
      CHECK(*m.gain[i][j] == doctest::Approx(static_cast<double>(i) - static_cast<double>(j)).epsilon(0.01));
      CHECK(m.significant[i][j]);
      CHECK(std::fabs(*m.gain[i][j] + *m.gain[j][i]) <= 1e-12);
    }
  }
}

TEST_CASE("identical levels are almost never significant after correction") {
  int clean = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed + 500);
    const auto recs = one_factor(rng, {0.5, 0.5, 0.5, 0.5}, 120, 0.1);
    const PairwiseMatrix m = pairwise_comparison(recs, parse_formula("avg_acc ~ Train"), "Train", 0.05);
    bool any = false;
    for (const auto& row : m.significant) {
      for (const bool s : row) any = any || s;
    }
    clean += any ? 0 : 1;
  }
  CHECK(clean >= 95);
}

TEST_CASE("thirteen strategies give 78 comparisons") {
  Rng rng(72);
  std::vector<double> effects(13, 0.0);
  const auto recs = one_factor(rng, effects, 13 * 4, 0.1);
  const PairwiseMatrix m = pairwise_comparison(recs, parse_formula("avg_acc ~ Train"), "Train", 0.05);
  CHECK(m.tests == 78);
  CHECK(m.threshold == doctest::Approx(0.05 / 78).epsilon(1e-15));
}

TEST_CASE("declared levels without records are inestimable") {
  Rng rng(73);
  const auto recs = one_factor(rng, {0.0, 1.0}, 40, 0.1);
  EncodeOptions opts;
  opts.declared_levels["Train"] = {"a", "b", "z"};
  const PairwiseMatrix m = pairwise_comparison(recs, parse_formula("avg_acc ~ Train"), "Train", 0.05, opts);
  REQUIRE(m.levels.size() == 3);
  CHECK(m.tests == 1);
  CHECK_FALSE(m.gain[2][0].has_value());
  CHECK_FALSE(m.gain[0][2].has_value());
  CHECK(m.gain[1][0].has_value());
}

// ---------------------------------------------------------------------------
// Diagnostics and collinearity

TEST_CASE("a perfect fit puts every residual point at zero") {
  DesignMatrix d = numeric_design({{1, 0}, {1, 1}, {1, 2}, {1, 4}}, {1, 3, 5, 9});
  const DiagnosticBundle b = diagnostics(ols_fit(d), d);
  for (const double s : b.standardized) CHECK(s == 0.0);
  for (const auto& [q, s] : b.qq) CHECK(s == 0.0);
}

TEST_CASE("leverages sum to the number of parameters") {
  Rng rng(81);
  for (int trial = 0; trial < 10; ++trial) {
    const auto r = criteria::random_regression(rng);
    const Eigen::VectorXd h = leverages(r.design);
    CHECK(h.sum() == doctest::Approx(static_cast<double>(r.design.x.cols())).epsilon(1e-10));
    // Direct trace of X (X^T X)^-1 X^T with the oracle inverse.
    const std::size_t p = r.rows.front().size();
    oracle::Matrix xtx(p, oracle::Vector(p, 0.0L));
    for (const auto& row : r.rows) {
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) xtx[i][j] += static_cast<long double>(row[i]) * row[j];
      }
    }
    const auto inv = oracle::inverse(xtx);
    for (std::size_t k = 0; k < r.rows.size(); k += 7) {
      long double hk = 0.0L;
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) hk += r.rows[k][i] * inv[i][j] * r.rows[k][j];
      }
      CHECK(h(static_cast<Eigen::Index>(k)) == doctest::Approx(static_cast<double>(hk)).epsilon(1e-8));
    }
  }
}

TEST_CASE("normal residuals line up on the Q-Q plot") {
  Rng rng(82);
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (int i = 0; i < 2000; ++i) {
    const double x = rng.normal();
    rows.push_back({1.0, x});
    y.push_back(0.5 + 2.0 * x + rng.normal());
  }
  const DesignMatrix d = numeric_design(rows, y);
  const DiagnosticBundle b = diagnostics(ols_fit(d), d);
  double sxx = 0.0, sxy = 0.0, mx = 0.0, my = 0.0;
  for (const auto& [q, s] : b.qq) {
    mx += q;
    my += s;
  }
  mx /= 2000.0;
  my /= 2000.0;
  for (const auto& [q, s] : b.qq) {
    sxx += (q - mx) * (q - mx);
    sxy += (q - mx) * (s - my);
  }
  const double slope = sxy / sxx;
  CHECK(slope >= 0.95);
  CHECK(slope <= 1.05);
  for (std::size_t i = 0; i < b.qq.size(); ++i) {
    CHECK(b.qq[i].first == doctest::Approx(oracle::normal_quantile((static_cast<double>(i) + 0.5) / 2000.0)).epsilon(1e-9));
  }
}

TEST_CASE("Gram eigenvalue checks") {
  // Orthonormal columns.
  Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(Eigen::MatrixXd::Random(12, 4)).householderQ() *
                      Eigen::MatrixXd::Identity(12, 4);
  DesignMatrix d;
  d.x = q;
  CHECK(gram_min_eigenvalue(d).min_eigenvalue == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(gram_min_eigenvalue(d).collinear);

  d.x.col(3) = d.x.col(1);
  const GramCheck dup = gram_min_eigenvalue(d);
  CHECK(std::fabs(dup.min_eigenvalue) <= 1e-10);
  CHECK(dup.collinear);
}

TEST_CASE("Jacobi eigenvalues match power iteration and a library solver") {
  Rng rng(91);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd x(20, 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    const Eigen::MatrixXd g = x.transpose() * x;
    const auto eig = jacobi_eigenvalues(g);
    oracle::Matrix m(5, oracle::Vector(5));
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = g(i, j);
    }
    const double ref_min = static_cast<double>(oracle::min_eigenvalue(m));
    CHECK(std::fabs(eig.front() - ref_min) / ref_min <= 1e-8);
    const Eigen::VectorXd lib = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g).eigenvalues();
    for (int i = 0; i < 5; ++i) CHECK(eig[static_cast<std::size_t>(i)] == doctest::Approx(lib(i)).epsilon(1e-10));
  }
}

// ---------------------------------------------------------------------------
// Distributions

TEST_CASE("t p-values") {
  CHECK(student_t_pvalue(0.0, 5.0) == 1.0);
  CHECK(std::fabs(student_t_pvalue(1.959964, 1e6) - 0.05) <= 2e-4);
  for (const double df : {1.0, 2.5, 7.0, 30.0, 208.0, 5000.0}) {
    for (const double t : {-40.0, -9.18, -3.0, -0.5, 0.1, 1.0, 2.2, 6.0, 25.0}) {
      const double ours = student_t_pvalue(t, df);
      const double ref = oracle::t_pvalue(t, df);
      CHECK(std::fabs(ours - ref) <= 1e-12);
      if (ref > 1e-300) CHECK(std::fabs(ours - ref) / ref <= 1e-9);
      const boost::math::students_t_distribution<double> dist(df);
      CHECK(ours == doctest::Approx(2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)))).epsilon(1e-9));
    }
  }
}

TEST_CASE("F p-values") {
  CHECK(f_pvalue(0.0, 2.0, 10.0) == 1.0);
  for (const double df1 : {1.0, 2.0, 3.0, 8.0}) {
    for (const double df2 : {5.0, 40.0, 207.0}) {
      for (const double f : {0.01, 0.7, 1.0, 3.5, 42.57, 980.0}) {
        const double ours = f_pvalue(f, df1, df2);
        const double ref = oracle::f_pvalue(f, df1, df2);
        CHECK(std::fabs(ours - ref) <= 1e-12);
        if (ref > 1e-300) CHECK(std::fabs(ours - ref) / ref <= 1e-9);
      }
    }
  }
}

TEST_CASE("incomplete beta and normal quantiles") {
  for (const double a : {0.5, 1.0, 3.3, 60.0}) {
    for (const double b : {0.5, 2.0, 17.0}) {
      for (const double x : {0.001, 0.2, 0.5, 0.93, 0.9999}) {
        CHECK(regularized_incomplete_beta(a, b, x) == doctest::Approx(boost::math::ibeta(a, b, x)).epsilon(1e-11));
      }
    }
  }
  CHECK(inv_norm_cdf(0.5) == 0.0);
  for (const double q : {1e-10, 1e-4, 0.01, 0.3, 0.7, 0.975, 1.0 - 1e-8}) {
    CHECK(inv_norm_cdf(q) == doctest::Approx(oracle::normal_quantile(q)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(inv_norm_cdf(0.0), Error);
  CHECK_THROWS_AS(regularized_incomplete_beta(1.0, 1.0, 1.5), Error);
}
