#include "efcil/distributions.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "efcil/error.hpp"
#include "efcil/text.hpp"

namespace efcil {

namespace {

constexpr int kMaxIterations = 200000;
constexpr double kTiny = 1e-300;
constexpr double kEpsilon = 1e-16;

double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEpsilon) return h;
  }
  fail(ErrorCode::Numeric, "incomplete beta: continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) fail(ErrorCode::InvalidArgument, "incomplete beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) fail(ErrorCode::InvalidArgument, "incomplete beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_pvalue(double t, double df) {
  if (!(df > 0.0)) fail(ErrorCode::InvalidArgument, "t p-value: df must be positive, got " + format_double(df));
  if (std::isnan(t)) fail(ErrorCode::InvalidArgument, "t p-value: t is NaN");
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  // The tail is evaluated directly; the incomplete beta switches to its
  // complement only when the result is close to 1, so small p-values keep
  // their relative precision.
  return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

double f_pvalue(double f, double df1, double df2) {
  if (!(df1 > 0.0) || !(df2 > 0.0)) fail(ErrorCode::InvalidArgument, "F p-value: degrees of freedom must be positive");
  if (std::isnan(f) || f < 0.0) fail(ErrorCode::InvalidArgument, "F p-value: statistic must be >= 0");
  if (std::isinf(f)) return 0.0;
  if (f == 0.0) return 1.0;
  return regularized_incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double inv_norm_cdf(double q) {
  if (!(q > 0.0 && q < 1.0)) fail(ErrorCode::InvalidArgument, "inverse normal cdf: q must be in (0, 1)");
  if (q == 0.5) return 0.0;
  // Upper quantiles reflect onto the lower tail; 1 - q is exact there and the
  // refinement below keeps full relative precision.
  if (q > 0.5) return -inv_norm_cdf(1.0 - q);
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double low = 0.02425;
  double x = 0.0;
  if (q < low) {
    const double r = std::sqrt(-2.0 * std::log(q));
    x = (((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
        ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
  } else {
    const double s = q - 0.5;
    const double r = s * s;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * s /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  // Halley step on Phi(x) - q.
  const double e = norm_cdf(x) - q;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace efcil
