#pragma once

namespace efcil {

/// I_x(a, b), evaluated with the Lentz continued fraction on whichever side
/// of the symmetry point converges fastest.
double regularized_incomplete_beta(double a, double b, double x);

/// Two-sided p-value P(|T| >= |t|) for Student t with `df` degrees of freedom.
double student_t_pvalue(double t, double df);

/// Upper tail P(F >= f) of the F(df1, df2) distribution.
double f_pvalue(double f, double df1, double df2);

double norm_cdf(double x);

/// Acklam's rational approximation followed by one Halley refinement step.
double inv_norm_cdf(double q);

}  // namespace efcil
