#pragma once

namespace newsent::dist {

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed directly in the tail.
double gamma_q(double a, double x);

double normal_cdf(double x);

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

/// P(X >= x) for a chi-square variable with `df` degrees of freedom.
double chi_square_upper_p(double x, double df);

}  // namespace newsent::dist
