#pragma once

namespace prism::special {

// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
// `y` must equal 1 - x; passing it separately keeps precision when x is close to 1.
double incomplete_beta(double a, double b, double x, double y);
inline double incomplete_beta(double a, double b, double x) {
  return incomplete_beta(a, b, x, 1.0 - x);
}

// Student-t distribution function P(T <= t) with `df` degrees of freedom.
double student_t_cdf(double t, double df);
// P(|T| >= |t|).
double student_t_two_sided(double t, double df);

}  // namespace prism::special
