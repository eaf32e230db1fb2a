#pragma once

namespace kftam {

/// Modified Bessel function of the second kind K_v(x), any real order
/// (K_{−v} = K_v). The fractional part of the order is evaluated by Temme's
/// series for x <= 2 and by Steed's continued fraction for x > 2; integer
/// steps use the upward recurrence. Throws DomainError for x <= 0 or
/// non-finite input.
double bessel_k(double v, double x);

/// dK_v/dx = −K_{v−1}(x) − (v/x) K_v(x).
double bessel_k_derivative(double v, double x);

}  // namespace kftam
