#include "kftam/bessel.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "kftam/errors.hpp"

namespace kftam {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIterations = 10000;

// Taylor coefficients of 1/Γ(z) = Σ c_k z^k, k = 1..26.
constexpr std::array<double, 26> kRecipGamma{
    1.0,
    0.5772156649015329,
    -0.6558780715202538,
    -0.0420026350340952,
    0.1665386113822915,
    -0.0421977345555443,
    -0.0096219715278770,
    0.0072189432466630,
    -0.0011651675918591,
    -0.0002152416741149,
    0.0001280502823882,
    -0.0000201348547807,
    -0.0000012504934821,
    0.0000011330272320,
    -0.0000002056338417,
    0.0000000061160950,
    0.0000000050020075,
    -0.0000000011812746,
    0.0000000001043427,
    0.0000000000077823,
    -0.0000000000036968,
    0.0000000000005100,
    -0.0000000000000206,
    -0.0000000000000054,
    0.0000000000000014,
    0.0000000000000001,
};

struct GammaTerms {
  double gam1;   // (1/Γ(1−μ) − 1/Γ(1+μ)) / (2μ)
  double gam2;   // (1/Γ(1−μ) + 1/Γ(1+μ)) / 2
  double gampl;  // 1/Γ(1+μ)
  double gammi;  // 1/Γ(1−μ)
};

// 1/Γ(1±μ) = Σ_k c_k (±μ)^(k−1); the odd and even parts give gam2 and gam1
// without cancellation as μ → 0.
GammaTerms gamma_terms(double mu) {
  double even = 0.0;
  double odd = 0.0;
  double power = 1.0;
  for (std::size_t k = 0; k < kRecipGamma.size(); ++k) {
    // kRecipGamma[k] multiplies μ^k in 1/Γ(1+μ).
    if (k % 2 == 0) {
      even += kRecipGamma[k] * power;
    } else {
      odd += kRecipGamma[k] * power;
    }
    power *= mu;
  }
  double gam1 = 0.0;
  {
    double p = 1.0;
    for (std::size_t k = 1; k < kRecipGamma.size(); k += 2) {
      gam1 -= kRecipGamma[k] * p;
      p *= mu * mu;
    }
  }
  return {gam1, even, even + odd, even - odd};
}

// K_μ(x) and K_{μ+1}(x) for |μ| <= 1/2.
std::pair<double, double> bessel_k_fractional(double mu, double x) {
  if (x <= 2.0) {
    const double x2 = 0.5 * x;
    const double pimu = std::numbers::pi * mu;
    const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(x2);
    double e = mu * d;
    const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
    const GammaTerms g = gamma_terms(mu);
    double ff = fact * (g.gam1 * std::cosh(e) + g.gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / g.gampl;
    double q = 0.5 / (e * g.gammi);
    double c = 1.0;
    d = x2 * x2;
    double sum1 = p;
    for (int i = 1; i <= kMaxIterations; ++i) {
      ff = (i * ff + p + q) / (i * i - mu * mu);
      c *= d / i;
      p /= i - mu;
      q /= i + mu;
      const double del = c * ff;
      sum += del;
      sum1 += c * (p - i * ff);
      if (std::abs(del) < std::abs(sum) * kEps) break;
    }
    return {sum, sum1 * 2.0 / x};
  }

  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  const double a1 = 0.25 - mu * mu;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 1; i <= kMaxIterations; ++i) {
    a -= 2 * i;
    c = -a * c / (i + 1.0);
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < kEps) break;
  }
  h *= a1;
  const double kmu = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) / s;
  return {kmu, kmu * (mu + x + 0.5 - h) / x};
}

}  // namespace

double bessel_k(double v, double x) {
  if (!(x > 0.0) || !std::isfinite(x) || !std::isfinite(v)) {
    raise(ErrorKind::kDomainError, "K_v(x) needs finite v and x > 0, got x = " + std::to_string(x));
  }
  const double order = std::abs(v);
  const int steps = static_cast<int>(order + 0.5);
  const double mu = order - steps;
  auto [k_lo, k_hi] = bessel_k_fractional(mu, x);
  for (int i = 1; i <= steps; ++i) {
    const double next = (mu + i) * (2.0 / x) * k_hi + k_lo;
    k_lo = k_hi;
    k_hi = next;
  }
  return k_lo;
}

double bessel_k_derivative(double v, double x) { return -bessel_k(v - 1.0, x) - (v / x) * bessel_k(v, x); }

}  // namespace kftam
