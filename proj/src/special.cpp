#include <cmath>

#include "histent/error.hpp"
#include "histent/stats.hpp"

namespace histent::stats {

namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 100000;

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::DomainError, what);
}

// Power series for P(s, x); converges quickly for x < s + 1.
double gamma_p_series(double s, double x) {
  double term = 1.0 / s;
  double sum = term;
  for (int n = 1; n < kMaxIter; ++n) {
    term *= x / (s + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(-x + s * std::log(x) - log_gamma(s));
}

// Modified Lentz continued fraction for Q(s, x); used for x >= s + 1.
double gamma_q_fraction(double s, double x) {
  double b = x + 1.0 - s;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + s * std::log(x) - log_gamma(s)) * h;
}

// Continued fraction for I_x(a, b), valid for x < (a + 1) / (a + b + 2).
double beta_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < kMaxIter; ++m) {
    const int m2 = 2 * m;
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
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return h;
}

// I_x(a, b) given both x and y = 1 - x, so callers holding an accurate
// complement avoid cancellation.
double incomplete_beta(double a, double b, double x, double y) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_front =
      a * std::log(x) + b * std::log(y) - (log_gamma(a) + log_gamma(b) - log_gamma(a + b));
  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(log_front) * beta_fraction(a, b, x) / a;
  return 1.0 - std::exp(log_front) * beta_fraction(b, a, y) / b;
}

}  // namespace

double log_gamma(double x) {
  require(x > 0.0 && std::isfinite(x), "log_gamma needs a finite x > 0");
  return std::lgamma(x);
}

double regularized_gamma_p(double s, double x) {
  require(s > 0.0 && std::isfinite(s), "incomplete gamma needs s > 0");
  require(x >= 0.0 && !std::isnan(x), "incomplete gamma needs x >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < s + 1.0) return gamma_p_series(s, x);
  return 1.0 - gamma_q_fraction(s, x);
}

double regularized_gamma_q(double s, double x) {
  require(s > 0.0 && std::isfinite(s), "incomplete gamma needs s > 0");
  require(x >= 0.0 && !std::isnan(x), "incomplete gamma needs x >= 0");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < s + 1.0) return 1.0 - gamma_p_series(s, x);
  return gamma_q_fraction(s, x);
}

double regularized_incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b),
          "incomplete beta needs a, b > 0");
  require(x >= 0.0 && x <= 1.0, "incomplete beta needs 0 <= x <= 1");
  return incomplete_beta(a, b, x, 1.0 - x);
}

double t_two_sided_p(double t, double df) {
  require(df > 0.0 && !std::isnan(df), "t distribution needs df > 0");
  require(!std::isnan(t), "t distribution needs a number");
  if (std::isinf(t)) return 0.0;
  if (std::isinf(df)) return 2.0 * normal_cdf(-std::fabs(t));
  const double t2 = t * t;
  const double x = df / (df + t2);
  const double y = t2 / (df + t2);
  return incomplete_beta(df / 2.0, 0.5, x, y);
}

double t_cdf(double t, double df) {
  const double tail = 0.5 * t_two_sided_p(t, df);
  return t > 0.0 ? 1.0 - tail : tail;
}

double chisq_cdf(double x, double k) {
  require(k > 0.0, "chi-square distribution needs k > 0");
  if (x <= 0.0) return 0.0;
  return regularized_gamma_p(k / 2.0, x / 2.0);
}

double chisq_sf(double x, double k) {
  require(k > 0.0, "chi-square distribution needs k > 0");
  if (x <= 0.0) return 1.0;
  return regularized_gamma_q(k / 2.0, x / 2.0);
}

double normal_cdf(double x) {
  require(!std::isnan(x), "normal distribution needs a number");
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

}  // namespace histent::stats
