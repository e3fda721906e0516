#ifndef HISTENT_TESTS_HP_ORACLE_HPP
#define HISTENT_TESTS_HP_ORACLE_HPP

#include <cstddef>
#include <vector>

namespace histent::testing::hp {

// 50-digit reference values, rounded to double on return.

double log_gamma(double x);
double gamma_p(double s, double x);
double gamma_q(double s, double x);
double ibeta(double a, double b, double x);
double t_cdf(double t, double df);
double chisq_cdf(double x, double k);
double normal_cdf(double x);

/// Welch statistic, df and two-sided p from raw samples.
struct WelchReference {
  double t, df, p;
};
WelchReference welch(const std::vector<double>& x, const std::vector<double>& y);

/// Pearson r and two-sided p.
struct PearsonReference {
  double r, p;
};
PearsonReference pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Two-sided Fisher p from exact integer binomial coefficients; ties are
/// decided exactly.
double fisher_p(std::size_t a, std::size_t b, std::size_t c, std::size_t d);

}  // namespace histent::testing::hp

#endif  // HISTENT_TESTS_HP_ORACLE_HPP
