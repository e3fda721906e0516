#ifndef HISTENT_STATS_HPP
#define HISTENT_STATS_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace histent::stats {

// --- special functions ----------------------------------------------------
// All throw Error(DomainError) outside their domain or on NaN input.

/// ln Γ(x) for x > 0.
double log_gamma(double x);

/// Regularized lower incomplete gamma P(s, x), s > 0, x >= 0.
double regularized_gamma_p(double s, double x);
/// Upper complement Q(s, x) = 1 - P(s, x), computed without cancellation.
double regularized_gamma_q(double s, double x);

/// Regularized incomplete beta I_x(a, b), a, b > 0, 0 <= x <= 1.
double regularized_incomplete_beta(double a, double b, double x);

/// Student t distribution with df > 0.
double t_cdf(double t, double df);
/// P(|T| >= |t|).
double t_two_sided_p(double t, double df);

/// Chi-square distribution with k > 0 degrees of freedom.
double chisq_cdf(double x, double k);
double chisq_sf(double x, double k);

double normal_cdf(double x);

// --- tests ----------------------------------------------------------------

enum class Method { WelchT, Pearson, ChiSquareYates, FisherExact };

std::string_view name_of(Method m);

struct TestResult {
  /// t for Welch and Pearson, chi-square for Yates, the sample odds ratio
  /// for Fisher.
  double statistic = 0.0;
  double p_value = 1.0;
  std::optional<double> df;
  Method method = Method::WelchT;
  /// Set when a convention replaced the test (both samples constant).
  bool degenerate = false;
};

/// Counts of a 2x2 table laid out as
///   a b
///   c d
struct ContingencyTable {
  std::size_t a = 0, b = 0, c = 0, d = 0;

  std::size_t n() const { return a + b + c + d; }
  std::size_t row(int i) const { return i == 0 ? a + b : c + d; }
  std::size_t col(int j) const { return j == 0 ? a + c : b + d; }
  double expected(int i, int j) const;
  double min_expected() const;

  friend bool operator==(const ContingencyTable&, const ContingencyTable&) = default;
};

struct SummarySample {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation
  std::size_t n = 0;
};

/// Mean and sample SD. Throws Error(DomainError) for fewer than 2 values.
SummarySample summarize(const std::vector<double>& values);

/// Welch's unequal-variance t-test. Needs n >= 2 on both sides. When both
/// SDs are zero the result is flagged degenerate: p = 1 for equal means,
/// p = 0 otherwise.
TestResult welch_t_test(const SummarySample& x, const SummarySample& y);
TestResult welch_t_test(const std::vector<double>& x, const std::vector<double>& y);

/// Pearson correlation with a two-sided t test on n - 2 df. Throws
/// Error(LengthMismatch), Error(ZeroVariance), or Error(DomainError) for
/// n < 3.
TestResult pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Continuity-corrected chi-square on 1 df. The correction never exceeds
/// |ad - bc|. Throws Error(EmptyMargin) when a row or column sums to zero.
TestResult chi_square_yates(const ContingencyTable& t);

/// Two-sided Fisher exact test: sum of the probabilities of same-margin
/// tables that are no more likely than the observed one. Throws
/// Error(EmptyMargin) for an empty table.
TestResult fisher_exact(const ContingencyTable& t);

/// Every table sharing the margins of `t`, with its hypergeometric
/// probability.
std::vector<std::pair<ContingencyTable, double>> fisher_distribution(const ContingencyTable& t);

/// Fisher when some expected count is below 5, Yates otherwise.
TestResult select_2x2_test(const ContingencyTable& t);

// --- output ---------------------------------------------------------------

/// "method,statistic,df,p_value"
std::string csv_header();
std::string csv_row(const TestResult& r);
/// {"method":...,"statistic":...,"df":...,"p_value":...,"degenerate":...}
std::string to_json(const TestResult& r);

}  // namespace histent::stats

#endif  // HISTENT_STATS_HPP
