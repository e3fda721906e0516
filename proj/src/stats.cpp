#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "histent/error.hpp"
#include "histent/stats.hpp"

namespace histent::stats {

std::string_view name_of(Method m) {
  switch (m) {
    case Method::WelchT: return "welch_t";
    case Method::Pearson: return "pearson";
    case Method::ChiSquareYates: return "chi_square_yates";
    case Method::FisherExact: return "fisher_exact";
  }
  return "";
}

double ContingencyTable::expected(int i, int j) const {
  const std::size_t total = n();
  if (total == 0) return 0.0;
  return static_cast<double>(row(i)) * static_cast<double>(col(j)) / static_cast<double>(total);
}

double ContingencyTable::min_expected() const {
  return std::min({expected(0, 0), expected(0, 1), expected(1, 0), expected(1, 1)});
}

SummarySample summarize(const std::vector<double>& values) {
  if (values.size() < 2) throw Error(ErrorCode::DomainError, "need at least two values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return SummarySample{mean, std::sqrt(ss / static_cast<double>(values.size() - 1)), values.size()};
}

TestResult welch_t_test(const SummarySample& x, const SummarySample& y) {
  if (x.n < 2 || y.n < 2) throw Error(ErrorCode::DomainError, "each sample needs n >= 2");
  if (x.sd < 0.0 || y.sd < 0.0) throw Error(ErrorCode::DomainError, "negative standard deviation");
  const double vx = x.sd * x.sd / static_cast<double>(x.n);
  const double vy = y.sd * y.sd / static_cast<double>(y.n);
  const double se2 = vx + vy;
  TestResult r;
  r.method = Method::WelchT;
  if (se2 == 0.0) {
    r.degenerate = true;
    if (x.mean == y.mean) {
      r.statistic = 0.0;
      r.p_value = 1.0;
    } else {
      r.statistic = x.mean > y.mean ? std::numeric_limits<double>::infinity()
                                    : -std::numeric_limits<double>::infinity();
      r.p_value = 0.0;
    }
    return r;
  }
  r.statistic = (x.mean - y.mean) / std::sqrt(se2);
  const double df = se2 * se2 / (vx * vx / static_cast<double>(x.n - 1) +
                                 vy * vy / static_cast<double>(y.n - 1));
  r.df = df;
  r.p_value = std::clamp(t_two_sided_p(r.statistic, df), 0.0, 1.0);
  return r;
}

TestResult welch_t_test(const std::vector<double>& x, const std::vector<double>& y) {
  return welch_t_test(summarize(x), summarize(y));
}

TestResult pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw Error(ErrorCode::LengthMismatch, "pearson needs equal-length samples");
  if (x.size() < 3) throw Error(ErrorCode::DomainError, "pearson needs at least three pairs");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::ZeroVariance, "a sample is constant");
  const double rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  TestResult r;
  r.method = Method::Pearson;
  r.statistic = rho;
  r.df = n - 2.0;
  if (std::fabs(rho) == 1.0) {
    r.p_value = 0.0;
  } else {
    const double t = rho * std::sqrt((n - 2.0) / (1.0 - rho * rho));
    r.p_value = std::clamp(t_two_sided_p(t, n - 2.0), 0.0, 1.0);
  }
  return r;
}

TestResult chi_square_yates(const ContingencyTable& t) {
  if (t.row(0) == 0 || t.row(1) == 0 || t.col(0) == 0 || t.col(1) == 0)
    throw Error(ErrorCode::EmptyMargin, "chi-square needs nonzero margins");
  const double n = static_cast<double>(t.n());
  const double ad = static_cast<double>(t.a) * static_cast<double>(t.d);
  const double bc = static_cast<double>(t.b) * static_cast<double>(t.c);
  const double diff = std::max(0.0, std::fabs(ad - bc) - n / 2.0);
  const double denom = static_cast<double>(t.row(0)) * static_cast<double>(t.row(1)) *
                       static_cast<double>(t.col(0)) * static_cast<double>(t.col(1));
  TestResult r;
  r.method = Method::ChiSquareYates;
  r.statistic = n * diff * diff / denom;
  r.df = 1.0;
  r.p_value = std::clamp(chisq_sf(r.statistic, 1.0), 0.0, 1.0);
  return r;
}

namespace {

double log_choose(std::size_t n, std::size_t k) {
  return log_gamma(static_cast<double>(n) + 1.0) - log_gamma(static_cast<double>(k) + 1.0) -
         log_gamma(static_cast<double>(n - k) + 1.0);
}

struct Margins {
  std::size_t r1, r2, c1, n, lo, hi;
};

Margins margins_of(const ContingencyTable& t) {
  if (t.n() == 0) throw Error(ErrorCode::EmptyMargin, "Fisher test needs a nonempty table");
  Margins m{t.row(0), t.row(1), t.col(0), t.n(), 0, 0};
  m.lo = m.c1 > m.r2 ? m.c1 - m.r2 : 0;
  m.hi = std::min(m.r1, m.c1);
  return m;
}

double log_probability(const Margins& m, std::size_t a) {
  return log_choose(m.r1, a) + log_choose(m.r2, m.c1 - a) - log_choose(m.n, m.c1);
}

}  // namespace

std::vector<std::pair<ContingencyTable, double>> fisher_distribution(const ContingencyTable& t) {
  const Margins m = margins_of(t);
  std::vector<std::pair<ContingencyTable, double>> out;
  for (std::size_t a = m.lo; a <= m.hi; ++a) {
    const ContingencyTable table{a, m.r1 - a, m.c1 - a, m.r2 - (m.c1 - a)};
    out.emplace_back(table, std::exp(log_probability(m, a)));
  }
  return out;
}

TestResult fisher_exact(const ContingencyTable& t) {
  const Margins m = margins_of(t);
  const double observed = log_probability(m, t.a);
  // Relative tolerance so ties in probability are not lost to rounding.
  const double cutoff = observed + std::log1p(1e-7);
  double p = 0.0;
  for (std::size_t a = m.lo; a <= m.hi; ++a) {
    const double lp = log_probability(m, a);
    if (lp <= cutoff) p += std::exp(lp);
  }
  TestResult r;
  r.method = Method::FisherExact;
  const double ad = static_cast<double>(t.a) * static_cast<double>(t.d);
  const double bc = static_cast<double>(t.b) * static_cast<double>(t.c);
  if (bc > 0.0) {
    r.statistic = ad / bc;
  } else {
    r.statistic = ad > 0.0 ? std::numeric_limits<double>::infinity()
                           : std::numeric_limits<double>::quiet_NaN();
  }
  r.p_value = std::clamp(p, 0.0, 1.0);
  return r;
}

TestResult select_2x2_test(const ContingencyTable& t) {
  if (t.n() == 0) throw Error(ErrorCode::EmptyMargin, "2x2 test needs a nonempty table");
  if (t.min_expected() < 5.0) return fisher_exact(t);
  return chi_square_yates(t);
}

namespace {

std::string number(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string csv_header() { return "method,statistic,df,p_value"; }

std::string csv_row(const TestResult& r) {
  return std::string(name_of(r.method)) + "," + number(r.statistic) + "," +
         (r.df ? number(*r.df) : "") + "," + number(r.p_value);
}

std::string to_json(const TestResult& r) {
  nlohmann::ordered_json j;
  j["method"] = std::string(name_of(r.method));
  j["statistic"] = std::isfinite(r.statistic) ? nlohmann::ordered_json(r.statistic)
                                              : nlohmann::ordered_json(number(r.statistic));
  j["df"] = r.df ? nlohmann::ordered_json(*r.df) : nlohmann::ordered_json(nullptr);
  j["p_value"] = r.p_value;
  j["degenerate"] = r.degenerate;
  return j.dump();
}

}  // namespace histent::stats
