#include "cdalab/stats/tests.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace cdalab {

double normal_two_sided_p(double z) {
  if (std::isnan(z)) return std::numeric_limits<double>::quiet_NaN();
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

double student_two_sided_p(double t, double df) {
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  if (!(df > 0.0)) return normal_two_sided_p(t);
  const boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double bonferroni(double p, double m) { return std::min(1.0, p * m); }

namespace {

struct Moments {
  double n = 0.0, mean = 0.0, var = 0.0;
};

Moments moments(std::span<const double> v) {
  Moments m;
  m.n = static_cast<double>(v.size());
  for (double x : v) m.mean += x;
  m.mean /= m.n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.var = ss / (m.n - 1.0);
  }
  return m;
}

}  // namespace

double welch_t(double mean_t, double var_t, double n_t, double mean_c, double var_c, double n_c) {
  const double se2 = var_t / n_t + var_c / n_c;
  const double diff = mean_t - mean_c;
  if (se2 <= 0.0) {
    if (diff == 0.0) return 0.0;
    return diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
  return diff / std::sqrt(se2);
}

TestResult t_test(std::span<const double> treat, std::span<const double> control, PValueMethod method) {
  if (treat.empty() || control.empty()) throw std::invalid_argument("t test needs two non-empty samples");
  const Moments t = moments(treat), c = moments(control);
  TestResult r;
  r.n_treat = treat.size();
  r.n_control = control.size();
  r.control_mean = c.mean;
  r.mean_effect = t.mean - c.mean;
  r.t_stat = welch_t(t.mean, t.var, t.n, c.mean, c.var, c.n);
  r.degenerate = std::isinf(r.t_stat);
  if (r.degenerate) {
    r.p_two_sided = 0.0;
  } else if (method == PValueMethod::StudentWelch) {
    const double a = t.var / t.n, b = c.var / c.n;
    double df = (a + b) * (a + b);
    const double denom = (t.n > 1 ? a * a / (t.n - 1) : 0.0) + (c.n > 1 ? b * b / (c.n - 1) : 0.0);
    df = denom > 0 ? df / denom : std::numeric_limits<double>::infinity();
    r.p_two_sided = std::isinf(df) ? normal_two_sided_p(r.t_stat) : student_two_sided_p(r.t_stat, df);
  } else {
    r.p_two_sided = normal_two_sided_p(r.t_stat);
  }
  r.p_bonferroni = r.p_two_sided;
  return r;
}

MwuResult mwu_test(std::span<const double> treat, std::span<const double> control) {
  if (treat.empty() || control.empty()) throw std::invalid_argument("MWU test needs two non-empty samples");
  const std::size_t n1 = treat.size(), n2 = control.size(), n = n1 + n2;
  std::vector<std::pair<double, bool>> all;
  all.reserve(n);
  for (double v : treat) all.emplace_back(v, true);
  for (double v : control) all.emplace_back(v, false);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum = 0.0, tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && all[j].first == all[i].first) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    const auto t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].second) rank_sum += avg_rank;
    }
    i = j;
  }
  const double d1 = static_cast<double>(n1), d2 = static_cast<double>(n2), dn = static_cast<double>(n);
  MwuResult r;
  r.u = rank_sum - d1 * (d1 + 1.0) / 2.0;
  const double var = d1 * d2 / 12.0 * ((dn + 1.0) - (n > 1 ? tie_term / (dn * (dn - 1.0)) : 0.0));
  if (var <= 0.0) {
    r.z = 0.0;
    r.p_two_sided = 1.0;
    return r;
  }
  r.z = (r.u - d1 * d2 / 2.0) / std::sqrt(var);
  r.p_two_sided = normal_two_sided_p(r.z);
  return r;
}

double fat_tail_ratio(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("fat_tail_ratio needs at least two values");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double abs_sum = 0.0, sq_sum = 0.0;
  for (double v : values) {
    abs_sum += std::abs(v - mean);
    sq_sum += (v - mean) * (v - mean);
  }
  const auto n = static_cast<double>(values.size());
  if (sq_sum <= 0.0) throw std::invalid_argument("fat_tail_ratio is undefined for zero dispersion");
  return (abs_sum / n) / std::sqrt(sq_sum / n);
}

double binomial_test(std::uint64_t k, std::uint64_t n, double p) {
  if (k > n) throw std::invalid_argument("binomial test needs k <= n");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial test needs p in [0, 1]");
  if (n == 0) return 1.0;
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (p == 1.0) return k == n ? 1.0 : 0.0;
  const double dn = static_cast<double>(n), dk = static_cast<double>(k);
  if (n > 100'000) {
    const double mean = dn * p, sd = std::sqrt(dn * p * (1.0 - p));
    const double dev = std::abs(dk - mean) - 0.5;
    if (dev <= 0.0) return 1.0;
    return std::min(1.0, normal_two_sided_p(dev / sd));
  }
  const double lp = std::log(p), lq = std::log1p(-p), lgn = std::lgamma(dn + 1.0);
  auto log_pmf = [&](double i) { return lgn - std::lgamma(i + 1.0) - std::lgamma(dn - i + 1.0) + i * lp + (dn - i) * lq; };
  const double threshold = log_pmf(dk) + std::log1p(1e-7);
  double total = 0.0;
  for (std::uint64_t i = 0; i <= n; ++i) {
    const double lpmf = log_pmf(static_cast<double>(i));
    if (lpmf <= threshold) total += std::exp(lpmf);
  }
  return std::min(1.0, total);
}

}  // namespace cdalab
