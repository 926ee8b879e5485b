#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cdalab {

/// Two-sided p of a standard normal statistic.
double normal_two_sided_p(double z);
/// Two-sided p of a Student t statistic with `df` degrees of freedom.
double student_two_sided_p(double t, double df);

double bonferroni(double p, double m);

struct TestResult {
  std::uint64_t n_control = 0;
  std::uint64_t n_treat = 0;
  double control_mean = 0.0;
  double mean_effect = 0.0;
  double t_stat = 0.0;
  double p_two_sided = 1.0;
  double p_bonferroni = 1.0;
  /// Both samples have zero variance and different means (t is infinite).
  bool degenerate = false;
};

enum class PValueMethod { Normal, StudentWelch };

/// Welch unequal-variance two-sample t test of treat - control. p_bonferroni
/// is filled with m = 1; callers apply their own family size.
/// Throws std::invalid_argument on an empty sample.
TestResult t_test(std::span<const double> treat, std::span<const double> control,
                  PValueMethod method = PValueMethod::Normal);

/// Welch t from summary statistics (sample variances with n - 1).
double welch_t(double mean_t, double var_t, double n_t, double mean_c, double var_c, double n_c);

struct MwuResult {
  /// U of the first sample: pairs (treat, control) with treat > control, ties counting 1/2.
  double u = 0.0;
  double z = 0.0;
  double p_two_sided = 1.0;
};

/// Mann-Whitney U with normal approximation and tie correction, no
/// continuity correction. Throws std::invalid_argument on an empty sample.
MwuResult mwu_test(std::span<const double> treat, std::span<const double> control);

/// Mean absolute deviation over root-mean-square deviation, both about the
/// mean. Throws std::invalid_argument for fewer than two values or zero dispersion.
double fat_tail_ratio(std::span<const double> values);

/// Two-sided binomial test of k successes in n trials at probability p.
/// Exact (likelihood-ordering, as in R's binom.test) up to n = 1e5, normal
/// approximation with continuity correction above.
double binomial_test(std::uint64_t k, std::uint64_t n, double p);

}  // namespace cdalab
