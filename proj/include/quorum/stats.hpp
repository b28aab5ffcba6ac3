#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "quorum/errors.hpp"

namespace quorum::stats {

// Empirical distribution over certainty values in [0, 1]. Samples are kept
// sorted, duplicates retained.
class EmpiricalDistribution {
 public:
  // Sorts a copy of `values`. Throws StatsError on empty input or any
  // value outside [0, 1].
  explicit EmpiricalDistribution(std::vector<double> values);

  const std::vector<double>& samples() const { return samples_; }
  std::size_t n() const { return samples_.size(); }

  // P(X <= x), right-continuous step function with values in {0, 1/n, .., 1}.
  double cdf(double x) const;

  // P(X > x). Computed as 1.0 - cdf(x) so cdf(x) + sf(x) == 1.0 exactly.
  double sf(double x) const;

  friend bool operator==(const EmpiricalDistribution&,
                         const EmpiricalDistribution&) = default;

 private:
  std::vector<double> samples_;
};

enum class KsMethod { ExactPermutation, AsymptoticSeries };

std::string to_string(KsMethod method);
KsMethod ks_method_from_string(const std::string& s);

struct KsReport {
  double statistic = 0.0;
  double p_value = 1.0;
  KsMethod method = KsMethod::ExactPermutation;
  std::size_t n1 = 0;
  std::size_t n2 = 0;

  friend bool operator==(const KsReport&, const KsReport&) = default;
};

// Pairs with n1 + n2 at or below this cap take the exact permutation path
// in ks_2samp; C(12,6) = 924 assignments, so the cap is never a cost.
inline constexpr std::size_t kExactMethodCap = 12;

// D = sup_x |F_a(x) - F_b(x)|, evaluated at the merged sample points.
double ks_statistic(const EmpiricalDistribution& a,
                    const EmpiricalDistribution& b);

// Two-sided exact p-value: the fraction of all C(n1+n2, n1) assignments of
// the pooled sample positions whose KS statistic is >= the observed D.
// Statistic comparisons are done on the integer numerator over n1*n2, so
// ties are exact. Throws StatsError when n1 + n2 exceeds `cap`.
double ks_pvalue_exact(const EmpiricalDistribution& a,
                       const EmpiricalDistribution& b,
                       std::size_t cap = kExactMethodCap);

// Asymptotic two-sided p-value: p = Q(lambda) with
//   lambda = sqrt(n1*n2/(n1+n2)) * D,
//   Q(lambda) = 2 * sum_{k>=1} (-1)^(k-1) * exp(-2 k^2 lambda^2).
// The series is truncated once a term's magnitude falls below 1e-12 and the
// sum is clamped to [0, 1]. For lambda < 0.2 the value is 1 to within 6e-13,
// below the truncation scale, and is returned directly (the term-size rule
// alone would never terminate as lambda -> 0).
double ks_pvalue_asymptotic(double d, std::size_t n1, std::size_t n2);

// D from ks_statistic; p exact when n1 + n2 <= kExactMethodCap, else
// asymptotic; the method taken is recorded in the report.
KsReport ks_2samp(const EmpiricalDistribution& a,
                  const EmpiricalDistribution& b);

}  // namespace quorum::stats
