#include "quorum/stats.hpp"

#include <algorithm>
#include <cmath>

namespace quorum::stats {

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> values)
    : samples_(std::move(values)) {
  if (samples_.empty()) {
    throw StatsError("empirical distribution needs at least one sample");
  }
  for (double v : samples_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw StatsError("sample outside [0, 1]: " + std::to_string(v));
    }
  }
  std::sort(samples_.begin(), samples_.end());
}

double EmpiricalDistribution::cdf(double x) const {
  const auto at_most =
      std::upper_bound(samples_.begin(), samples_.end(), x) - samples_.begin();
  return static_cast<double>(at_most) / static_cast<double>(samples_.size());
}

double EmpiricalDistribution::sf(double x) const { return 1.0 - cdf(x); }

std::string to_string(KsMethod method) {
  return method == KsMethod::ExactPermutation ? "exact_permutation"
                                              : "asymptotic_series";
}

KsMethod ks_method_from_string(const std::string& s) {
  if (s == "exact_permutation") return KsMethod::ExactPermutation;
  if (s == "asymptotic_series") return KsMethod::AsymptoticSeries;
  throw StatsError("unknown ks method: " + s);
}

namespace {

// Max over merged sample points of |i*n2 - j*n1| where i, j are the counts
// consumed from each sorted sample. Exact integer numerator of D over the
// common denominator n1*n2; runs of equal values are consumed together so
// ties never split an evaluation point.
std::int64_t ks_stat_num(const std::vector<double>& a,
                         const std::vector<double>& b) {
  const std::int64_t n1 = static_cast<std::int64_t>(a.size());
  const std::int64_t n2 = static_cast<std::int64_t>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  std::int64_t max_num = 0;
  while (i < a.size() || j < b.size()) {
    const double v = (j >= b.size() || (i < a.size() && a[i] <= b[j])) ? a[i]
                                                                       : b[j];
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    const std::int64_t diff = std::abs(static_cast<std::int64_t>(i) * n2 -
                                       static_cast<std::int64_t>(j) * n1);
    max_num = std::max(max_num, diff);
  }
  return max_num;
}

// Same statistic for one permutation assignment: `in_a[k]` marks whether
// pooled position k belongs to side a. `pool` is sorted.
std::int64_t ks_stat_num_assignment(const std::vector<double>& pool,
                                    const std::vector<bool>& in_a,
                                    std::int64_t n1, std::int64_t n2) {
  std::int64_t cum_a = 0;
  std::int64_t cum_b = 0;
  std::int64_t max_num = 0;
  std::size_t k = 0;
  while (k < pool.size()) {
    const double v = pool[k];
    while (k < pool.size() && pool[k] == v) {
      if (in_a[k]) {
        ++cum_a;
      } else {
        ++cum_b;
      }
      ++k;
    }
    max_num = std::max(max_num, std::abs(cum_a * n2 - cum_b * n1));
  }
  return max_num;
}

}  // namespace

double ks_statistic(const EmpiricalDistribution& a,
                    const EmpiricalDistribution& b) {
  const std::int64_t num = ks_stat_num(a.samples(), b.samples());
  return static_cast<double>(num) /
         static_cast<double>(a.n() * b.n());
}

double ks_pvalue_exact(const EmpiricalDistribution& a,
                       const EmpiricalDistribution& b, std::size_t cap) {
  const std::size_t n1 = a.n();
  const std::size_t n2 = b.n();
  if (n1 + n2 > cap) {
    throw StatsError("exact method cap exceeded (n1+n2=" +
                     std::to_string(n1 + n2) + " > " + std::to_string(cap) +
                     "); use the asymptotic method");
  }
  std::vector<double> pool;
  pool.reserve(n1 + n2);
  pool.insert(pool.end(), a.samples().begin(), a.samples().end());
  pool.insert(pool.end(), b.samples().begin(), b.samples().end());
  std::sort(pool.begin(), pool.end());

  const std::int64_t observed = ks_stat_num(a.samples(), b.samples());

  // Enumerate all C(n1+n2, n1) position assignments via prev_permutation
  // over a selector of n1 ones followed by n2 zeros.
  std::vector<bool> in_a(n1 + n2, false);
  std::fill(in_a.begin(), in_a.begin() + n1, true);
  std::int64_t total = 0;
  std::int64_t at_least = 0;
  do {
    ++total;
    if (ks_stat_num_assignment(pool, in_a, n1, n2) >= observed) ++at_least;
  } while (std::prev_permutation(in_a.begin(), in_a.end()));
  return static_cast<double>(at_least) / static_cast<double>(total);
}

double ks_pvalue_asymptotic(double d, std::size_t n1, std::size_t n2) {
  const double en = static_cast<double>(n1) * static_cast<double>(n2) /
                    static_cast<double>(n1 + n2);
  const double lambda = std::sqrt(en) * d;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1;; ++k) {
    const double term =
        2.0 * std::exp(-2.0 * static_cast<double>(k) * static_cast<double>(k) *
                       lambda * lambda);
    if (term < 1e-12) break;
    sum += sign * term;
    sign = -sign;
  }
  return std::clamp(sum, 0.0, 1.0);
}

KsReport ks_2samp(const EmpiricalDistribution& a,
                  const EmpiricalDistribution& b) {
  KsReport report;
  report.n1 = a.n();
  report.n2 = b.n();
  report.statistic = ks_statistic(a, b);
  if (a.n() + b.n() <= kExactMethodCap) {
    report.method = KsMethod::ExactPermutation;
    report.p_value = ks_pvalue_exact(a, b);
  } else {
    report.method = KsMethod::AsymptoticSeries;
    report.p_value = ks_pvalue_asymptotic(report.statistic, a.n(), b.n());
  }
  return report;
}

}  // namespace quorum::stats
