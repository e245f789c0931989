#pragma once
// Core value types for multiple testing with e-values: validation helpers,
// the three symmetric e-merging functions, and p <-> e calibrators.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace edisco {

// Realized e-values are nonnegative and may be +infinity; realized p-values
// live in [0, 1]. Both travel as plain doubles and are validated at the API
// boundaries that construct or consume them.
using evalue = double;
using pvalue = double;

inline constexpr double infinite_evalue = std::numeric_limits<double>::infinity();

// Input too large for an exhaustive-enumeration oracle.
struct size_error : std::domain_error {
  using std::domain_error::domain_error;
};

// A test statistic is undefined for the given sample (e.g. zero variance).
struct score_error : std::domain_error {
  using std::domain_error::domain_error;
};

// Malformed input file; row/column are 1-based, 0 = not applicable.
struct parse_error : std::runtime_error {
  std::size_t row;
  std::size_t column;
  parse_error(const std::string& msg, std::size_t r = 0, std::size_t c = 0)
      : std::runtime_error(r == 0 ? msg
                                  : msg + " (row " + std::to_string(r) +
                                        ", column " + std::to_string(c) + ")"),
        row(r),
        column(c) {}
};

inline bool valid_evalue(double v) noexcept { return v >= 0.0; }  // NaN fails

inline bool valid_pvalue(double v) noexcept { return v >= 0.0 && v <= 1.0; }

inline void require_evalue(double v, const char* what = "e-value") {
  if (!valid_evalue(v))
    throw std::domain_error(std::string(what) + " must be nonnegative, got " +
                            std::to_string(v));
}

inline void require_pvalue(double v, const char* what = "p-value") {
  if (!valid_pvalue(v))
    throw std::domain_error(std::string(what) + " must lie in [0, 1], got " +
                            std::to_string(v));
}

// Which symmetric e-merging function drives a computation. For every input
// vector, bonferroni <= simes <= arithmetic_mean.
enum class merge_kind { arithmetic_mean, bonferroni, simes };

inline const char* to_string(merge_kind k) noexcept {
  switch (k) {
    case merge_kind::arithmetic_mean: return "arithmetic_mean";
    case merge_kind::bonferroni: return "bonferroni";
    case merge_kind::simes: return "simes";
  }
  return "?";
}

namespace detail {

// Merge kernels without input validation, for callers (enumeration oracles,
// sweep engines) that validate the whole vector once up front.

inline evalue arithmetic_mean_merge_unchecked(std::span<const evalue> evalues) {
  if (evalues.empty()) return 1.0;
  double sum = 0.0;
  for (double e : evalues) sum += e;
  return sum / static_cast<double>(evalues.size());
}

inline evalue bonferroni_merge_unchecked(std::span<const evalue> evalues) {
  if (evalues.empty()) return 1.0;
  double m = evalues[0];
  for (double e : evalues.subspan(1)) m = std::max(m, e);
  return m / static_cast<double>(evalues.size());
}

inline evalue simes_merge_unchecked(std::span<const evalue> evalues) {
  if (evalues.empty()) return 1.0;
  std::vector<double> desc(evalues.begin(), evalues.end());
  std::sort(desc.begin(), desc.end(), std::greater<double>());
  const double n = static_cast<double>(desc.size());
  double best = 0.0;
  for (std::size_t i = 0; i < desc.size(); ++i)
    best = std::max(best, static_cast<double>(i + 1) * desc[i]);
  return best / n;
}

inline evalue merge_unchecked(merge_kind kind, std::span<const evalue> evalues) {
  switch (kind) {
    case merge_kind::arithmetic_mean: return arithmetic_mean_merge_unchecked(evalues);
    case merge_kind::bonferroni: return bonferroni_merge_unchecked(evalues);
    case merge_kind::simes: return simes_merge_unchecked(evalues);
  }
  throw std::domain_error("unknown merge kind");
}

inline void require_evalues(std::span<const evalue> evalues) {
  for (double e : evalues) require_evalue(e);
}

}  // namespace detail

// (1/n) * sum of the inputs. The empty merge is 1 by convention; a +infinity
// input propagates to a +infinity result.
inline evalue arithmetic_mean_merge(std::span<const evalue> evalues) {
  detail::require_evalues(evalues);
  return detail::arithmetic_mean_merge_unchecked(evalues);
}

// (1/n) * max of the inputs; empty merge is 1.
inline evalue bonferroni_merge(std::span<const evalue> evalues) {
  detail::require_evalues(evalues);
  return detail::bonferroni_merge_unchecked(evalues);
}

// max_i of i * e_[i] / n where e_[1] >= ... >= e_[n] is the descending
// rearrangement; empty merge is 1.
inline evalue simes_merge(std::span<const evalue> evalues) {
  detail::require_evalues(evalues);
  return detail::simes_merge_unchecked(evalues);
}

inline evalue merge(merge_kind kind, std::span<const evalue> evalues) {
  detail::require_evalues(evalues);
  return detail::merge_unchecked(kind, evalues);
}

// kappa * p^(kappa - 1) for kappa in (0, 1]. p = 0 maps to the limit value:
// +infinity for kappa < 1, and 1 for the constant calibrator kappa = 1.
inline evalue calibrate_p_to_e(pvalue p, double kappa) {
  if (!(kappa > 0.0 && kappa <= 1.0))
    throw std::domain_error("calibrator kappa must lie in (0, 1], got " +
                            std::to_string(kappa));
  require_pvalue(p);
  return kappa * std::pow(p, kappa - 1.0);
}

// Pointwise supremum of the calibrator family over kappa. Not a valid
// e-value in general; use for optimistic comparisons only.
inline double vs_bound(pvalue p) {
  require_pvalue(p);
  if (p == 0.0) return infinite_evalue;
  if (p > std::exp(-1.0)) return 1.0;
  return -std::exp(-1.0) / (p * std::log(p));
}

// min(1, 1/e); the only reasonable e-to-p transform. e = 0 gives 1 and
// e = +infinity gives 0.
inline pvalue e_to_p(evalue e) {
  require_evalue(e);
  if (e == 0.0) return 1.0;
  return std::min(1.0, 1.0 / e);
}

}  // namespace edisco
