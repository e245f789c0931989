#pragma once
// Discovery e-vectors and e-matrices: simultaneous lower confidence bounds on
// the number of true discoveries in rejection sets, valid under arbitrary
// dependence between the base e-values.
//
// Position conventions: e-values are held in ascending order; positions are
// 1-based within that order. A rejection set is a set of positions; its
// discovery vector entry j bounds the count of true discoveries if all but
// j - 1 of the rejections must be honored. The discovery matrix stacks the
// vectors of the nested top-r rejection sets, row r having columns 1..r.

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "evalues.hpp"
#include "parallel.hpp"

namespace edisco {

// E-values in ascending order together with the permutation that produced
// them, so results can be reported against the original hypothesis order.
class sorted_evalues {
 public:
  static sorted_evalues from_unsorted(std::vector<double> values) {
    check_values(values);
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return values[a] < values[b];
    });
    std::vector<double> ascending;
    ascending.reserve(values.size());
    for (std::size_t idx : order) ascending.push_back(values[idx]);
    return sorted_evalues(std::move(ascending), std::move(order));
  }

  // `values` must already be ascending; the identity permutation is recorded.
  static sorted_evalues from_sorted(std::vector<double> values) {
    check_values(values);
    if (!std::is_sorted(values.begin(), values.end()))
      throw std::invalid_argument("e-values must be in ascending order");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    return sorted_evalues(std::move(values), std::move(order));
  }

  std::size_t size() const noexcept { return values_.size(); }

  const std::vector<double>& values() const noexcept { return values_; }

  // Value at 1-based ascending position.
  double at(std::size_t position) const {
    check_position(position);
    return values_[position - 1];
  }

  // 0-based index the value at 1-based `position` had in the input order.
  std::size_t original_index(std::size_t position) const {
    check_position(position);
    return to_original_[position - 1];
  }

  // 1-based ascending position of the value with 0-based input index.
  std::size_t position_of(std::size_t original) const {
    if (original >= to_position_.size())
      throw std::domain_error("original index out of range");
    return to_position_[original];
  }

 private:
  sorted_evalues(std::vector<double> ascending, std::vector<std::size_t> order)
      : values_(std::move(ascending)),
        to_original_(std::move(order)),
        to_position_(values_.size()) {
    for (std::size_t pos = 0; pos < to_original_.size(); ++pos)
      to_position_[to_original_[pos]] = pos + 1;
  }

  static void check_values(const std::vector<double>& values) {
    if (values.empty())
      throw std::invalid_argument("need at least one e-value");
    for (double v : values) require_evalue(v);
  }

  void check_position(std::size_t position) const {
    if (position < 1 || position > values_.size())
      throw std::out_of_range("position out of range");
  }

  std::vector<double> values_;
  std::vector<std::size_t> to_original_;   // ascending position (0-based) -> input index
  std::vector<std::size_t> to_position_;   // input index -> ascending position (1-based)
};

// Nonempty set of 1-based positions within an e-value universe of size
// `universe`. Duplicates collapse; positions are kept ascending.
class rejection_set {
 public:
  rejection_set(std::vector<std::size_t> positions, std::size_t universe)
      : universe_(universe), positions_(std::move(positions)) {
    if (positions_.empty())
      throw std::invalid_argument("rejection set must be nonempty");
    std::sort(positions_.begin(), positions_.end());
    positions_.erase(std::unique(positions_.begin(), positions_.end()),
                     positions_.end());
    if (positions_.front() < 1 || positions_.back() > universe_)
      throw std::domain_error("rejection position out of range");
  }

  // The `count` largest positions {universe - count + 1, ..., universe}.
  static rejection_set top(std::size_t universe, std::size_t count) {
    if (count < 1 || count > universe)
      throw std::domain_error("top rejection count out of range");
    std::vector<std::size_t> positions(count);
    std::iota(positions.begin(), positions.end(), universe - count + 1);
    return rejection_set(std::move(positions), universe);
  }

  std::size_t size() const noexcept { return positions_.size(); }
  std::size_t universe() const noexcept { return universe_; }
  const std::vector<std::size_t>& positions() const noexcept { return positions_; }

 private:
  std::size_t universe_;
  std::vector<std::size_t> positions_;
};

// Lower-triangular K x K matrix with 1-based indices, column <= row.
class discovery_matrix {
 public:
  discovery_matrix(std::size_t size, merge_kind kind)
      : size_(size), kind_(kind), cells_(size * (size + 1) / 2, 0.0) {
    if (size == 0)
      throw std::invalid_argument("discovery matrix needs at least one row");
  }

  std::size_t size() const noexcept { return size_; }
  merge_kind merge() const noexcept { return kind_; }

  double at(std::size_t row, std::size_t column) const {
    check(row, column);
    return cells_[offset(row) + column - 1];
  }

  double& at(std::size_t row, std::size_t column) {
    check(row, column);
    return cells_[offset(row) + column - 1];
  }

  std::span<const double> row(std::size_t r) const {
    check(r, 1);
    return {cells_.data() + offset(r), r};
  }

  std::span<double> mutable_row(std::size_t r) {
    check(r, 1);
    return {cells_.data() + offset(r), r};
  }

  bool operator==(const discovery_matrix&) const = default;

 private:
  static constexpr std::size_t offset(std::size_t row) noexcept {
    return row * (row - 1) / 2;
  }

  void check(std::size_t row, std::size_t column) const {
    if (row < 1 || row > size_ || column < 1 || column > row)
      throw std::out_of_range("matrix index out of range (want 1 <= column <= row <= " +
                              std::to_string(size_) + ")");
  }

  std::size_t size_;
  merge_kind kind_;
  std::vector<double> cells_;
};

namespace detail {

// Upper envelope of lines under two monotonicity promises: lines arrive with
// nondecreasing slopes and queries arrive with nondecreasing x. Amortized
// O(1) per operation.
class rising_max_envelope {
 public:
  void add(double slope, double offset) {
    while (!lines_.empty() && lines_.back().slope == slope) {
      if (lines_.back().offset >= offset) return;
      lines_.pop_back();
    }
    while (lines_.size() >= 2) {
      const line& prev = lines_[lines_.size() - 2];
      const line& last = lines_.back();
      // last can be dropped once the new line overtakes prev no later than
      // last does
      const double new_from = (prev.offset - offset) / (slope - prev.slope);
      const double last_from =
          (prev.offset - last.offset) / (last.slope - prev.slope);
      if (new_from <= last_from)
        lines_.pop_back();
      else
        break;
    }
    lines_.push_back({slope, offset});
    if (head_ >= lines_.size()) head_ = lines_.size() - 1;
  }

  double query(double x) {
    while (head_ + 1 < lines_.size() && at(head_ + 1, x) >= at(head_, x))
      ++head_;
    return at(head_, x);
  }

 private:
  struct line {
    double slope, offset;
  };

  double at(std::size_t idx, double x) const {
    return lines_[idx].slope * x + lines_[idx].offset;
  }

  std::vector<line> lines_;
  std::size_t head_ = 0;
};

// The candidate family for one discovery bound: I_i = kept U {1..i} for
// i = 0..K, where `kept` holds the rejected positions that must be honored
// (ascending, nonempty). Sweeping the whole range matters: for the Bonferroni
// merge the minimizer can use a prefix longer than K - |kept|.

inline double am_min_over_family(const std::vector<double>& e,
                                 std::span<const std::size_t> kept) {
  const std::size_t K = e.size();
  double sum = 0.0;
  for (std::size_t pos : kept) sum += e[pos - 1];
  double count = static_cast<double>(kept.size());
  double best = sum / count;
  std::size_t passed = 0;
  for (std::size_t i = 1; i <= K; ++i) {
    if (passed < kept.size() && kept[passed] == i) {
      ++passed;  // already a member; same set as the previous step
      continue;
    }
    sum += e[i - 1];
    count += 1.0;
    best = std::min(best, sum / count);
  }
  return best;
}

inline double bonferroni_min_over_family(const std::vector<double>& e,
                                         std::span<const std::size_t> kept) {
  const std::size_t K = e.size();
  double top = e[kept.back() - 1];  // largest kept position carries the max
  double count = static_cast<double>(kept.size());
  double best = top / count;
  std::size_t passed = 0;
  for (std::size_t i = 1; i <= K; ++i) {
    if (passed < kept.size() && kept[passed] == i) {
      ++passed;
      continue;
    }
    top = std::max(top, e[i - 1]);
    count += 1.0;
    best = std::min(best, top / count);
  }
  return best;
}

// In the descending rearrangement of I_i, the kept positions > i rank first;
// their contribution is a prefix maximum. Position u <= i ranks b + i + 1 - u
// (b = block size), so the prefix contribution is an upper envelope of lines
// u -> e_u * x - u * e_u queried at x = b + i + 1, which is nondecreasing
// in i. Amortized O(1) per step.
inline double simes_min_over_family(const std::vector<double>& e,
                                    std::span<const std::size_t> kept) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t K = e.size();
  const std::size_t m = kept.size();
  std::vector<double> block_max(m + 1, 0.0);  // over the t largest kept values
  for (std::size_t t = 1; t <= m; ++t) {
    const double w = e[kept[m - t] - 1];
    block_max[t] = std::max(block_max[t - 1], static_cast<double>(t) * w);
  }
  rising_max_envelope prefix;
  std::size_t passed = 0;
  double best = block_max[m] / static_cast<double>(m);  // i = 0
  for (std::size_t i = 1; i <= K; ++i) {
    const double v = e[i - 1];
    if (v == inf) break;  // every remaining candidate set merges to +infinity
    prefix.add(v, -static_cast<double>(i) * v);
    if (passed < m && kept[passed] == i) {
      ++passed;
      continue;
    }
    const std::size_t b = m - passed;
    const double numer = std::max(
        block_max[b], prefix.query(static_cast<double>(b + i + 1)));
    best = std::min(best, numer / static_cast<double>(b + i));
  }
  return best;
}

inline double min_over_family(merge_kind kind, const std::vector<double>& e,
                              std::span<const std::size_t> kept) {
  switch (kind) {
    case merge_kind::arithmetic_mean: return am_min_over_family(e, kept);
    case merge_kind::bonferroni: return bonferroni_min_over_family(e, kept);
    case merge_kind::simes: return simes_min_over_family(e, kept);
  }
  throw std::domain_error("unknown merge kind");
}

}  // namespace detail

// Entry j bounds the true discoveries among the rejected positions when up to
// j - 1 rejections may be disavowed; entries are non-increasing in j.
inline std::vector<evalue> discovery_vector(merge_kind kind,
                                            const sorted_evalues& evalues,
                                            const rejection_set& rejected) {
  if (rejected.universe() != evalues.size())
    throw std::invalid_argument("rejection set universe does not match the e-values");
  const auto& positions = rejected.positions();
  std::vector<evalue> out(positions.size());
  for (std::size_t j = 1; j <= positions.size(); ++j) {
    // dropping the j - 1 largest rejected positions keeps this prefix
    const std::span<const std::size_t> kept(positions.data(),
                                            positions.size() - (j - 1));
    out[j - 1] = detail::min_over_family(kind, evalues.values(), kept);
  }
  return out;
}

// Full matrix through the candidate-family sweep; row r is the discovery
// vector of the top-r rejection set. O(K^3) for every merge. Reference
// implementation for the specialized algorithms below.
inline discovery_matrix discovery_matrix_generic(merge_kind kind,
                                                 const sorted_evalues& evalues,
                                                 std::size_t threads = 0) {
  const std::size_t K = evalues.size();
  discovery_matrix out(K, kind);
  std::vector<std::size_t> all(K);
  std::iota(all.begin(), all.end(), std::size_t{1});
  parallel_for(K, worker_count(threads), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t ri = lo; ri < hi; ++ri) {
      const std::size_t r = ri + 1;
      auto row = out.mutable_row(r);
      for (std::size_t j = 1; j <= r; ++j) {
        // top-r set minus its j - 1 largest positions
        const std::span<const std::size_t> kept(all.data() + (K - r),
                                                r - (j - 1));
        row[j - 1] = detail::min_over_family(kind, evalues.values(), kept);
      }
    }
  });
  return out;
}

// Arithmetic-mean matrix from prefix sums: entry (r, j) is the minimum of
// (sigma_rj + s_i) / (r - j + 1 + i) over i = 0..K-r, with sigma_rj the sum
// of positions K-r+1..K-j+1 and s_i the sum of the i smallest values. O(K^3)
// with a small constant; rows are independent and run in parallel.
inline discovery_matrix am_discovery_matrix(const sorted_evalues& evalues,
                                            std::size_t threads = 0) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t K = evalues.size();
  const auto& e = evalues.values();
  std::vector<double> s(K + 1, 0.0);
  for (std::size_t i = 0; i < K; ++i) s[i + 1] = s[i] + e[i];
  discovery_matrix out(K, merge_kind::arithmetic_mean);
  parallel_for(K, worker_count(threads), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t ri = lo; ri < hi; ++ri) {
      const std::size_t r = ri + 1;
      auto row = out.mutable_row(r);
      const double base = s[K - r];
      if (base == inf) {  // an infinite value below the block floods the row
        std::fill(row.begin(), row.end(), inf);
        continue;
      }
      for (std::size_t j = 1; j <= r; ++j) {
        const double sigma = s[K - j + 1] - base;
        const double c = static_cast<double>(r - j + 1);
        double best = sigma / c;
        for (std::size_t i = 1; i <= K - r; ++i)
          best = std::min(best, (sigma + s[i]) / (c + static_cast<double>(i)));
        row[j - 1] = best;
      }
    }
  });
  return out;
}

// One arithmetic-mean row in O(K): entry (r, j) is the least slope from
// Q_j = (-(r-j+1), -sigma_rj) to the convex chain P_i = (i, s_i), and the
// minimizing i only moves left as j grows, so a single pointer sweep covers
// the whole row.
inline std::vector<evalue> am_discovery_row(const sorted_evalues& evalues,
                                            std::size_t r) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t K = evalues.size();
  if (r < 1 || r > K) throw std::out_of_range("row index out of range");
  const auto& e = evalues.values();
  std::vector<double> s(K + 1, 0.0);
  for (std::size_t i = 0; i < K; ++i) s[i + 1] = s[i] + e[i];
  std::vector<evalue> row(r);
  const double base = s[K - r];
  if (base == inf) {
    std::fill(row.begin(), row.end(), inf);
    return row;
  }
  std::size_t k = K - r;
  for (std::size_t j = 1; j <= r; ++j) {
    const double sigma = s[K - j + 1] - base;
    if (sigma == inf) {  // block still contains an infinite value
      row[j - 1] = inf;
      continue;
    }
    const double c = static_cast<double>(r - j + 1);
    while (k > 0 && (sigma + s[k - 1]) / (c + static_cast<double>(k - 1)) <=
                        (sigma + s[k]) / (c + static_cast<double>(k)))
      --k;
    row[j - 1] = (sigma + s[k]) / (c + static_cast<double>(k));
  }
  return row;
}

// Bonferroni matrix: column j is constant in r and equals the running
// minimum of e_{K-j'+1} / (K-j'+1) over j' <= j. O(K^2).
inline discovery_matrix bonferroni_discovery_matrix(const sorted_evalues& evalues) {
  const std::size_t K = evalues.size();
  const auto& e = evalues.values();
  discovery_matrix out(K, merge_kind::bonferroni);
  double running = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j <= K; ++j) {
    running = std::min(running, e[K - j] / static_cast<double>(K - j + 1));
    for (std::size_t r = j; r <= K; ++r) out.at(r, j) = running;
  }
  return out;
}

// Oracle: exhaustive minimum over every index set I with |rejected \ I| < j.
// Exponential; inputs are capped at 20 e-values. Positions refer to the
// order of `evalues` as given (no sorting is assumed or performed).
inline std::vector<evalue> brute_force_discovery_vector(
    merge_kind kind, std::span<const evalue> evalues,
    const rejection_set& rejected) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t K = evalues.size();
  if (K > 20)
    throw size_error("brute-force enumeration is limited to 20 e-values");
  if (rejected.universe() != K)
    throw std::invalid_argument("rejection set universe does not match the e-values");
  for (double v : evalues) require_evalue(v);
  std::uint32_t rejected_mask = 0;
  for (std::size_t pos : rejected.positions())
    rejected_mask |= std::uint32_t{1} << (pos - 1);
  const std::size_t n = rejected.size();
  // tightest merge among sets missing exactly d rejected positions
  std::vector<double> best(n + 1, inf);
  std::vector<double> members;
  members.reserve(K);
  for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << K); ++mask) {
    members.clear();
    for (std::size_t b = 0; b < K; ++b)
      if (mask >> b & 1u) members.push_back(evalues[b]);
    const std::size_t missing =
        static_cast<std::size_t>(std::popcount(rejected_mask & ~mask));
    best[missing] = std::min(best[missing], detail::merge_unchecked(kind, members));
  }
  std::vector<evalue> out(n);
  double acc = inf;
  for (std::size_t j = 1; j <= n; ++j) {
    acc = std::min(acc, best[j - 1]);
    out[j - 1] = acc;
  }
  return out;
}

// Merging functions on the p-value side, for the closed-testing view.
enum class p_merge_kind { bonferroni, simes };

inline const char* to_string(p_merge_kind k) noexcept {
  switch (k) {
    case p_merge_kind::bonferroni: return "bonferroni";
    case p_merge_kind::simes: return "simes";
  }
  return "?";
}

// Bonferroni: min(1, n * min p). Simes: min over i of (n / i) * p_(i) with
// p_(1) <= ... <= p_(n). Empty merge is 1.
inline pvalue merge_pvalues(p_merge_kind kind, std::span<const pvalue> pvalues) {
  if (pvalues.empty()) return 1.0;
  const double n = static_cast<double>(pvalues.size());
  if (kind == p_merge_kind::bonferroni) {
    double low = pvalues[0];
    for (double p : pvalues.subspan(1)) low = std::min(low, p);
    return std::min(1.0, n * low);
  }
  std::vector<double> ascending(pvalues.begin(), pvalues.end());
  std::sort(ascending.begin(), ascending.end());
  double best = 1.0;
  for (std::size_t i = 0; i < ascending.size(); ++i)
    best = std::min(best, n / static_cast<double>(i + 1) * ascending[i]);
  return best;
}

// Oracle for the p-value analogue: entry j is the exhaustive MAXIMUM of the
// p-merge over index sets I with |rejected \ I| < j. Capped at 20 p-values.
inline std::vector<pvalue> p_discovery_vector_brute(
    p_merge_kind kind, std::span<const pvalue> pvalues,
    const rejection_set& rejected) {
  const std::size_t K = pvalues.size();
  if (K > 20)
    throw size_error("brute-force enumeration is limited to 20 p-values");
  if (rejected.universe() != K)
    throw std::invalid_argument("rejection set universe does not match the p-values");
  for (double v : pvalues) require_pvalue(v);
  std::uint32_t rejected_mask = 0;
  for (std::size_t pos : rejected.positions())
    rejected_mask |= std::uint32_t{1} << (pos - 1);
  const std::size_t n = rejected.size();
  std::vector<double> worst(n + 1, 0.0);
  std::vector<double> members;
  members.reserve(K);
  for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << K); ++mask) {
    members.clear();
    for (std::size_t b = 0; b < K; ++b)
      if (mask >> b & 1u) members.push_back(pvalues[b]);
    const std::size_t missing =
        static_cast<std::size_t>(std::popcount(rejected_mask & ~mask));
    worst[missing] = std::max(worst[missing], merge_pvalues(kind, members));
  }
  std::vector<pvalue> out(n);
  double acc = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    acc = std::max(acc, worst[j - 1]);
    out[j - 1] = acc;
  }
  return out;
}

// Closed testing at level alpha with the given p-merge as the local test:
// returns |rejected| minus the size of the largest subset of `rejected` that
// the closed procedure fails to certify, a lower confidence bound on the true
// discoveries among the rejections. Exponential; capped at 12 p-values.
inline std::size_t closed_testing_true_discoveries(p_merge_kind kind,
                                                   std::span<const pvalue> pvalues,
                                                   const rejection_set& rejected,
                                                   double alpha) {
  const std::size_t K = pvalues.size();
  if (K > 12)
    throw size_error("closed testing enumeration is limited to 12 p-values");
  if (rejected.universe() != K)
    throw std::invalid_argument("rejection set universe does not match the p-values");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("alpha must lie in (0, 1)");
  for (double v : pvalues) require_pvalue(v);
  const std::uint32_t full = (std::uint32_t{1} << K) - 1;
  // raw level-alpha rejections of every intersection hypothesis
  std::vector<char> certified(static_cast<std::size_t>(full) + 1);
  std::vector<double> members;
  members.reserve(K);
  for (std::uint32_t mask = 0; mask <= full; ++mask) {
    members.clear();
    for (std::size_t b = 0; b < K; ++b)
      if (mask >> b & 1u) members.push_back(pvalues[b]);
    certified[mask] = merge_pvalues(kind, members) <= alpha;
  }
  // closure: certified iff the set and all its supersets are raw-rejected
  for (std::uint32_t mask = full;; --mask) {
    if (certified[mask])
      for (std::size_t b = 0; b < K; ++b)
        if (!(mask >> b & 1u))
          certified[mask] =
              certified[mask] && certified[mask | (std::uint32_t{1} << b)];
    if (mask == 0) break;
  }
  std::uint32_t rejected_mask = 0;
  for (std::size_t pos : rejected.positions())
    rejected_mask |= std::uint32_t{1} << (pos - 1);
  std::size_t undetermined = 0;  // largest subset of `rejected` not certified
  for (std::uint32_t sub = rejected_mask;; sub = (sub - 1) & rejected_mask) {
    if (!certified[sub])
      undetermined = std::max(undetermined,
                              static_cast<std::size_t>(std::popcount(sub)));
    if (sub == 0) break;
  }
  return rejected.size() - undetermined;
}

}  // namespace edisco
