#pragma once
// Conformal e-values for two-group expression data: Welch t nonconformity
// scores under random label permutations, per-gene and pooled e-value
// transforms, the matching conformal p-values, and the dataset loader.
//
// The conformal e-value needs no independence across genes. The simplified
// e-value and the count/(G*B) p-value are computed for comparison only; they
// are not guaranteed valid. The pooled e-value additionally assumes gene
// exchangeability.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "csvio.hpp"
#include "evalues.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace edisco {

// G x N matrix of log2-transformed positive expression values with a group
// tag (1 or 2) per sample column. Both groups need >= 2 samples so variances
// exist.
class expression_dataset {
 public:
  static expression_dataset create(std::vector<std::string> gene_ids,
                                   std::vector<double> values,
                                   std::vector<int> groups,
                                   std::size_t dropped_rows = 0) {
    expression_dataset data;
    data.gene_ids_ = std::move(gene_ids);
    data.values_ = std::move(values);
    data.groups_ = std::move(groups);
    data.dropped_rows_ = dropped_rows;
    if (data.gene_ids_.empty())
      throw std::invalid_argument("dataset needs at least one gene");
    std::size_t n1 = 0, n2 = 0;
    for (int g : data.groups_) {
      if (g == 1)
        ++n1;
      else if (g == 2)
        ++n2;
      else
        throw std::invalid_argument("group tags must be 1 or 2");
    }
    if (n1 < 2 || n2 < 2)
      throw std::domain_error("each group needs at least two samples");
    if (data.values_.size() != data.gene_ids_.size() * data.groups_.size())
      throw std::invalid_argument("value matrix shape does not match ids and groups");
    for (double v : data.values_)
      if (!std::isfinite(v))
        throw std::invalid_argument("expression values must be finite");
    return data;
  }

  std::size_t genes() const noexcept { return gene_ids_.size(); }
  std::size_t samples() const noexcept { return groups_.size(); }

  std::size_t group_size(int tag) const {
    std::size_t n = 0;
    for (int g : groups_) n += (g == tag);
    return n;
  }

  std::span<const double> gene_row(std::size_t gene) const {
    if (gene >= genes()) throw std::domain_error("gene index out of range");
    return {values_.data() + gene * samples(), samples()};
  }

  const std::vector<std::string>& gene_ids() const noexcept { return gene_ids_; }
  std::span<const int> groups() const noexcept { return groups_; }

  // raw input rows removed by the value > 20 filter
  std::size_t dropped_rows() const noexcept { return dropped_rows_; }

 private:
  std::vector<std::string> gene_ids_;
  std::vector<double> values_;  // genes x samples, row-major
  std::vector<int> groups_;
  std::size_t dropped_rows_ = 0;
};

struct permutation_config {
  std::size_t permutations = 10000;  // B
  std::uint64_t seed = 1;
  double score_exponent = 10.0;      // d in |t|^d

  void validate() const {
    if (permutations < 1)
      throw std::domain_error("need at least one permutation");
    if (!(score_exponent > 0.0) || !std::isfinite(score_exponent))
      throw std::domain_error("score exponent must be positive and finite");
  }
};

// Welch two-sample t statistic: (mean2 - mean1) / sqrt(s1^2/n1 + s2^2/n2)
// with unbiased variances, not pooled.
inline double welch_t(std::span<const double> group1,
                      std::span<const double> group2) {
  if (group1.size() < 2 || group2.size() < 2)
    throw std::domain_error("welch_t needs at least two samples per group");
  const double n1 = static_cast<double>(group1.size());
  const double n2 = static_cast<double>(group2.size());
  double m1 = 0.0, m2 = 0.0;
  for (double v : group1) m1 += v;
  for (double v : group2) m2 += v;
  m1 /= n1;
  m2 /= n2;
  double ssd1 = 0.0, ssd2 = 0.0;
  for (double v : group1) ssd1 += (v - m1) * (v - m1);
  for (double v : group2) ssd2 += (v - m2) * (v - m2);
  const double spread = ssd1 / (n1 - 1.0) / n1 + ssd2 / (n2 - 1.0) / n2;
  if (spread == 0.0)
    throw score_error("both sample variances are zero: t is undefined");
  return (m2 - m1) / std::sqrt(spread);
}

// |t|^d; larger means less conforming under the null of equal groups.
inline double nonconformity_score(double t, double d) {
  if (!(d > 0.0)) throw std::domain_error("score exponent must be positive");
  return std::pow(std::fabs(t), d);
}

// Observed score and B permutation-null scores per gene. All stored scores
// are finite and nonnegative: the zero-variance fallback caps at the largest
// double (see compute_score_panel).
struct score_panel {
  std::size_t genes = 0;
  std::size_t permutations = 0;
  std::vector<double> t_observed;     // Welch t under the true labels
  std::vector<double> observed;       // T_k = |t|^d, capped to finite range
  std::vector<double> nulls;          // genes x permutations, row-major
  std::size_t degenerate_scores = 0;  // zero-variance, unequal-means events

  std::span<const double> null_row(std::size_t gene) const {
    if (gene >= genes) throw std::domain_error("gene index out of range");
    return {nulls.data() + gene * permutations, permutations};
  }
};

namespace detail {

// Welch score for one labeling. Zero spread resolves to score 0 when the
// means agree and to the maximal representable score (counted as degenerate)
// when they do not; t is reported as +/-infinity in that case.
inline double guarded_score(std::span<const double> row,
                            std::span<const int> labels, double exponent,
                            double& t_out, std::size_t& degenerate) {
  double sum1 = 0.0, sum2 = 0.0;
  std::size_t c1 = 0, c2 = 0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (labels[i] == 1) {
      sum1 += row[i];
      ++c1;
    } else {
      sum2 += row[i];
      ++c2;
    }
  }
  const double n1 = static_cast<double>(c1);
  const double n2 = static_cast<double>(c2);
  const double m1 = sum1 / n1;
  const double m2 = sum2 / n2;
  double ssd1 = 0.0, ssd2 = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    const double dev = row[i] - (labels[i] == 1 ? m1 : m2);
    if (labels[i] == 1)
      ssd1 += dev * dev;
    else
      ssd2 += dev * dev;
  }
  const double spread = ssd1 / (n1 - 1.0) / n1 + ssd2 / (n2 - 1.0) / n2;
  if (spread == 0.0) {
    if (m1 == m2) {
      t_out = 0.0;
      return 0.0;
    }
    ++degenerate;
    t_out = m2 > m1 ? std::numeric_limits<double>::infinity()
                    : -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::max();
  }
  t_out = (m2 - m1) / std::sqrt(spread);
  return std::min(std::pow(std::fabs(t_out), exponent),
                  std::numeric_limits<double>::max());
}

}  // namespace detail

// Scores for the observed labeling and for B uniformly random relabelings
// per gene. Each gene draws from its own seed substream, so output is
// bit-identical for every worker count.
inline score_panel compute_score_panel(const expression_dataset& data,
                                       const permutation_config& cfg,
                                       std::size_t threads = 0) {
  cfg.validate();
  const std::size_t G = data.genes();
  const std::size_t B = cfg.permutations;
  score_panel panel;
  panel.genes = G;
  panel.permutations = B;
  panel.t_observed.resize(G);
  panel.observed.resize(G);
  panel.nulls.resize(G * B);
  std::atomic<std::size_t> degenerate{0};
  const auto groups = data.groups();
  parallel_for(G, worker_count(threads), [&](std::size_t lo, std::size_t hi) {
    std::vector<int> labels(groups.size());
    std::size_t local = 0;
    for (std::size_t g = lo; g < hi; ++g) {
      const auto row = data.gene_row(g);
      panel.observed[g] = detail::guarded_score(
          row, groups, cfg.score_exponent, panel.t_observed[g], local);
      splitmix64 gen(substream_seed(cfg.seed, g));
      double* out = panel.nulls.data() + g * B;
      for (std::size_t b = 0; b < B; ++b) {
        std::copy(groups.begin(), groups.end(), labels.begin());
        shuffle(labels, gen);
        double t_null;
        out[b] = detail::guarded_score(row, labels, cfg.score_exponent, t_null,
                                       local);
      }
    }
    degenerate += local;
  });
  panel.degenerate_scores = degenerate.load();
  return panel;
}

// T / ((sum of null scores + T) / (B + 1)) with 0/0 := 1; always in
// [0, B+1]. Infinite scores are handled as limits (ties at +infinity split
// the bound); an overflowing sum of finite scores is rescaled exactly.
inline evalue conformal_e_from_scores(double observed,
                                      std::span<const double> nulls) {
  if (nulls.empty())
    throw std::invalid_argument("need at least one null score");
  require_evalue(observed, "score");
  for (double v : nulls) require_evalue(v, "score");
  const double terms = static_cast<double>(nulls.size()) + 1.0;
  double sum = observed;
  for (double v : nulls) sum += v;
  if (sum == 0.0) return 1.0;
  if (std::isfinite(sum)) return observed / (sum / terms);
  std::size_t infinite = std::isinf(observed) ? 1 : 0;
  for (double v : nulls) infinite += std::isinf(v) ? 1 : 0;
  if (infinite > 0)
    return std::isinf(observed) ? terms / static_cast<double>(infinite) : 0.0;
  constexpr double down = 0x1p-512;  // power-of-two rescale, no rounding
  double scaled = observed * down;
  for (double v : nulls) scaled += v * down;
  return (observed * down) / (scaled / terms);
}

// T / (mean of null scores); denominator 0 with T > 0 gives +infinity,
// 0/0 gives 1. Only approximately an e-value for large B.
inline double simplified_e_from_scores(double observed,
                                       std::span<const double> nulls) {
  if (nulls.empty())
    throw std::invalid_argument("need at least one null score");
  require_evalue(observed, "score");
  for (double v : nulls) require_evalue(v, "score");
  const double B = static_cast<double>(nulls.size());
  double sum = 0.0;
  for (double v : nulls) sum += v;
  if (sum == 0.0) return observed == 0.0 ? 1.0 : infinite_evalue;
  if (std::isfinite(sum)) return observed / (sum / B);
  std::size_t infinite = 0;
  for (double v : nulls) infinite += std::isinf(v) ? 1 : 0;
  if (infinite > 0)
    return std::isinf(observed) ? B / static_cast<double>(infinite) : 0.0;
  constexpr double down = 0x1p-512;
  double scaled = 0.0;
  for (double v : nulls) scaled += v * down;
  return (observed * down) / (scaled / B);
}

inline std::vector<evalue> conformal_e_values(const score_panel& panel) {
  std::vector<evalue> out(panel.genes);
  for (std::size_t g = 0; g < panel.genes; ++g)
    out[g] = conformal_e_from_scores(panel.observed[g], panel.null_row(g));
  return out;
}

inline std::vector<double> simplified_e_values(const score_panel& panel) {
  std::vector<double> out(panel.genes);
  for (std::size_t g = 0; g < panel.genes; ++g)
    out[g] = simplified_e_from_scores(panel.observed[g], panel.null_row(g));
  return out;
}

// Pools the null scores of ALL genes into one denominator of G*B + 1 terms.
// Valid only under gene exchangeability.
inline std::vector<evalue> pooled_conformal_e_values(const score_panel& panel) {
  const double terms = static_cast<double>(panel.genes) *
                           static_cast<double>(panel.permutations) +
                       1.0;
  double total = 0.0;
  for (double v : panel.nulls) total += v;
  std::vector<evalue> out(panel.genes);
  for (std::size_t g = 0; g < panel.genes; ++g) {
    const double observed = panel.observed[g];
    const double sum = total + observed;
    if (sum == 0.0) {
      out[g] = 1.0;
    } else if (std::isfinite(sum)) {
      out[g] = observed / (sum / terms);
    } else {
      std::size_t infinite = std::isinf(observed) ? 1 : 0;
      for (double v : panel.nulls) infinite += std::isinf(v) ? 1 : 0;
      if (infinite > 0) {
        out[g] = std::isinf(observed) ? terms / static_cast<double>(infinite)
                                      : 0.0;
      } else {
        constexpr double down = 0x1p-512;
        double scaled = observed * down;
        for (double v : panel.nulls) scaled += v * down;
        out[g] = (observed * down) / (scaled / terms);
      }
    }
  }
  return out;
}

// (count + 1) / (pool + 1) where `count` of the pooled null scores are at
// least as large as the observed one; never 0.
inline pvalue conformal_p_from_count(std::size_t at_least_as_large,
                                     std::size_t pool_size) {
  if (at_least_as_large > pool_size)
    throw std::domain_error("count exceeds the pool size");
  return (static_cast<double>(at_least_as_large) + 1.0) /
         (static_cast<double>(pool_size) + 1.0);
}

// count / pool; can be exactly 0, hence not a valid p-value.
inline double st_p_from_count(std::size_t at_least_as_large,
                              std::size_t pool_size) {
  if (pool_size == 0 || at_least_as_large > pool_size)
    throw std::domain_error("count exceeds the pool size");
  return static_cast<double>(at_least_as_large) /
         static_cast<double>(pool_size);
}

namespace detail {

// Per gene: how many of the pooled G*B null scores are >= its observed score.
inline std::vector<std::size_t> pooled_at_least_counts(const score_panel& panel) {
  std::vector<double> pool(panel.nulls.begin(), panel.nulls.end());
  std::sort(pool.begin(), pool.end());
  std::vector<std::size_t> counts(panel.genes);
  for (std::size_t g = 0; g < panel.genes; ++g) {
    const auto it =
        std::lower_bound(pool.begin(), pool.end(), panel.observed[g]);
    counts[g] = static_cast<std::size_t>(pool.end() - it);
  }
  return counts;
}

}  // namespace detail

inline std::vector<pvalue> conformal_p_values(const score_panel& panel) {
  const auto counts = detail::pooled_at_least_counts(panel);
  const std::size_t pool = panel.genes * panel.permutations;
  std::vector<pvalue> out(panel.genes);
  for (std::size_t g = 0; g < panel.genes; ++g)
    out[g] = conformal_p_from_count(counts[g], pool);
  return out;
}

inline std::vector<double> st_p_values(const score_panel& panel) {
  const auto counts = detail::pooled_at_least_counts(panel);
  const std::size_t pool = panel.genes * panel.permutations;
  std::vector<double> out(panel.genes);
  for (std::size_t g = 0; g < panel.genes; ++g)
    out[g] = st_p_from_count(counts[g], pool);
  return out;
}

// Dataset-level entry points; each builds its own score panel.
inline std::vector<evalue> conformal_e_values(const expression_dataset& data,
                                              const permutation_config& cfg,
                                              std::size_t threads = 0) {
  return conformal_e_values(compute_score_panel(data, cfg, threads));
}

inline std::vector<double> simplified_e_values(const expression_dataset& data,
                                               const permutation_config& cfg,
                                               std::size_t threads = 0) {
  return simplified_e_values(compute_score_panel(data, cfg, threads));
}

inline std::vector<evalue> pooled_conformal_e_values(
    const expression_dataset& data, const permutation_config& cfg,
    std::size_t threads = 0) {
  return pooled_conformal_e_values(compute_score_panel(data, cfg, threads));
}

inline std::vector<pvalue> conformal_p_values(const expression_dataset& data,
                                              const permutation_config& cfg,
                                              std::size_t threads = 0) {
  return conformal_p_values(compute_score_panel(data, cfg, threads));
}

inline std::vector<double> st_p_values(const expression_dataset& data,
                                       const permutation_config& cfg,
                                       std::size_t threads = 0) {
  return st_p_values(compute_score_panel(data, cfg, threads));
}

// Everything the per-gene result table needs, sharing one score panel and one
// pooled sort.
struct conformal_table {
  std::vector<std::string> gene_ids;
  std::vector<double> t;            // observed Welch t
  std::vector<double> score;        // T = |t|^d
  std::vector<evalue> e_conformal;
  std::vector<double> e_simplified;
  std::vector<pvalue> p_conformal;
  std::vector<double> p_st;
  std::size_t degenerate_scores = 0;
};

inline conformal_table compute_conformal_table(const expression_dataset& data,
                                               const permutation_config& cfg,
                                               std::size_t threads = 0) {
  const score_panel panel = compute_score_panel(data, cfg, threads);
  conformal_table table;
  table.gene_ids = data.gene_ids();
  table.t = panel.t_observed;
  table.score = panel.observed;
  table.e_conformal = conformal_e_values(panel);
  table.e_simplified = simplified_e_values(panel);
  table.p_conformal = conformal_p_values(panel);
  table.p_st = st_p_values(panel);
  table.degenerate_scores = panel.degenerate_scores;
  return table;
}

// "1,1,2,2" or whitespace separated; every entry must be 1 or 2.
inline std::vector<int> parse_group_labels(std::string_view text) {
  std::vector<int> labels;
  std::string token;
  // Whitespace only pads tokens, but every comma must close a non-empty
  // field, so "1,,2" and trailing commas are malformed.
  bool field_has_token = false;
  bool saw_comma = false;
  auto flush = [&] {
    if (token.empty()) return;
    if (token == "1")
      labels.push_back(1);
    else if (token == "2")
      labels.push_back(2);
    else
      throw parse_error("group label must be 1 or 2, got '" + token + "'");
    token.clear();
    field_has_token = true;
  };
  for (char c : text) {
    if (c == ',') {
      flush();
      if (!field_has_token) throw parse_error("empty field in group label list");
      field_has_token = false;
      saw_comma = true;
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      flush();
    } else {
      token.push_back(c);
    }
  }
  flush();
  if (saw_comma && !field_has_token)
    throw parse_error("empty field in group label list");
  if (labels.empty()) throw parse_error("no group labels given");
  return labels;
}

// Delimited text (comma or tab, auto-detected), optional header row, first
// column gene id, remaining columns raw positive expression values. Rows
// with any value > 20 are dropped (and counted); retained values are stored
// as log2.
inline expression_dataset load_expression_dataset(std::istream& in,
                                                  std::span<const int> group_labels) {
  const std::size_t N = group_labels.size();
  if (N == 0) throw std::domain_error("need one group label per sample column");
  std::vector<std::string> gene_ids;
  std::vector<double> values;
  std::size_t dropped = 0;
  std::string line;
  std::size_t line_number = 0;
  char delimiter = ',';
  bool first_content_line = true;
  std::vector<double> row(N);
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first_content_line)
      delimiter = line.find('\t') != std::string::npos ? '\t' : ',';
    const auto fields = detail::split_fields(line, delimiter);
    if (first_content_line) {
      first_content_line = false;
      // header row: right shape but non-numeric sample columns
      bool numeric = fields.size() == N + 1;
      for (std::size_t i = 1; numeric && i < fields.size(); ++i) {
        double ignored;
        numeric = detail::parse_double(fields[i], ignored);
      }
      if (!numeric) {
        if (fields.size() != N + 1)
          throw parse_error("expected " + std::to_string(N + 1) +
                                " columns, got " + std::to_string(fields.size()),
                            line_number, 1);
        continue;
      }
    }
    if (fields.size() != N + 1)
      throw parse_error("expected " + std::to_string(N + 1) + " columns, got " +
                            std::to_string(fields.size()),
                        line_number, 1);
    bool keep = true;
    for (std::size_t i = 0; i < N; ++i) {
      double raw;
      if (!detail::parse_double(fields[i + 1], raw))
        throw parse_error("not a number: '" + fields[i + 1] + "'", line_number,
                          i + 2);
      if (!(raw > 0.0) || !std::isfinite(raw))
        throw parse_error("expression values must be positive", line_number,
                          i + 2);
      if (raw > 20.0) keep = false;
      row[i] = std::log2(raw);
    }
    if (!keep) {
      ++dropped;
      continue;
    }
    gene_ids.push_back(fields[0]);
    values.insert(values.end(), row.begin(), row.end());
  }
  if (gene_ids.empty())
    throw parse_error("no usable data rows (after the value > 20 filter)");
  return expression_dataset::create(
      std::move(gene_ids), std::move(values),
      std::vector<int>(group_labels.begin(), group_labels.end()), dropped);
}

inline expression_dataset load_expression_dataset(const std::string& path,
                                                  std::span<const int> group_labels) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw parse_error("cannot open file: " + path);
  return load_expression_dataset(file, group_labels);
}

}  // namespace edisco
