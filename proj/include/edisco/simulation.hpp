#pragma once
// Gaussian testbed: a mixture of N(delta, 1) alternatives and N(0, 1) nulls
// with deterministic seeded sampling, per-observation base e-values and
// p-values, and BH/BY step-up rejection counts for comparison.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "evalues.hpp"
#include "rng.hpp"

namespace edisco {

struct gaussian_scenario {
  std::size_t K = 200;          // hypothesis count
  double delta = -3.0;          // alternative mean
  double eta = 1.0;             // learning rate of the generalized Bayes bet
  std::uint64_t seed = 1;
  double fraction_false = 0.5;  // share of hypotheses drawn from the alternative

  void validate() const {
    if (K < 2) throw std::domain_error("scenario needs at least 2 hypotheses");
    if (!std::isfinite(delta)) throw std::domain_error("delta must be finite");
    if (!(eta > 0.0) || !std::isfinite(eta))
      throw std::domain_error("eta must be positive and finite");
    if (!(fraction_false > 0.0 && fraction_false <= 1.0))
      throw std::domain_error("fraction_false must lie in (0, 1]");
  }

  std::size_t alternative_count() const {
    return static_cast<std::size_t>(
        std::llround(static_cast<double>(K) * fraction_false));
  }
};

struct observations {
  std::vector<double> values;
  std::vector<bool> is_alternative;  // ground truth, aligned with values
};

// The first round(K * fraction_false) observations come from N(delta, 1), the
// rest from N(0, 1). Output k depends only on (seed, k).
inline observations generate_observations(const gaussian_scenario& scenario) {
  scenario.validate();
  const std::size_t alternatives = scenario.alternative_count();
  observations out;
  out.values.resize(scenario.K);
  out.is_alternative.resize(scenario.K);
  for (std::size_t k = 0; k < scenario.K; ++k) {
    const bool alt = k < alternatives;
    out.is_alternative[k] = alt;
    out.values[k] = (alt ? scenario.delta : 0.0) + normal_at(scenario.seed, k);
  }
  return out;
}

// Likelihood ratio of N(delta, 1) to N(0, 1) at x: exp(delta x - delta^2/2).
inline evalue likelihood_ratio_e(double x, double delta) {
  return std::exp(delta * x - delta * delta / 2.0);
}

// Likelihood ratio with the alternative replaced by N(eta delta, 1):
// exp(eta delta x - eta^2 delta^2 / 2). Reduces to likelihood_ratio_e at
// eta = 1.
inline evalue generalized_bayes_e(double x, double delta, double eta) {
  if (!(eta > 0.0)) throw std::domain_error("eta must be positive");
  return std::exp(eta * delta * x - eta * eta * delta * delta / 2.0);
}

// Left-tail standard normal CDF; the alternative mean is negative, so small
// observations give small p-values.
inline pvalue gaussian_p(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Benjamini-Hochberg step-up: the largest k with p_(k) <= k q / K (ascending
// order statistics), 0 if none.
inline std::size_t bh_rejections(std::span<const pvalue> pvalues, double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::domain_error("q must lie in (0, 1)");
  for (double p : pvalues) require_pvalue(p);
  std::vector<double> ascending(pvalues.begin(), pvalues.end());
  std::sort(ascending.begin(), ascending.end());
  const double K = static_cast<double>(ascending.size());
  std::size_t rejections = 0;
  for (std::size_t k = 1; k <= ascending.size(); ++k)
    if (ascending[k - 1] <= static_cast<double>(k) * q / K) rejections = k;
  return rejections;
}

// Benjamini-Yekutieli: BH at level q / H_K, valid under arbitrary dependence.
inline std::size_t by_rejections(std::span<const pvalue> pvalues, double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::domain_error("q must lie in (0, 1)");
  if (pvalues.empty()) return 0;
  double harmonic = 0.0;
  for (std::size_t k = 1; k <= pvalues.size(); ++k)
    harmonic += 1.0 / static_cast<double>(k);
  return bh_rejections(pvalues, q / harmonic);
}

}  // namespace edisco
