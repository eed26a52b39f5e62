#pragma once

#include <vector>

#include "subshap/attribution.hpp"
#include "subshap/core.hpp"
#include "subshap/ensemble.hpp"

namespace subshap {

// ln B(a,b) for positive shapes.
double log_beta(double a, double b);

// Regularized incomplete beta I_x(a, b), the Beta(a,b) CDF at x. Continued
// fraction evaluated with the modified Lentz algorithm.
double incomplete_beta(double x, double a, double b);

// Inverse of I_x(a,b) in x for fixed shapes, by bisection on the monotone CDF
// (200 iterations, residual <= 1e-10). q in {0,1} returns 0/1 by convention.
double beta_quantile(double q, double a, double b);

struct BoundPair {
  double lower = 0.0;
  double upper = 1.0;
  bool degenerate = false;  // no trials observed; bounds carry no information
};

// Two-sided Clopper-Pearson interval for a Bernoulli parameter with tail mass
// `tail` on each side:
//   lower = BetaQuantile(tail; s, n-s+1)       (0 when s = 0)
//   upper = BetaQuantile(1 - tail; s+1, n-s)   (1 when s = n)
// n = 0 yields the degenerate [0,1].
BoundPair clopper_pearson_interval(long successes, long trials, double tail);

// Per-feature bounds on Pr(h(z) = c | i in z) from (N_i, nhat_i) counts, with
// the confidence budget beta split across the d features (tail mass beta/d on
// each side per feature). Returned bounds are the raw conditional
// probabilities, not yet scaled by 1/d.
std::vector<BoundPair> feature_bounds(const std::vector<long>& trials,
                                      const std::vector<long>& successes, double beta, int d);

// Per-label bounds on p_c from ensemble counts, budget split across C labels.
std::vector<BoundPair> label_bounds(const LabelCounts& counts, double beta);

// Simultaneous bounds consumed by certification: importance bounds per
// (label, feature) scaled into [0, 1/d], plus label-probability bounds.
struct BoundSet {
  int feature_count = 0;
  int label_count = 0;
  double confidence = 0.0;                    // 1 - beta (0 means exact)
  std::vector<std::vector<BoundPair>> alpha;  // [C][d]
  std::vector<BoundPair> label_probability;   // [C]
};

BoundSet compute_bound_set(const AttributionResult& attribution, const LabelCounts& counts,
                           double beta);

// Exact mode: enumeration probabilities are plugged in as both endpoints, so
// certification runs on the true quantities (used by soundness checks).
BoundSet exact_bound_set(const AttributionResult& exact_attribution,
                         const std::vector<double>& label_probabilities);

}  // namespace subshap
