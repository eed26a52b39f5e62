#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "subshap/confidence.hpp"
#include "subshap/core.hpp"
#include "subshap/dataset.hpp"
#include "subshap/ensemble.hpp"

namespace subshap {

// Everything the detection certificate needs about one runner-up label:
// the margin delta = plow(predicted) - pup(alternative), plus the importance
// bounds for the alternative label sorted descending by value (ties by
// ascending feature index, making the order total). The certificate consumes
// the uppers; lowers ride along for reports.
struct AlternativeBounds {
  Label label = 0;
  double delta = 0.0;
  // Lower bound on k * sum of post-attack importance over the modified
  // features, valid for every attack that flips the label: each group the
  // flip hands to this label contains a modified feature, and the winner must
  // hold at least 1/C of the vote, so max(0, 1/C - pup(alternative)) is safe
  // for C labels. Negative means "use delta / 2", the two-label value.
  double flip_mass = -1.0;
  std::vector<double> upper_sorted;
  std::vector<double> lower_sorted;
};

struct CertificationInput {
  int d = 0;
  int k = 0;
  int e = 0;
  int T = 0;
  Label predicted = 1;
  std::vector<AlternativeBounds> alternatives;

  void validate() const;
};

struct ConditionAudit {
  int r = 0;
  Label alternative = 0;
  bool individual = false;
  bool joint = false;
};

struct CertificationResult {
  int detection_size = 0;  // D(x, T)
  double rate = 0.0;       // D / T
  // one entry per (r, alternative) evaluated, in descending-r scan order
  std::vector<ConditionAudit> audit;
  // branch summary at r = D: "individual" | "joint" | "both" | "mixed" | "none"
  std::string binding_branch = "none";
};

// First certificate branch. If fewer than r modified features made the
// reported top-e, some modified feature scores no higher than a reported
// clean one; but a flip strands mean importance at least
// (flip_mass/k - (r-1)/d) / (T-r+1) on the unreported modified features,
// while a clean feature tops out at its upper bound plus the share of its
// groups an attack of size T can touch. Pre-attack lower bounds certify
// nothing here (every group containing a modified feature is attacker
// controlled), so they do not appear. Strict with a small margin: a score
// tie can be broken against the modified feature. False whenever delta <= 0.
bool condition_individual(const AlternativeBounds& alt, int r, int d, int k, int e, int T);

// Second certificate branch. Every group a flip converts to the alternative
// label carries at most k-1 clean features alongside at least one modified
// feature, so the total boost available to reported clean features is
// budgeted by the same mass the flip forces onto the modified set; the
// condition compares the two sides of that budget, worst case at the minimum
// flip mass. Short-circuits false when 1/(T-r+1) <= (k-1)/(e-r+1), where the
// budget favors the attacker, and whenever delta <= 0.
bool condition_joint(const AlternativeBounds& alt, int r, int d, int k, int e, int T);

// D = max r in [1, min(T,e)] such that every alternative label satisfies at
// least one branch; 0 when no r qualifies. Descending linear scan (the
// feasibility predicate is not provably monotone in r, so no binary search).
CertificationResult certified_detection_size(const CertificationInput& input);

// Bundles a BoundSet into the solver's input for a given prediction.
CertificationInput make_certification_input(const BoundSet& bounds, Label predicted, int k, int e,
                                            int T);

struct DetectionCurveRow {
  std::string sample_id;
  int e = 0;
  int T = 0;
  int detection_size = 0;
  double rate = 0.0;
  std::string binding_branch;
};

struct DetectionCurveCell {
  int e = 0;
  int T = 0;
  double mean_rate = 0.0;
};

struct DetectionCurve {
  std::vector<DetectionCurveRow> rows;    // one per (sample, e, T), dataset order
  std::vector<DetectionCurveCell> means;  // one per (e, T)
};

// Certifies every sample at every (e, T) grid point. Monte-Carlo path samples
// N groups per sample (stream derived from the sample id) and applies
// Clopper-Pearson bounds at confidence 1 - beta; exact_bounds enumerates all
// groups and certifies on the true probabilities. Grid values larger than a
// sample's d are clamped to d for that sample. The certificate is stated for
// the majority decision rule, so cfg.tau must be unset.
DetectionCurve detection_rate_curve(const std::vector<DatasetRecord>& samples, const BaseModel& h,
                                    const EnsembleConfig& cfg, double beta,
                                    const std::vector<int>& e_grid, const std::vector<int>& T_grid,
                                    const AblationRule& rule = {}, PredictionCache* cache = nullptr,
                                    int jobs = 1, bool exact_bounds = false);

// Synthetic binary-classification certification instance: per-feature
// appearance counts drawn Binomial(N, 1-rho), runner-up successes
// Binomial(N_i, (1-delta)/2), runner-up label count Binomial(N, (1-delta)/2).
// Mirrors the appearance model used for the certification sweeps.
struct SyntheticSweepPoint {
  int d = 30;
  double delta = 0.5;  // true probability gap between the two labels
  double rho = 0.8;
  long N = 10000;
  double beta = 0.01;
  int e = 3;
  int T = 1;
  int replicates = 10;
  uint64_t seed = 0;
};

// Mean certified detection rate D/T over the replicates.
double synthetic_certified_rate(const SyntheticSweepPoint& point);

}  // namespace subshap
