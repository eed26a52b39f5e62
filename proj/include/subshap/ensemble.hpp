#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "subshap/core.hpp"

namespace subshap {

class PredictionCache;

// Exact enumeration refuses instances with more than this many groups unless
// the caller raises the cap explicitly.
inline constexpr unsigned long long kDefaultEnumerationCap = 1'000'000ULL;

// Ensemble parameters. Exactly one of rho (dropping rate) and group_size may
// be set; the derived group size is k = max(1, round((1 - rho) * d)).
struct EnsembleConfig {
  std::optional<double> rho;
  std::optional<int> group_size;
  long sample_count = 1000;  // N
  int label_count = 2;       // C
  std::optional<double> tau;
  uint64_t seed = 0;

  void validate() const;
  int group_size_for(int d) const;
  EnsembleConfig with_seed(uint64_t s) const {
    EnsembleConfig c = *this;
    c.seed = s;
    return c;
  }
};

// N sampled groups plus per-feature appearance counts N_i = #{j : i in z_j}.
struct GroupSampleSet {
  std::vector<FeatureGroup> groups;
  std::vector<long> appearance_counts;
  int feature_count = 0;
  int group_size = 0;
  uint64_t seed = 0;
};

struct LabelCounts {
  std::vector<long> counts;  // counts[c-1] = n_c
  long total = 0;

  long of(Label c) const { return counts.at(static_cast<size_t>(c - 1)); }
};

// Counts plus the per-group label table ("computational byproducts") that
// attribution reuses without further model queries.
struct EnsembleRun {
  LabelCounts counts;
  std::vector<Label> group_labels;
};

// N i.i.d. uniform draws over all C(d,k) size-k subsets; group j comes from
// the derived stream (cfg.seed, j), so the result is independent of worker
// scheduling and identical across platforms.
GroupSampleSet sample_groups(int d, const EnsembleConfig& cfg);

// All C(d,k) groups in lexicographic order (the exact-enumeration analogue of
// sample_groups). Appearance counts are C(d-1,k-1) for every feature.
GroupSampleSet enumerate_groups(int d, int k, unsigned long long cap = kDefaultEnumerationCap);

// Classifies every group and tallies labels; n_c = #{j : h(z_j) = c}.
EnsembleRun ensemble_counts(const TokenSequence& x, const BaseModel& h, const GroupSampleSet& G,
                            const AblationRule& rule = {}, PredictionCache* cache = nullptr,
                            int jobs = 1);

// Majority vote with ties broken toward the smallest label. With tau set the
// counts must be binary and label 2 wins iff n_2 / N > tau.
Label ensemble_predict(const LabelCounts& counts, std::optional<double> tau = std::nullopt);

// p_c(x, h, k): fraction of all C(d,k) groups the model labels c. Integer
// counting followed by one exact division, so the error is well below 1e-12.
double exact_label_probability(const TokenSequence& x, const BaseModel& h, int k, Label c,
                               const AblationRule& rule = {}, PredictionCache* cache = nullptr,
                               unsigned long long cap = kDefaultEnumerationCap);

// All C label probabilities from a single enumeration pass.
std::vector<double> exact_label_distribution(const TokenSequence& x, const BaseModel& h, int k,
                                             const AblationRule& rule = {},
                                             PredictionCache* cache = nullptr,
                                             unsigned long long cap = kDefaultEnumerationCap);

}  // namespace subshap
