#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "subshap/core.hpp"
#include "subshap/ensemble.hpp"

namespace subshap {

enum class AttributionMode { kExact, kMonteCarlo };

// Importance of feature i for label c:
//   score[c][i] = (1/d) * (#groups containing i labeled c) / (#groups containing i)
// Scores are tabulated for every label at once; certification consumes the
// runner-up labels, explanations consume the predicted one. In exact mode the
// denominator is C(d-1, k-1) and sum_i score[yhat][i] equals p_yhat exactly.
struct AttributionResult {
  AttributionMode mode = AttributionMode::kExact;
  Label target = 1;
  int feature_count = 0;
  int label_count = 0;
  std::vector<long> appearances;              // N_i per feature
  std::vector<std::vector<long>> successes;   // [C][d]
  std::vector<std::vector<double>> scores;    // [C][d], each in [0, 1/d]
  std::vector<uint8_t> zero_appearance;       // N_i == 0 markers (score forced to 0)

  const std::vector<double>& scores_for(Label c) const {
    return scores.at(static_cast<size_t>(c - 1));
  }
  const std::vector<double>& target_scores() const { return scores_for(target); }
};

// Exact scores by full enumeration of the C(d,k) groups.
AttributionResult attribute_exact(const TokenSequence& x, const BaseModel& h, int k, Label target,
                                  const AblationRule& rule = {}, PredictionCache* cache = nullptr,
                                  unsigned long long cap = kDefaultEnumerationCap, int jobs = 1);

// Monte-Carlo scores from an existing sample set and its per-group label
// table; costs no model queries. Features that never appeared score 0 and are
// flagged rather than resampled.
AttributionResult attribute_mc(const GroupSampleSet& G, const std::vector<Label>& group_labels,
                               int label_count, Label target);

// Ablation variant without the appearance-frequency correction: divides by
// k*N instead of N_i. Same expectation, strictly more variance; kept for the
// estimator comparison only.
AttributionResult attribute_mc_unnormalized(const GroupSampleSet& G,
                                            const std::vector<Label>& group_labels,
                                            int label_count, Label target);

// Indices of the e highest scores, descending, ties broken toward the smaller
// index. The ordering is total, so output is identical across runs.
std::vector<int> top_e(const std::vector<double>& scores, int e);
std::vector<int> top_e(const AttributionResult& result, int e);

nlohmann::ordered_json to_json(const AttributionResult& result);
AttributionResult attribution_from_json(const nlohmann::json& j);

}  // namespace subshap
