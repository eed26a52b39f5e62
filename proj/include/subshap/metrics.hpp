#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "subshap/attacks.hpp"
#include "subshap/attribution.hpp"
#include "subshap/cache.hpp"
#include "subshap/certify.hpp"
#include "subshap/core.hpp"
#include "subshap/dataset.hpp"
#include "subshap/ensemble.hpp"

namespace subshap {

struct FaithfulnessOutcome {
  bool flipped = false;
  // Deleting all d tokens leaves nothing to classify; counted as a flip (the
  // original label is unobtainable) and flagged so aggregates can report it.
  bool empty_after_deletion = false;
  Label original_label = 0;
  Label ablated_label = 0;  // 0 when empty_after_deletion
};

// Re-classifies x with the `removed` positions deleted (the sequence shortens
// and k is recomputed from rho on the new length) or masked in place when
// mask_instead_of_delete is set. Groups for the shortened input are freshly
// sampled from a seed derived from cfg.seed, never reused from the original
// run.
FaithfulnessOutcome deletion_flip(const TokenSequence& x, Label original_label,
                                  const std::vector<int>& removed, const BaseModel& h,
                                  const EnsembleConfig& cfg, const AblationRule& rule = {},
                                  PredictionCache* cache = nullptr,
                                  bool mask_instead_of_delete = false);

// Full pipeline: predict, attribute, take the top-e features of the predicted
// label, and test whether removing them changes the prediction.
FaithfulnessOutcome faithfulness(const TokenSequence& x, const BaseModel& h,
                                 const EnsembleConfig& cfg, int e, const AblationRule& rule = {},
                                 PredictionCache* cache = nullptr,
                                 bool mask_instead_of_delete = false);

struct PrfOutcome {
  double precision = 0.0;
  double recall = 0.0;
  bool recall_defined = false;  // false iff the ground-truth set is empty
};

// precision = |E cap L| / |E|, recall = |E cap L| / |L|. Duplicate positions
// in either list are collapsed.
PrfOutcome keyword_prf(const std::vector<int>& reported, const std::vector<int>& ground_truth);

enum class AttackFilter {
  kBackdoor,     // keep samples the attack drove to its target label
  kAdversarial,  // keep samples misclassified away from their true label
};

// Indices (ascending) of the dataset samples that were significantly impacted
// by their attack, per the filter mode. Samples without a transcript or whose
// attack failed are dropped.
std::vector<size_t> filter_dstar(const std::vector<DatasetRecord>& dataset,
                                 const std::vector<AttackTranscript>& transcripts,
                                 AttackFilter mode);

// One row per (sample, e, T).
struct SampleEvaluation {
  std::string id;
  int d = 0;
  Label predicted = 0;
  int e = 0;
  int T = 0;
  bool flipped = false;
  bool empty_after_deletion = false;
  double precision = 0.0;
  double recall = 0.0;
  bool recall_defined = false;
  bool has_ground_truth = false;
  int detection_size = 0;
  double rate = 0.0;
  std::string binding_branch = "none";
};

struct EvaluationCell {
  int e = 0;
  int T = 0;
  long sample_count = 0;
  double faithfulness_rate = 0.0;
  double mean_precision = 0.0;  // over samples with ground truth
  double mean_recall = 0.0;     // over samples with non-empty ground truth
  long ground_truth_count = 0;
  long recall_count = 0;
  double mean_detection_rate = 0.0;
};

struct EvaluationOptions {
  EnsembleConfig ensemble;
  double beta = 0.01;
  std::vector<int> e_grid{5};
  std::vector<int> T_grid{1};
  // The detection certificate is stated for the majority rule; leave false to
  // evaluate thresholded ensembles (detection columns then stay zero).
  bool certify = true;
  bool mask_instead_of_delete = false;
  int jobs = 1;
};

struct EvaluationReport {
  EnsembleConfig ensemble;
  double beta = 0.01;
  std::vector<int> e_grid;
  std::vector<int> T_grid;
  bool certified = false;
  bool mask_instead_of_delete = false;
  std::vector<SampleEvaluation> samples;  // dataset order, (e, T) grid order within a sample
  std::vector<EvaluationCell> cells;

  nlohmann::ordered_json to_json() const;
  std::string to_csv() const;  // header + one line per samples[] row
};

// Evaluates every sample at every grid point. Per-sample randomness is keyed
// by the sample id, so dataset order never changes any number; aggregates are
// plain means over the rows of each (e, T) cell. Grid values above a sample's
// d are clamped to d. Pass the attack transcripts to score precision/recall
// against the recorded edit positions.
EvaluationReport evaluate_dataset(const std::vector<DatasetRecord>& dataset, const BaseModel& h,
                                  const EvaluationOptions& options,
                                  const std::vector<AttackTranscript>* transcripts = nullptr,
                                  const AblationRule& rule = {}, PredictionCache* cache = nullptr);

}  // namespace subshap
