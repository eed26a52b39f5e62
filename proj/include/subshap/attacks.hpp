#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "subshap/combinatorics.hpp"
#include "subshap/core.hpp"
#include "subshap/ensemble.hpp"

namespace subshap {

// Replayable record of one attack attempt. `positions` is the ground-truth
// edit set L(x): indices into the attacked sequence.
struct AttackTranscript {
  std::string id;
  std::string type;
  bool success = false;
  bool vacuous = false;  // goal already satisfied before any edit
  Label true_label = 0;
  Label original_label = 0;  // ensemble label before the attack
  Label final_label = 0;     // ensemble label after the attack
  std::optional<Label> target_label;
  std::vector<int> positions;
  std::vector<std::string> attacked_tokens;
};

nlohmann::ordered_json to_json(const AttackTranscript& t);
AttackTranscript transcript_from_json(const nlohmann::json& j);

struct TriggerInsertion {
  TokenSequence attacked;
  std::vector<int> positions;  // where the triggers ended up, ascending
};

// Inserts `count` tokens drawn from `triggers` at seeded-random positions;
// the output length is d + count. count = 0 returns x unchanged.
TriggerInsertion insert_triggers(const TokenSequence& x, const std::vector<std::string>& triggers,
                                 int count, uint64_t seed);

struct SubstitutionResult {
  bool success = false;
  bool vacuous = false;
  TokenSequence attacked;
  std::vector<int> positions;  // substituted positions, in substitution order
  Label original_label = 0;
  Label final_label = 0;
};

// Word-substitution attack: repeatedly replaces the currently most important
// substitutable word until the ensemble label flips (or reaches `target` if
// given) or max_edits is exhausted. Importance is leave-one-out on the base
// model: does masking the word change the base prediction; ties scan left to
// right. Each word is replaced by the first synonym listed for it. The
// ensemble is re-evaluated after every edit with a derived seed per step.
SubstitutionResult greedy_substitute(const TokenSequence& x, const BaseModel& h,
                                     const EnsembleConfig& cfg,
                                     const std::map<std::string, std::vector<std::string>>& synonyms,
                                     int max_edits, const AblationRule& rule = {},
                                     PredictionCache* cache = nullptr,
                                     std::optional<Label> target = std::nullopt);

// Number of (modified-feature set M, relabeling) pairs the worst-case group
// adversary enumerates: sum over |M| <= T of C^{#groups intersecting M}.
// Groups avoiding an m-element M number C(d-m, k), so the count is
// sum_m C(d,m) * C_labels^(C(d,k) - C(d-m,k)).
BigInt adversary_enumeration_count(int d, int k, int label_count, int T);

// Visits every attack the threat model allows: every feature set M with
// |M| <= T (including the empty set) and every assignment of labels to the
// groups that intersect M (groups disjoint from M keep their base labels).
// The label buffer passed to the visitor is reused between calls. Throws
// EnumerationCapError when the total visit count would exceed `cap`.
void for_each_group_attack(
    int d, int k, int label_count, int T, const std::vector<Label>& base_labels,
    unsigned long long cap,
    const std::function<void(const std::vector<int>& modified, const std::vector<Label>& labels)>&
        visit);

struct AdversaryCheck {
  unsigned long long attacks_checked = 0;
  unsigned long long flips = 0;       // assignments that changed the majority label
  unsigned long long violations = 0;  // flips with |M intersect top-e| < D
  std::string first_violation;        // human-readable witness, empty when sound
};

// Exhaustive soundness check of a claimed detection size D at (e, T): for
// every label-flipping attack, at least D of the modified features must rank
// in the attacked input's top-e importance order for the new label. Runs on
// exact enumeration counts (base_labels must cover all C(d,k) groups in
// lexicographic order) and recomputes rankings from integer tallies,
// independent of the attribution and certification code paths.
AdversaryCheck check_certified_detection(const std::vector<Label>& base_labels, int d, int k,
                                         int label_count, Label predicted, int e, int T, int D,
                                         unsigned long long cap, int jobs = 1);

std::map<std::string, std::vector<std::string>> load_synonym_map(const std::string& path);

}  // namespace subshap
