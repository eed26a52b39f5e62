#include "subshap/attribution.hpp"

#include <algorithm>
#include <numeric>

namespace subshap {

namespace {

// Shared tally: appearance and per-label success counts over the group table.
AttributionResult accumulate(const GroupSampleSet& G, const std::vector<Label>& group_labels,
                             int label_count, Label target, AttributionMode mode) {
  if (G.groups.size() != group_labels.size()) {
    throw ConfigError("group label table length does not match the sample set");
  }
  if (target < 1 || target > label_count) throw ConfigError("target label out of range");
  const int d = G.feature_count;
  AttributionResult r;
  r.mode = mode;
  r.target = target;
  r.feature_count = d;
  r.label_count = label_count;
  r.appearances = G.appearance_counts;
  r.successes.assign(static_cast<size_t>(label_count),
                     std::vector<long>(static_cast<size_t>(d), 0));
  for (size_t j = 0; j < G.groups.size(); ++j) {
    const Label y = group_labels[j];
    if (y < 1 || y > label_count) throw ConfigError("group label out of range");
    auto& row = r.successes[static_cast<size_t>(y - 1)];
    for (int i : G.groups[j].indices()) ++row[static_cast<size_t>(i)];
  }
  return r;
}

}  // namespace

AttributionResult attribute_mc(const GroupSampleSet& G, const std::vector<Label>& group_labels,
                               int label_count, Label target) {
  AttributionResult r = accumulate(G, group_labels, label_count, target,
                                   AttributionMode::kMonteCarlo);
  const int d = r.feature_count;
  r.zero_appearance.assign(static_cast<size_t>(d), 0);
  r.scores.assign(static_cast<size_t>(label_count),
                  std::vector<double>(static_cast<size_t>(d), 0.0));
  for (int i = 0; i < d; ++i) {
    const long n_i = r.appearances[static_cast<size_t>(i)];
    if (n_i == 0) {
      r.zero_appearance[static_cast<size_t>(i)] = 1;
      continue;
    }
    for (int c = 0; c < label_count; ++c) {
      r.scores[static_cast<size_t>(c)][static_cast<size_t>(i)] =
          static_cast<double>(r.successes[static_cast<size_t>(c)][static_cast<size_t>(i)]) /
          (static_cast<double>(d) * static_cast<double>(n_i));
    }
  }
  return r;
}

AttributionResult attribute_mc_unnormalized(const GroupSampleSet& G,
                                            const std::vector<Label>& group_labels,
                                            int label_count, Label target) {
  AttributionResult r = accumulate(G, group_labels, label_count, target,
                                   AttributionMode::kMonteCarlo);
  const int d = r.feature_count;
  const double denom = static_cast<double>(G.group_size) * static_cast<double>(G.groups.size());
  r.zero_appearance.assign(static_cast<size_t>(d), 0);
  r.scores.assign(static_cast<size_t>(label_count),
                  std::vector<double>(static_cast<size_t>(d), 0.0));
  for (int i = 0; i < d; ++i) {
    if (r.appearances[static_cast<size_t>(i)] == 0) r.zero_appearance[static_cast<size_t>(i)] = 1;
    for (int c = 0; c < label_count; ++c) {
      r.scores[static_cast<size_t>(c)][static_cast<size_t>(i)] =
          static_cast<double>(r.successes[static_cast<size_t>(c)][static_cast<size_t>(i)]) / denom;
    }
  }
  return r;
}

AttributionResult attribute_exact(const TokenSequence& x, const BaseModel& h, int k, Label target,
                                  const AblationRule& rule, PredictionCache* cache,
                                  unsigned long long cap, int jobs) {
  const GroupSampleSet all = enumerate_groups(x.size(), k, cap);
  const EnsembleRun run = ensemble_counts(x, h, all, rule, cache, jobs);
  AttributionResult r = attribute_mc(all, run.group_labels, h.label_count(), target);
  r.mode = AttributionMode::kExact;
  return r;
}

std::vector<int> top_e(const std::vector<double>& scores, int e) {
  const int d = static_cast<int>(scores.size());
  if (e < 1 || e > d) throw ConfigError("top_e requires 1 <= e <= d");
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[static_cast<size_t>(a)] != scores[static_cast<size_t>(b)]) {
      return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)];
    }
    return a < b;
  });
  order.resize(static_cast<size_t>(e));
  return order;
}

std::vector<int> top_e(const AttributionResult& result, int e) {
  return top_e(result.target_scores(), e);
}

nlohmann::ordered_json to_json(const AttributionResult& result) {
  nlohmann::ordered_json j;
  j["target"] = result.target;
  j["mode"] = result.mode == AttributionMode::kExact ? "exact" : "monte-carlo";
  j["scores"] = result.target_scores();
  j["appearances"] = result.appearances;
  j["feature_count"] = result.feature_count;
  j["label_count"] = result.label_count;
  j["scores_by_label"] = result.scores;
  j["successes_by_label"] = result.successes;
  j["zero_appearance"] = result.zero_appearance;
  return j;
}

AttributionResult attribution_from_json(const nlohmann::json& j) {
  AttributionResult r;
  r.target = j.at("target").get<Label>();
  r.mode = j.at("mode").get<std::string>() == "exact" ? AttributionMode::kExact
                                                      : AttributionMode::kMonteCarlo;
  r.feature_count = j.at("feature_count").get<int>();
  r.label_count = j.at("label_count").get<int>();
  r.appearances = j.at("appearances").get<std::vector<long>>();
  r.scores = j.at("scores_by_label").get<std::vector<std::vector<double>>>();
  r.successes = j.at("successes_by_label").get<std::vector<std::vector<long>>>();
  r.zero_appearance = j.at("zero_appearance").get<std::vector<uint8_t>>();
  return r;
}

}  // namespace subshap
