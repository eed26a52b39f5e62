#include "subshap/ensemble.hpp"

#include <cmath>
#include <string>

#include "subshap/cache.hpp"
#include "subshap/combinatorics.hpp"
#include "subshap/parallel.hpp"
#include "subshap/rng.hpp"

namespace subshap {

void EnsembleConfig::validate() const {
  if (rho.has_value() == group_size.has_value()) {
    throw ConfigError("exactly one of rho and group_size must be set");
  }
  if (rho && (*rho < 0.0 || *rho >= 1.0)) throw ConfigError("rho must lie in [0, 1)");
  if (group_size && *group_size < 1) throw ConfigError("group_size must be >= 1");
  if (sample_count < 1) throw ConfigError("sample_count must be >= 1");
  if (label_count < 2) throw ConfigError("label_count must be >= 2");
  if (tau && (*tau <= 0.0 || *tau >= 1.0)) throw ConfigError("tau must lie in (0, 1)");
}

int EnsembleConfig::group_size_for(int d) const {
  validate();
  if (d < 1) throw ConfigError("input has no features");
  int k;
  if (group_size) {
    k = *group_size;
  } else {
    k = std::max(1, static_cast<int>(std::llround((1.0 - *rho) * d)));
  }
  if (k > d) {
    throw ConfigError("group size " + std::to_string(k) + " exceeds feature count " +
                      std::to_string(d));
  }
  return k;
}

GroupSampleSet sample_groups(int d, const EnsembleConfig& cfg) {
  const int k = cfg.group_size_for(d);
  GroupSampleSet set;
  set.feature_count = d;
  set.group_size = k;
  set.seed = cfg.seed;
  set.groups.resize(static_cast<size_t>(cfg.sample_count));
  for (long j = 0; j < cfg.sample_count; ++j) {
    auto rng = stream_rng(cfg.seed, static_cast<uint64_t>(j));
    set.groups[static_cast<size_t>(j)] = FeatureGroup(sample_subset(rng, d, k));
  }
  set.appearance_counts.assign(static_cast<size_t>(d), 0);
  for (const auto& g : set.groups) {
    for (int i : g.indices()) ++set.appearance_counts[static_cast<size_t>(i)];
  }
  return set;
}

GroupSampleSet enumerate_groups(int d, int k, unsigned long long cap) {
  if (k < 1 || k > d) throw ConfigError("enumerate_groups requires 1 <= k <= d");
  const unsigned long long count = binomial_capped(d, k, cap);
  if (count > cap) {
    throw EnumerationCapError("C(" + std::to_string(d) + "," + std::to_string(k) +
                              ") exceeds the enumeration cap of " + std::to_string(cap) +
                              "; use Monte-Carlo sampling instead");
  }
  GroupSampleSet set;
  set.feature_count = d;
  set.group_size = k;
  set.groups.reserve(count);
  for_each_combination(d, k, [&](const std::vector<int>& combo) {
    set.groups.emplace_back(FeatureGroup(combo));
  });
  // every feature appears in exactly C(d-1, k-1) groups
  const long per_feature = static_cast<long>(binomial_capped(d - 1, k - 1, cap));
  set.appearance_counts.assign(static_cast<size_t>(d), per_feature);
  return set;
}

EnsembleRun ensemble_counts(const TokenSequence& x, const BaseModel& h, const GroupSampleSet& G,
                            const AblationRule& rule, PredictionCache* cache, int jobs) {
  const int C = h.label_count();
  EnsembleRun run;
  run.group_labels.assign(G.groups.size(), 0);
  parallel_for(static_cast<long>(G.groups.size()), jobs, [&](long j) {
    run.group_labels[static_cast<size_t>(j)] =
        simplified_model(h, x, rule, G.groups[static_cast<size_t>(j)], cache);
  });
  run.counts.counts.assign(static_cast<size_t>(C), 0);
  run.counts.total = static_cast<long>(G.groups.size());
  for (Label y : run.group_labels) ++run.counts.counts[static_cast<size_t>(y - 1)];
  return run;
}

Label ensemble_predict(const LabelCounts& counts, std::optional<double> tau) {
  if (counts.counts.empty()) throw ConfigError("empty label counts");
  if (tau) {
    if (counts.counts.size() != 2) {
      throw ConfigError("threshold decision rule requires exactly two labels");
    }
    const double fraction = static_cast<double>(counts.counts[1]) / counts.total;
    return fraction > *tau ? 2 : 1;
  }
  size_t best = 0;
  for (size_t c = 1; c < counts.counts.size(); ++c) {
    if (counts.counts[c] > counts.counts[best]) best = c;  // strict: ties keep smaller label
  }
  return static_cast<Label>(best + 1);
}

std::vector<double> exact_label_distribution(const TokenSequence& x, const BaseModel& h, int k,
                                             const AblationRule& rule, PredictionCache* cache,
                                             unsigned long long cap) {
  const GroupSampleSet all = enumerate_groups(x.size(), k, cap);
  const EnsembleRun run = ensemble_counts(x, h, all, rule, cache);
  std::vector<double> probs(run.counts.counts.size());
  for (size_t c = 0; c < probs.size(); ++c) {
    probs[c] = static_cast<double>(run.counts.counts[c]) / run.counts.total;
  }
  return probs;
}

double exact_label_probability(const TokenSequence& x, const BaseModel& h, int k, Label c,
                               const AblationRule& rule, PredictionCache* cache,
                               unsigned long long cap) {
  if (c < 1 || c > h.label_count()) throw ConfigError("label out of range");
  return exact_label_distribution(x, h, k, rule, cache, cap)[static_cast<size_t>(c - 1)];
}

}  // namespace subshap
