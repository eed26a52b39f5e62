#include "subshap/shapley.hpp"

#include <bit>
#include <mutex>

#include "subshap/combinatorics.hpp"
#include "subshap/rng.hpp"

namespace subshap {

uint64_t mask_from(const std::vector<int>& indices, int d) {
  uint64_t mask = 0;
  for (int i : indices) {
    if (i < 0 || i >= d) throw InvalidGroupError("subset index out of range");
    mask |= uint64_t{1} << i;
  }
  return mask;
}

SubsetValueFunction::SubsetValueFunction(const TokenSequence& x, const BaseModel& h, int k,
                                         Label target, const AblationRule& rule,
                                         PredictionCache* cache, unsigned long long cap)
    : d_(x.size()), k_(k), label_count_(h.label_count()), target_(target) {
  if (d_ > 63) throw EnumerationCapError("value function limited to 63 features");
  if (target_ < 1 || target_ > label_count_) throw ConfigError("target label out of range");
  const GroupSampleSet all = enumerate_groups(d_, k_, cap);
  group_hit_.reserve(all.groups.size() * 2);
  for (const auto& z : all.groups) {
    const Label y = simplified_model(h, x, rule, z, cache);
    const uint64_t m = mask_from(z.indices(), d_);
    group_hit_.emplace(m, static_cast<uint8_t>(y == target_));
    if (y == target_) hit_group_masks_.push_back(m);
  }
  queries_ = static_cast<long long>(all.groups.size());
}

double SubsetValueFunction::value(uint64_t mask) {
  const int m = std::popcount(mask);
  if (m < k_) return 1.0 / label_count_;
  {
    std::shared_lock lock(memo_mutex_);
    auto it = memo_.find(mask);
    if (it != memo_.end()) return it->second;
  }
  double v;
  const uint64_t total = binomial_capped(m, k_, ~0ULL - 1);
  if (hit_group_masks_.size() < total) {
    // fewer target-labeled groups than subsets of S: scan the hit list
    unsigned long long hits = 0;
    for (uint64_t g : hit_group_masks_) {
      if ((g & mask) == g) ++hits;
    }
    v = static_cast<double>(hits) / static_cast<double>(total);
  } else {
    std::vector<int> members;
    members.reserve(static_cast<size_t>(m));
    for (int i = 0; i < d_; ++i) {
      if (mask & (uint64_t{1} << i)) members.push_back(i);
    }
    unsigned long long hits = 0;
    for_each_combination(m, k_, [&](const std::vector<int>& picks) {
      uint64_t g = 0;
      for (int p : picks) g |= uint64_t{1} << members[static_cast<size_t>(p)];
      hits += group_hit_.at(g);
    });
    v = static_cast<double>(hits) / static_cast<double>(total);
  }
  std::unique_lock lock(memo_mutex_);
  memo_.emplace(mask, v);
  return v;
}

BaselineValueFunction::BaselineValueFunction(const TokenSequence& x, const BaseModel& h,
                                             Label target, const AblationRule& rule)
    : x_(x), h_(h), target_(target), rule_(rule), d_(x.size()) {
  if (d_ > 63) throw EnumerationCapError("value function limited to 63 features");
  if (target_ < 1 || target_ > h.label_count()) throw ConfigError("target label out of range");
}

double BaselineValueFunction::value(uint64_t mask) {
  {
    std::shared_lock lock(memo_mutex_);
    auto it = memo_.find(mask);
    if (it != memo_.end()) return it->second;
  }
  std::vector<std::string> tokens;
  tokens.reserve(static_cast<size_t>(d_));
  for (int i = 0; i < d_; ++i) {
    tokens.push_back(mask & (uint64_t{1} << i) ? x_.token(i) : rule_.special_value);
  }
  const Label y = h_.classify(TokenSequence(std::move(tokens)));
  const double v = y == target_ ? 1.0 : 0.0;
  std::unique_lock lock(memo_mutex_);
  if (memo_.emplace(mask, v).second) ++queries_;
  return v;
}

ShapleyResult shapley_exact(SubsetValue& vf, int exact_cap) {
  const int d = vf.dimension();
  if (d > exact_cap) {
    throw EnumerationCapError("exact Shapley limited to " + std::to_string(exact_cap) +
                              " features (got " + std::to_string(d) + ")");
  }
  const uint64_t full = (uint64_t{1} << d) - 1;
  std::vector<double> table(full + 1);
  for (uint64_t mask = 0; mask <= full; ++mask) table[mask] = vf.value(mask);

  // |S|!(d-|S|-1)!/d! = 1 / (d * C(d-1, |S|)); exact in double for d <= 14
  std::vector<double> weight(static_cast<size_t>(d));
  for (int m = 0; m < d; ++m) {
    weight[static_cast<size_t>(m)] = 1.0 / (d * binomial_double(d - 1, m));
  }

  ShapleyResult result;
  result.exact = true;
  result.query_budget = vf.queries_used();
  result.values.assign(static_cast<size_t>(d), 0.0);
  for (int i = 0; i < d; ++i) {
    const uint64_t bit = uint64_t{1} << i;
    double phi = 0.0;
    for (uint64_t mask = 0; mask <= full; ++mask) {
      if (mask & bit) continue;
      phi += weight[static_cast<size_t>(std::popcount(mask))] * (table[mask | bit] - table[mask]);
    }
    result.values[static_cast<size_t>(i)] = phi;
  }
  return result;
}

ShapleyResult shapley_permutation_estimate(SubsetValue& vf, long permutations, uint64_t seed) {
  if (permutations < 1) throw ConfigError("permutation count must be >= 1");
  const int d = vf.dimension();
  ShapleyResult result;
  result.permutations = permutations;
  result.values.assign(static_cast<size_t>(d), 0.0);
  std::vector<int> order(static_cast<size_t>(d));
  for (long p = 0; p < permutations; ++p) {
    auto rng = stream_rng(seed, static_cast<uint64_t>(p));
    for (int i = 0; i < d; ++i) order[static_cast<size_t>(i)] = i;
    for (int i = d - 1; i > 0; --i) {
      const int j = static_cast<int>(uniform_below(rng, static_cast<uint64_t>(i + 1)));
      std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }
    uint64_t prefix = 0;
    double prev = vf.value(0);
    for (int t = 0; t < d; ++t) {
      prefix |= uint64_t{1} << order[static_cast<size_t>(t)];
      const double cur = vf.value(prefix);
      result.values[static_cast<size_t>(order[static_cast<size_t>(t)])] += cur - prev;
      prev = cur;
    }
  }
  for (double& v : result.values) v /= static_cast<double>(permutations);
  result.query_budget = vf.queries_used();
  return result;
}

long permutations_for_budget(long long query_budget, int d) {
  if (d < 1) throw ConfigError("dimension must be >= 1");
  const long long per_permutation = d;
  const long p = static_cast<long>((query_budget - 1) / per_permutation);
  return p < 1 ? 1 : p;
}

}  // namespace subshap
