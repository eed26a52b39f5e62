#pragma once

#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "subshap/core.hpp"
#include "subshap/ensemble.hpp"

namespace subshap {

// A cooperative game over the d features: value(mask) of the coalition whose
// members are the set bits. Implementations memoize and report how many
// distinct base-model queries they have issued (the budget currency for
// estimator comparisons).
class SubsetValue {
 public:
  virtual ~SubsetValue() = default;
  virtual double value(uint64_t mask) = 0;
  virtual int dimension() const = 0;
  virtual long long queries_used() const = 0;
};

uint64_t mask_from(const std::vector<int>& indices, int d);

inline double value_on_subset(SubsetValue& vf, const std::vector<int>& subset) {
  return vf.value(mask_from(subset, vf.dimension()));
}

// Restricted game: v(S) = mean of 1[h(z) = target] over all C(|S|, k) size-k
// groups z inside S, and v(S) = 1/C when |S| < k (a group cannot be formed,
// the model is treated as guessing uniformly; this covers v(empty) too).
// All C(d,k) group labels are queried once at construction; value() then runs
// purely on that table. Safe for concurrent value() calls.
class SubsetValueFunction final : public SubsetValue {
 public:
  SubsetValueFunction(const TokenSequence& x, const BaseModel& h, int k, Label target,
                      const AblationRule& rule = {}, PredictionCache* cache = nullptr,
                      unsigned long long cap = kDefaultEnumerationCap);

  double value(uint64_t mask) override;
  int dimension() const override { return d_; }
  long long queries_used() const override { return queries_; }
  int group_size() const { return k_; }
  int label_count() const { return label_count_; }
  Label target() const { return target_; }

 private:
  int d_;
  int k_;
  int label_count_;
  Label target_;
  long long queries_ = 0;
  std::vector<uint64_t> hit_group_masks_;           // groups the model labels `target`
  std::unordered_map<uint64_t, uint8_t> group_hit_;  // group mask -> 1[h(z) = target]
  std::unordered_map<uint64_t, double> memo_;
  std::shared_mutex memo_mutex_;
};

// Baseline game for the comparison estimator: v(S) = 1[f(x masked outside S)
// = target]. One model query per distinct coalition, memoized, including the
// empty coalition (fully masked input).
class BaselineValueFunction final : public SubsetValue {
 public:
  BaselineValueFunction(const TokenSequence& x, const BaseModel& h, Label target,
                        const AblationRule& rule = {});

  double value(uint64_t mask) override;
  int dimension() const override { return d_; }
  long long queries_used() const override { return queries_; }

 private:
  const TokenSequence& x_;
  const BaseModel& h_;
  Label target_;
  AblationRule rule_;
  int d_;
  long long queries_ = 0;
  std::unordered_map<uint64_t, double> memo_;
  std::shared_mutex memo_mutex_;
};

struct ShapleyResult {
  std::vector<double> values;  // phi_i
  bool exact = false;
  long permutations = 0;
  long long query_budget = 0;  // model queries consumed by the value function
};

// phi_i = sum over S not containing i of |S|!(d-|S|-1)!/d! * (v(S+i) - v(S)),
// by dense enumeration of all 2^d coalitions. Requires d <= exact_cap.
ShapleyResult shapley_exact(SubsetValue& vf, int exact_cap = 14);

// Permutation-sampling estimate: for each sampled feature order, each feature
// is credited with its marginal value when appended to the preceding prefix.
// Unbiased for phi; deterministic given the seed.
ShapleyResult shapley_permutation_estimate(SubsetValue& vf, long permutations, uint64_t seed);

// Largest permutation count whose worst-case query usage (1 shared empty
// coalition + d prefixes per permutation) stays within the budget; at least 1.
long permutations_for_budget(long long query_budget, int d);

}  // namespace subshap
