#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "subshap/core.hpp"

namespace subshap {

// Deterministic desk-scale classifiers standing in for fine-tuned text
// models. All of them are pure functions of the (masked) token sequence.

// Always the same label.
class ConstantModel final : public BaseModel {
 public:
  ConstantModel(Label label, int label_count);
  Label classify(const TokenSequence&) const override { return label_; }
  int label_count() const override { return label_count_; }

 private:
  Label label_;
  int label_count_;
};

// Sums per-label weights of every surviving token and returns the argmax,
// ties toward the smaller label. Tokens without an entry (including the mask
// token) contribute nothing, so the model is position-independent.
class KeywordVoteModel final : public BaseModel {
 public:
  KeywordVoteModel(std::map<std::string, std::vector<double>> weights, int label_count);
  Label classify(const TokenSequence& masked) const override;
  int label_count() const override { return label_count_; }

 private:
  std::map<std::string, std::vector<double>> weights_;  // token -> weight per label
  int label_count_;
};

// Pseudo-random but deterministic: label = 1 + hash(tokens, seed) mod C.
// Gives arbitrary-looking labelings for property tests.
class RandomHashModel final : public BaseModel {
 public:
  RandomHashModel(uint64_t seed, int label_count);
  Label classify(const TokenSequence& masked) const override;
  int label_count() const override { return label_count_; }

 private:
  uint64_t seed_;
  int label_count_;
};

// Predicts the target label whenever at least one trigger token survives
// masking; otherwise defers to the fallback model.
class TriggerBackdoorModel final : public BaseModel {
 public:
  TriggerBackdoorModel(std::set<std::string> triggers, Label target,
                       std::shared_ptr<const BaseModel> fallback);
  Label classify(const TokenSequence& masked) const override;
  int label_count() const override { return fallback_->label_count(); }

  const std::set<std::string>& triggers() const { return triggers_; }
  Label target() const { return target_; }

 private:
  std::set<std::string> triggers_;
  Label target_;
  std::shared_ptr<const BaseModel> fallback_;
};

// Builds a model from a JSON spec. Kinds:
//   {"kind":"constant","label":1,"labels":2}
//   {"kind":"keyword-vote","labels":2,"weights":{"good":[0,1],"bad":[1,0]}}
//   {"kind":"random-hash","labels":3,"seed":7}
//   {"kind":"trigger-backdoor","triggers":["cf"],"target":2,"fallback":{...}}
// trigger-backdoor's fallback defaults to constant label 1 over 2 labels.
std::shared_ptr<BaseModel> make_model(const nlohmann::json& spec);

}  // namespace subshap
