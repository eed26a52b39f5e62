#include "subshap/synthetic.hpp"

#include "subshap/rng.hpp"

namespace subshap {

ConstantModel::ConstantModel(Label label, int label_count)
    : label_(label), label_count_(label_count) {
  if (label_count_ < 2) throw ConfigError("models need at least two labels");
  if (label_ < 1 || label_ > label_count_) throw ConfigError("constant label out of range");
}

KeywordVoteModel::KeywordVoteModel(std::map<std::string, std::vector<double>> weights,
                                   int label_count)
    : weights_(std::move(weights)), label_count_(label_count) {
  if (label_count_ < 2) throw ConfigError("models need at least two labels");
  for (const auto& [token, row] : weights_) {
    if (row.size() != static_cast<size_t>(label_count_)) {
      throw ConfigError("weight row for \"" + token + "\" must have one entry per label");
    }
  }
}

Label KeywordVoteModel::classify(const TokenSequence& masked) const {
  std::vector<double> score(static_cast<size_t>(label_count_), 0.0);
  for (const auto& token : masked.tokens()) {
    auto it = weights_.find(token);
    if (it == weights_.end()) continue;
    for (int c = 0; c < label_count_; ++c) score[static_cast<size_t>(c)] += it->second[static_cast<size_t>(c)];
  }
  size_t best = 0;
  for (size_t c = 1; c < score.size(); ++c) {
    if (score[c] > score[best]) best = c;
  }
  return static_cast<Label>(best + 1);
}

RandomHashModel::RandomHashModel(uint64_t seed, int label_count)
    : seed_(seed), label_count_(label_count) {
  if (label_count_ < 2) throw ConfigError("models need at least two labels");
}

Label RandomHashModel::classify(const TokenSequence& masked) const {
  uint64_t h = splitmix64(seed_);
  for (const auto& token : masked.tokens()) {
    // length-prefixed feed so token boundaries matter
    const uint32_t len = static_cast<uint32_t>(token.size());
    h = fnv1a64(&len, sizeof(len), h);
    h = fnv1a64(token, h);
  }
  h = splitmix64(h);
  return static_cast<Label>(1 + h % static_cast<uint64_t>(label_count_));
}

TriggerBackdoorModel::TriggerBackdoorModel(std::set<std::string> triggers, Label target,
                                           std::shared_ptr<const BaseModel> fallback)
    : triggers_(std::move(triggers)), target_(target), fallback_(std::move(fallback)) {
  if (triggers_.empty()) throw ConfigError("trigger set must be non-empty");
  if (!fallback_) throw ConfigError("trigger-backdoor model needs a fallback");
  if (target_ < 1 || target_ > fallback_->label_count()) {
    throw ConfigError("backdoor target label out of range");
  }
}

Label TriggerBackdoorModel::classify(const TokenSequence& masked) const {
  for (const auto& token : masked.tokens()) {
    if (triggers_.count(token)) return target_;
  }
  return fallback_->classify(masked);
}

std::shared_ptr<BaseModel> make_model(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("kind")) {
    throw ConfigError("model spec must be an object with a \"kind\"");
  }
  const std::string kind = spec["kind"].get<std::string>();
  if (kind == "constant") {
    return std::make_shared<ConstantModel>(spec.value("label", 1), spec.value("labels", 2));
  }
  if (kind == "keyword-vote") {
    if (!spec.contains("weights") || !spec["weights"].is_object()) {
      throw ConfigError("keyword-vote model needs a \"weights\" object");
    }
    std::map<std::string, std::vector<double>> weights;
    for (const auto& [token, row] : spec["weights"].items()) {
      weights[token] = row.get<std::vector<double>>();
    }
    return std::make_shared<KeywordVoteModel>(std::move(weights), spec.value("labels", 2));
  }
  if (kind == "random-hash") {
    return std::make_shared<RandomHashModel>(spec.value("seed", uint64_t{0}),
                                             spec.value("labels", 2));
  }
  if (kind == "trigger-backdoor") {
    if (!spec.contains("triggers") || !spec["triggers"].is_array() || spec["triggers"].empty()) {
      throw ConfigError("trigger-backdoor model needs a non-empty \"triggers\" array");
    }
    std::set<std::string> triggers;
    for (const auto& t : spec["triggers"]) triggers.insert(t.get<std::string>());
    std::shared_ptr<BaseModel> fallback;
    if (spec.contains("fallback")) {
      fallback = make_model(spec["fallback"]);
    } else {
      fallback = std::make_shared<ConstantModel>(1, 2);
    }
    return std::make_shared<TriggerBackdoorModel>(std::move(triggers), spec.value("target", 2),
                                                  std::move(fallback));
  }
  throw ConfigError("unknown model kind \"" + kind + "\"");
}

}  // namespace subshap
