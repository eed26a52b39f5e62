#include "subshap/core.hpp"

#include <algorithm>
#include <charconv>

#include "subshap/cache.hpp"

namespace subshap {

TokenSequence::TokenSequence(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.empty()) throw ConfigError("TokenSequence requires at least one token");
}

FeatureGroup::FeatureGroup(std::vector<int> indices) : indices_(std::move(indices)) {
  if (indices_.empty()) throw InvalidGroupError("feature group must be non-empty");
  std::sort(indices_.begin(), indices_.end());
  if (indices_.front() < 0) throw InvalidGroupError("negative feature index");
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
    throw InvalidGroupError("duplicate feature index in group");
  }
}

bool FeatureGroup::contains(int i) const {
  return std::binary_search(indices_.begin(), indices_.end(), i);
}

TokenSequence ablate(const TokenSequence& x, const FeatureGroup& z, const AblationRule& rule) {
  const int d = x.size();
  if (z.indices().back() >= d) {
    throw InvalidGroupError("group index " + std::to_string(z.indices().back()) +
                            " out of range for input of length " + std::to_string(d));
  }
  std::vector<std::string> out;
  out.reserve(static_cast<size_t>(d));
  auto it = z.indices().begin();
  for (int i = 0; i < d; ++i) {
    if (it != z.indices().end() && *it == i) {
      out.push_back(x.token(i));
      ++it;
    } else {
      out.push_back(rule.special_value);
    }
  }
  return TokenSequence(std::move(out));
}

Label simplified_model(const BaseModel& model, const TokenSequence& x, const AblationRule& rule,
                       const FeatureGroup& z, PredictionCache* cache) {
  std::string key;
  if (cache != nullptr) {
    key = PredictionCache::key_for(x, z, rule);
    if (auto hit = cache->lookup(key)) return *hit;
  }
  const Label y = model.classify(ablate(x, z, rule));
  if (y < 1 || y > model.label_count()) {
    throw ClassificationError("model returned label " + std::to_string(y) +
                              " outside 1.." + std::to_string(model.label_count()));
  }
  if (cache != nullptr) cache->insert(key, y);
  return y;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace subshap
