#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace subshap {

// Error taxonomy. The CLI maps these onto distinct exit codes, so throw the
// narrowest type that applies.
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
class InvalidGroupError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
class EnumerationCapError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
class ClassificationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
class NumericError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
class IoError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Labels are 1-based: valid values are 1..C with C >= 2. Internal feature
// indices are 0-based throughout.
using Label = int;

// Immutable ordered list of feature values (tokens). Positions 0..d-1 address
// features stably for the lifetime of the object.
class TokenSequence {
 public:
  TokenSequence() = default;
  explicit TokenSequence(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int i) const { return tokens_.at(static_cast<size_t>(i)); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const TokenSequence& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
};

// A set of surviving feature indices, stored strictly ascending with no
// duplicates. Validity against a particular sequence length is checked at the
// point of use (ablate), not at construction.
class FeatureGroup {
 public:
  FeatureGroup() = default;
  explicit FeatureGroup(std::vector<int> indices);

  int size() const { return static_cast<int>(indices_.size()); }
  bool contains(int i) const;
  const std::vector<int>& indices() const { return indices_; }

  bool operator==(const FeatureGroup& other) const { return indices_ == other.indices_; }

 private:
  std::vector<int> indices_;
};

// How absent features are represented: same-length sequence with removed
// positions replaced by special_value. The special value must not occur as a
// real vocabulary token, otherwise ablation stops being idempotent.
struct AblationRule {
  std::string special_value = "[MASK]";
};

// Classifier interface over (possibly masked) token sequences. Contract:
// deterministic, i.e. equal inputs yield equal labels, and every returned
// label lies in 1..label_count().
class BaseModel {
 public:
  virtual ~BaseModel() = default;
  virtual Label classify(const TokenSequence& masked) const = 0;
  virtual int label_count() const = 0;
};

class PredictionCache;

// Masks every position of x outside z. Output length equals the input length.
TokenSequence ablate(const TokenSequence& x, const FeatureGroup& z, const AblationRule& rule);

// Shortest round-trip decimal form of v (std::to_chars), used everywhere a
// float reaches an output file so that artifacts are byte-stable.
std::string format_double(double v);

// Label of the ablated input, h(z) = f(ablate(x, z)). Memoized through the
// cache when one is supplied; cache use never changes the result.
Label simplified_model(const BaseModel& model, const TokenSequence& x, const AblationRule& rule,
                       const FeatureGroup& z, PredictionCache* cache = nullptr);

}  // namespace subshap
