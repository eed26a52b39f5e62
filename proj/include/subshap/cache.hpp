#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "subshap/core.hpp"

namespace subshap {

// Memo of h(z) = f(ablate(x, z)) keyed by a digest of (x, z, mask token).
// Lookups take a shared lock and may run concurrently; insertions take an
// exclusive lock. Entries are never evicted or overwritten with a different
// label, so cached and uncached runs produce identical downstream output.
//
// Digest byte layout (version 1), hashed with 64-bit FNV-1a:
//   for each token of x:  uint32 little-endian byte length, then the raw bytes
//   then the mask token:  uint32 little-endian byte length, then the raw bytes
// The group is appended to the digest in text form ("i1,i2,..."), so distinct
// groups over equal inputs get distinct keys without a second hash. The layout
// is part of the on-disk format; changing it requires bumping kVersion.
class PredictionCache {
 public:
  static constexpr int kVersion = 1;

  static std::string key_for(const TokenSequence& x, const FeatureGroup& z,
                             const AblationRule& rule);

  std::optional<Label> lookup(const std::string& key) const;
  void insert(const std::string& key, Label label);

  uint64_t hits() const { return hits_.load(); }
  uint64_t misses() const { return misses_.load(); }
  size_t size() const;

  // JSONL persistence: a version header line, then one {"key","label"} object
  // per line. load() merges into the current entries. Throws IoError on
  // unreadable files or version mismatch.
  void save(const std::string& path) const;
  void load(const std::string& path);

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, Label> entries_;
  mutable std::atomic<uint64_t> hits_{0};
  mutable std::atomic<uint64_t> misses_{0};
};

}  // namespace subshap
