#include "subshap/cache.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <vector>

#include <json.hpp>

#include "subshap/rng.hpp"

namespace subshap {

namespace {

uint64_t feed_length_prefixed(uint64_t h, const std::string& s) {
  const uint32_t len = static_cast<uint32_t>(s.size());
  unsigned char prefix[4] = {static_cast<unsigned char>(len & 0xff),
                             static_cast<unsigned char>((len >> 8) & 0xff),
                             static_cast<unsigned char>((len >> 16) & 0xff),
                             static_cast<unsigned char>((len >> 24) & 0xff)};
  h = fnv1a64(prefix, 4, h);
  return fnv1a64(s.data(), s.size(), h);
}

}  // namespace

std::string PredictionCache::key_for(const TokenSequence& x, const FeatureGroup& z,
                                     const AblationRule& rule) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& token : x.tokens()) h = feed_length_prefixed(h, token);
  h = feed_length_prefixed(h, rule.special_value);
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  std::string key(hex);
  key.push_back(':');
  for (size_t i = 0; i < z.indices().size(); ++i) {
    if (i > 0) key.push_back(',');
    key += std::to_string(z.indices()[i]);
  }
  return key;
}

std::optional<Label> PredictionCache::lookup(const std::string& key) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    misses_.fetch_add(1, std::memory_order_relaxed);
    return std::nullopt;
  }
  hits_.fetch_add(1, std::memory_order_relaxed);
  return it->second;
}

void PredictionCache::insert(const std::string& key, Label label) {
  std::unique_lock lock(mutex_);
  entries_.emplace(key, label);
}

size_t PredictionCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

void PredictionCache::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write cache file: " + path);
  nlohmann::ordered_json header;
  header["format"] = "subshap-cache";
  header["version"] = kVersion;
  out << header.dump() << '\n';
  std::vector<std::pair<std::string, Label>> sorted;
  {
    std::shared_lock lock(mutex_);
    sorted.assign(entries_.begin(), entries_.end());
  }
  std::sort(sorted.begin(), sorted.end());  // byte-stable files regardless of insert order
  for (const auto& [key, label] : sorted) {
    nlohmann::ordered_json row;
    row["key"] = key;
    row["label"] = label;
    out << row.dump() << '\n';
  }
  if (!out) throw IoError("failed writing cache file: " + path);
}

void PredictionCache::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read cache file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty cache file: " + path);
  nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
  if (header.is_discarded() || header.value("format", "") != "subshap-cache" ||
      header.value("version", -1) != kVersion) {
    throw IoError("unrecognized cache header in " + path);
  }
  size_t line_no = 1;
  std::unique_lock lock(mutex_);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json row = nlohmann::json::parse(line, nullptr, false);
    if (row.is_discarded() || !row.contains("key") || !row.contains("label")) {
      throw IoError("malformed cache entry at " + path + ":" + std::to_string(line_no));
    }
    entries_.emplace(row["key"].get<std::string>(), row["label"].get<Label>());
  }
}

}  // namespace subshap
