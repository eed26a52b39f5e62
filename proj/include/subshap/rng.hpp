#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace subshap {

// SplitMix64 finalizer. Used as a stateless mixer to derive independent
// stream seeds from (seed, index) pairs; the derived streams feed mt19937_64.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over raw bytes. Shared by the cache digest and by string stream tags.
inline uint64_t fnv1a64(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a64(s.data(), s.size(), h);
}

// Seed of substream `index` of `seed`. Two mixing rounds so that grids of
// (seed, index) pairs do not produce correlated generators. Substreams are
// what make parallel sampling order-independent: group j always draws from
// stream_seed(seed, j) no matter which worker evaluates it.
inline uint64_t stream_seed(uint64_t seed, uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index ^ 0x6a09e667f3bcc909ULL));
}

inline std::mt19937_64 stream_rng(uint64_t seed, uint64_t index) {
  return std::mt19937_64(stream_seed(seed, index));
}

// Unbiased draw in [0, n) by rejection on the top of the 64-bit range.
// Hand-rolled because std::uniform_int_distribution is implementation-defined
// and sampled groups must be reproducible across standard libraries.
inline uint64_t uniform_below(std::mt19937_64& g, uint64_t n) {
  const uint64_t reject_below = (0 - n) % n;  // 2^64 mod n
  for (;;) {
    const uint64_t v = g();
    if (v >= reject_below) return v % n;
  }
}

// Uniform k-subset of {0..d-1}, sorted ascending. Partial Fisher-Yates over a
// virtual index array (O(k) expected work, no O(d) pool initialization).
inline std::vector<int> sample_subset(std::mt19937_64& g, int d, int k) {
  std::unordered_map<int, int> moved;
  std::vector<int> out;
  out.reserve(static_cast<size_t>(k));
  for (int t = 0; t < k; ++t) {
    const int j = t + static_cast<int>(uniform_below(g, static_cast<uint64_t>(d - t)));
    auto it_j = moved.find(j);
    const int value_j = it_j == moved.end() ? j : it_j->second;
    auto it_t = moved.find(t);
    const int value_t = it_t == moved.end() ? t : it_t->second;
    out.push_back(value_j);
    moved[j] = value_t;
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Portable Binomial(n, p) by counting Bernoulli successes. O(n) per draw,
// intended for synthetic-sweep scales (n up to ~10^5).
inline long binomial_draw(std::mt19937_64& g, long n, double p) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) return n;
  // 53-bit uniform in [0,1)
  long hits = 0;
  for (long i = 0; i < n; ++i) {
    const double u = static_cast<double>(g() >> 11) * 0x1.0p-53;
    if (u < p) ++hits;
  }
  return hits;
}

}  // namespace subshap
