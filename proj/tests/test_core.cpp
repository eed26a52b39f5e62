#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "subshap/cache.hpp"
#include "subshap/combinatorics.hpp"
#include "subshap/core.hpp"
#include "subshap/dataset.hpp"
#include "subshap/parallel.hpp"
#include "subshap/rng.hpp"
#include "subshap/synthetic.hpp"

using namespace subshap;

namespace {

TokenSequence seq(std::initializer_list<const char*> words) {
  std::vector<std::string> v;
  for (const char* w : words) v.emplace_back(w);
  return TokenSequence(std::move(v));
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("token sequence basics") {
  const TokenSequence x = seq({"a", "b", "c"});
  CHECK(x.size() == 3);
  CHECK(x.token(1) == "b");
  CHECK_THROWS_AS(TokenSequence(std::vector<std::string>{}), ConfigError);
}

TEST_CASE("feature group validation") {
  const FeatureGroup z({2, 0});
  CHECK(z.indices() == std::vector<int>{0, 2});  // sorted on construction
  CHECK(z.contains(2));
  CHECK(!z.contains(1));
  CHECK_THROWS_AS(FeatureGroup(std::vector<int>{}), InvalidGroupError);
  CHECK_THROWS_AS(FeatureGroup({-1, 0}), InvalidGroupError);
  CHECK_THROWS_AS(FeatureGroup({1, 1}), InvalidGroupError);
}

TEST_CASE("ablation keeps positions and masks the rest") {
  const TokenSequence x = seq({"a", "b", "c", "d"});
  const TokenSequence masked = ablate(x, FeatureGroup({0, 2}), {});
  CHECK(masked.tokens() == std::vector<std::string>{"a", "[MASK]", "c", "[MASK]"});
  CHECK(masked.size() == x.size());
  CHECK_THROWS_AS(ablate(x, FeatureGroup({4}), {}), InvalidGroupError);

  AblationRule rule;
  rule.special_value = "<pad>";
  CHECK(ablate(x, FeatureGroup({3}), rule).token(0) == "<pad>");
}

TEST_CASE("simplified model validates labels and uses the cache") {
  const TokenSequence x = seq({"a", "b"});
  const ConstantModel good(2, 2);
  PredictionCache cache;
  CHECK(simplified_model(good, x, {}, FeatureGroup({0}), &cache) == 2);
  CHECK(cache.size() == 1);
  CHECK(simplified_model(good, x, {}, FeatureGroup({0}), &cache) == 2);
  CHECK(cache.hits() == 1);

  // label outside 1..C is a contract violation
  struct Liar final : BaseModel {
    Label classify(const TokenSequence&) const override { return 3; }
    int label_count() const override { return 2; }
  };
  const Liar bad;
  CHECK_THROWS_AS(simplified_model(bad, x, {}, FeatureGroup({0})), ClassificationError);
}

TEST_CASE("cache keys separate inputs, groups, and mask tokens") {
  const TokenSequence x = seq({"a", "b"});
  const TokenSequence y = seq({"ab"});
  AblationRule other;
  other.special_value = "#";
  const std::set<std::string> keys = {
      PredictionCache::key_for(x, FeatureGroup({0}), {}),
      PredictionCache::key_for(x, FeatureGroup({1}), {}),
      PredictionCache::key_for(x, FeatureGroup({0, 1}), {}),
      PredictionCache::key_for(y, FeatureGroup({0}), {}),
      PredictionCache::key_for(x, FeatureGroup({0}), other),
  };
  CHECK(keys.size() == 5);
}

TEST_CASE("cache round trips through disk and merges") {
  PredictionCache cache;
  cache.insert("k1", 1);
  cache.insert("k2", 2);
  const auto path = temp_file("subshap_cache_test.jsonl");
  cache.save(path.string());

  PredictionCache loaded;
  loaded.load(path.string());
  CHECK(loaded.size() == 2);
  CHECK(loaded.lookup("k2") == Label{2});
  std::filesystem::remove(path);

  CHECK_THROWS_AS(loaded.load("/nonexistent/cache.jsonl"), IoError);
}

TEST_CASE("cache files are byte stable") {
  const auto path_a = temp_file("subshap_cache_a.jsonl");
  const auto path_b = temp_file("subshap_cache_b.jsonl");
  PredictionCache a;
  a.insert("z", 1);
  a.insert("a", 2);
  a.insert("m", 1);
  PredictionCache b;
  b.insert("m", 1);
  b.insert("a", 2);
  b.insert("z", 1);
  a.save(path_a.string());
  b.save(path_b.string());
  std::ifstream fa(path_a), fb(path_b);
  const std::string ca((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  const std::string cb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  CHECK(ca == cb);
  std::filesystem::remove(path_a);
  std::filesystem::remove(path_b);
}

TEST_CASE("dataset loader validates records") {
  const auto path = temp_file("subshap_dataset_test.jsonl");
  {
    std::ofstream out(path);
    out << R"({"id":"a","tokens":["x","y"],"label":1})" << "\n";
    out << R"({"id":"b","tokens":["z"],"label":2})" << "\n";
  }
  const auto records = load_jsonl_dataset(path.string());
  REQUIRE(records.size() == 2);
  CHECK(records[0].id == "a");
  CHECK(records[1].tokens.token(0) == "z");
  CHECK(records[1].label == 2);

  {
    std::ofstream out(path);
    out << R"({"id":"a","tokens":["x"],"label":1})" << "\n";
    out << R"({"id":"a","tokens":["y"],"label":1})" << "\n";
  }
  CHECK_THROWS_AS(load_jsonl_dataset(path.string()), ConfigError);  // duplicate ids

  {
    std::ofstream out(path);
    out << R"({"id":"a","tokens":[],"label":1})" << "\n";
  }
  CHECK_THROWS_AS(load_jsonl_dataset(path.string()), ConfigError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_jsonl_dataset(path.string()), IoError);
}

TEST_CASE("dataset save/load round trip") {
  const auto path = temp_file("subshap_dataset_rt.jsonl");
  std::vector<DatasetRecord> records;
  records.push_back({"r1", seq({"a", "b"}), 1});
  records.push_back({"r2", seq({"c"}), 3});
  save_jsonl_dataset(records, path.string());
  const auto loaded = load_jsonl_dataset(path.string());
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].tokens == records[0].tokens);
  CHECK(loaded[1].label == 3);
  std::filesystem::remove(path);
}

TEST_CASE("binomial coefficients") {
  CHECK(binomial(5, 2) == 10);
  CHECK(binomial(8, 0) == 1);
  CHECK(binomial(3, 5) == 0);
  CHECK(binomial(2, -1) == 0);
  CHECK(binomial(60, 30) == BigInt("118264581564861424"));
  CHECK(binomial_double(6, 3) == doctest::Approx(20.0).epsilon(1e-15));
  CHECK(binomial_ratio(4, 1, 5, 2) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(binomial_ratio(2, 5, 5, 2) == 0.0);  // zero numerator is fine
  CHECK_THROWS(binomial_ratio(5, 2, 2, 5));  // zero denominator is not
  CHECK(binomial_capped(100, 50, 1000) == 1001);
  CHECK(binomial_capped(5, 2, 1000) == 10);
}

TEST_CASE("combination enumeration is lexicographic and complete") {
  std::vector<std::vector<int>> all;
  for_each_combination(4, 2, [&](const std::vector<int>& c) { all.push_back(c); });
  REQUIRE(all.size() == 6);
  CHECK(all.front() == std::vector<int>{0, 1});
  CHECK(all.back() == std::vector<int>{2, 3});
  for (size_t i = 1; i < all.size(); ++i) CHECK(all[i - 1] < all[i]);

  int calls = 0;
  for_each_combination(3, 0, [&](const std::vector<int>& c) {
    ++calls;
    CHECK(c.empty());
  });
  CHECK(calls == 1);
  for_each_combination(2, 3, [&](const std::vector<int>&) { FAIL("k > d must not visit"); });
}

TEST_CASE("seeded streams are stable and decorrelated") {
  CHECK(splitmix64(0) == splitmix64(0));
  CHECK(splitmix64(1) != splitmix64(2));
  CHECK(stream_seed(7, 1) != stream_seed(7, 2));
  CHECK(stream_seed(7, 1) != stream_seed(8, 1));
  CHECK(fnv1a64("abc") == fnv1a64("abc"));
  CHECK(fnv1a64("abc") != fnv1a64("abd"));

  auto g1 = stream_rng(42, 3);
  auto g2 = stream_rng(42, 3);
  for (int i = 0; i < 100; ++i) CHECK(g1() == g2());
}

TEST_CASE("uniform_below and sample_subset") {
  auto g = stream_rng(1, 0);
  for (int i = 0; i < 1000; ++i) {
    const uint64_t v = uniform_below(g, 7);
    CHECK(v < 7);
  }
  const std::vector<int> s = sample_subset(g, 10, 4);
  CHECK(s.size() == 4);
  for (size_t i = 1; i < s.size(); ++i) CHECK(s[i - 1] < s[i]);
  CHECK(s.front() >= 0);
  CHECK(s.back() < 10);

  auto g2 = stream_rng(5, 9);
  const std::vector<int> full = sample_subset(g2, 6, 6);
  CHECK(full == std::vector<int>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("binomial draws are deterministic and in range") {
  auto g = stream_rng(11, 0);
  long total = 0;
  for (int i = 0; i < 200; ++i) {
    const long v = binomial_draw(g, 50, 0.3);
    CHECK(v >= 0);
    CHECK(v <= 50);
    total += v;
  }
  // mean 15 per draw; loose 3-sigma style window
  CHECK(total > 200 * 15 - 400);
  CHECK(total < 200 * 15 + 400);
  CHECK(binomial_draw(g, 10, 0.0) == 0);
  CHECK(binomial_draw(g, 10, 1.0) == 10);
}

TEST_CASE("parallel_for covers the range once and rethrows") {
  std::vector<int> hits(500, 0);
  parallel_for(500, 4, [&](long i) { hits[static_cast<size_t>(i)] += 1; });
  for (int h : hits) CHECK(h == 1);

  CHECK_THROWS_AS(parallel_for(10, 4,
                               [&](long i) {
                                 if (i == 7) throw NumericError("boom");
                               }),
                  NumericError);
}

TEST_CASE("format_double round trips shortest form") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
}
