#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "subshap/confidence.hpp"
#include "subshap/rng.hpp"
#include "subshap/synthetic.hpp"

using namespace subshap;

TEST_CASE("beta quantile matches the Beta(a,1) closed form q^(1/a)") {
  // I_x(a,1) = x^a, so the quantile is q^(1/a); frozen reference values
  CHECK(beta_quantile(0.01, 10.0, 1.0) == doctest::Approx(0.6309573444801932).epsilon(1e-9));
  CHECK(beta_quantile(0.5, 2.0, 1.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
  for (double a : {1.0, 3.0, 25.0, 400.0}) {
    for (double q : {1e-4, 0.01, 0.3, 0.9, 0.999}) {
      CHECK(std::abs(beta_quantile(q, a, 1.0) - std::pow(q, 1.0 / a)) <= 1e-9);
    }
  }
}

TEST_CASE("beta quantile inverts the CDF and respects symmetry") {
  for (double a : {0.5, 1.0, 7.0, 120.0}) {
    for (double b : {0.5, 2.0, 40.0}) {
      for (double q : {0.001, 0.025, 0.5, 0.975}) {
        const double x = beta_quantile(q, a, b);
        CHECK(std::abs(incomplete_beta(x, a, b) - q) <= 1e-9);
        // I_x(a,b) = 1 - I_{1-x}(b,a)
        CHECK(std::abs(beta_quantile(q, a, b) - (1.0 - beta_quantile(1.0 - q, b, a))) <= 1e-8);
      }
    }
  }
  CHECK(beta_quantile(0.0, 3.0, 4.0) == 0.0);
  CHECK(beta_quantile(1.0, 3.0, 4.0) == 1.0);
  CHECK(beta_quantile(-0.1, 3.0, 4.0) == 0.0);  // clamped, not an error
  CHECK_THROWS_AS(beta_quantile(0.5, 0.0, 1.0), NumericError);
}

TEST_CASE("incomplete beta edge values") {
  CHECK(incomplete_beta(0.0, 2.0, 3.0) == 0.0);
  CHECK(incomplete_beta(1.0, 2.0, 3.0) == 1.0);
  // I_x(1,1) = x
  CHECK(incomplete_beta(0.37, 1.0, 1.0) == doctest::Approx(0.37).epsilon(1e-12));
  // I_x(2,2) = 3x^2 - 2x^3
  const double x = 0.3;
  CHECK(incomplete_beta(x, 2.0, 2.0) ==
        doctest::Approx(3 * x * x - 2 * x * x * x).epsilon(1e-12));
}

TEST_CASE("Clopper-Pearson frozen reference and conventions") {
  const BoundPair b = clopper_pearson_interval(50, 100, 0.01);
  CHECK(b.lower == doctest::Approx(0.38071746690695246).epsilon(1e-10));
  CHECK(b.upper == doctest::Approx(0.6192825330930475).epsilon(1e-10));
  CHECK_FALSE(b.degenerate);

  const BoundPair zero = clopper_pearson_interval(0, 40, 0.025);
  CHECK(zero.lower == 0.0);
  CHECK(zero.upper == doctest::Approx(1.0 - std::pow(0.025, 1.0 / 40.0)).epsilon(1e-9));

  const BoundPair full = clopper_pearson_interval(40, 40, 0.025);
  CHECK(full.upper == 1.0);
  CHECK(full.lower == doctest::Approx(std::pow(0.025, 1.0 / 40.0)).epsilon(1e-9));

  const BoundPair none = clopper_pearson_interval(0, 0, 0.025);
  CHECK(none.degenerate);
  CHECK(none.lower == 0.0);
  CHECK(none.upper == 1.0);

  CHECK_THROWS_AS(clopper_pearson_interval(5, 4, 0.025), ConfigError);
  CHECK_THROWS_AS(clopper_pearson_interval(-1, 4, 0.025), ConfigError);
  CHECK_THROWS_AS(clopper_pearson_interval(1, 4, 0.0), ConfigError);
  CHECK_THROWS_AS(clopper_pearson_interval(1, 4, 0.5), ConfigError);
}

TEST_CASE("interval always contains the empirical rate and shrinks with N") {
  auto g = stream_rng(7, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const long n = 1 + static_cast<long>(uniform_below(g, 5000));
    const long s = static_cast<long>(uniform_below(g, static_cast<uint64_t>(n + 1)));
    const BoundPair b = clopper_pearson_interval(s, n, 0.005);
    const double rate = static_cast<double>(s) / static_cast<double>(n);
    CHECK(b.lower <= rate + 1e-12);
    CHECK(b.upper >= rate - 1e-12);
  }
  const BoundPair small = clopper_pearson_interval(50, 100, 0.005);
  const BoundPair big = clopper_pearson_interval(5000, 10000, 0.005);
  CHECK(big.upper - big.lower < small.upper - small.lower);
}

TEST_CASE("label bounds split the budget across C labels") {
  // frozen: lower bound of 9000/10000 at tail 0.01/2 via Beta(0.005; 9000, 1001)
  LabelCounts counts;
  counts.counts = {1000, 9000};
  counts.total = 10000;
  const auto lb = label_bounds(counts, 0.01);
  REQUIRE(lb.size() == 2);
  CHECK(lb[1].lower == doctest::Approx(0.8920307715022621).epsilon(1e-10));
  CHECK(lb[0].upper == doctest::Approx(1.0 - 0.8920307715022621).epsilon(1e-8));
  CHECK_THROWS_AS(label_bounds(counts, 0.0), ConfigError);
  CHECK_THROWS_AS(label_bounds(counts, 1.0), ConfigError);
}

TEST_CASE("feature bounds use tail beta/d per side") {
  const std::vector<long> trials{100, 100, 0};
  const std::vector<long> succ{50, 0, 0};
  const auto fb = feature_bounds(trials, succ, 0.03, 3);  // tail 0.01 each side
  REQUIRE(fb.size() == 3);
  CHECK(fb[0].lower == doctest::Approx(0.38071746690695246).epsilon(1e-10));
  CHECK(fb[0].upper == doctest::Approx(0.6192825330930475).epsilon(1e-10));
  CHECK(fb[1].lower == 0.0);
  CHECK(fb[2].degenerate);
  CHECK_THROWS_AS(feature_bounds(trials, {1, 2}, 0.03, 3), ConfigError);
}

TEST_CASE("bound set scales importance bounds into [0, 1/d]") {
  GroupSampleSet g;
  g.feature_count = 2;
  g.group_size = 1;
  g.groups = {FeatureGroup({0}), FeatureGroup({0}), FeatureGroup({1}), FeatureGroup({1})};
  g.appearance_counts = {2, 2};
  const std::vector<Label> labels{2, 2, 1, 2};
  const AttributionResult attr = attribute_mc(g, labels, 2, 2);
  LabelCounts counts;
  counts.counts = {1, 3};
  counts.total = 4;
  const BoundSet bs = compute_bound_set(attr, counts, 0.1);
  CHECK(bs.feature_count == 2);
  CHECK(bs.label_count == 2);
  CHECK(bs.confidence == doctest::Approx(0.9));
  REQUIRE(bs.alpha.size() == 2);
  REQUIRE(bs.alpha[1].size() == 2);
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < 2; ++i) {
      CHECK(bs.alpha[c][i].lower >= 0.0);
      CHECK(bs.alpha[c][i].upper <= 0.5 + 1e-12);
      CHECK(bs.alpha[c][i].lower <= attr.scores[c][i] + 1e-12);
      CHECK(bs.alpha[c][i].upper >= attr.scores[c][i] - 1e-12);
    }
  }
  // feature 0 appeared twice, both labeled 2: raw upper is 1, scaled to 1/d
  CHECK(bs.alpha[1][0].upper == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(bs.label_probability[1].lower <= 0.75);
  CHECK(bs.label_probability[1].upper >= 0.75);
}

TEST_CASE("exact bound set pins both endpoints to the true values") {
  const TokenSequence x{std::vector<std::string>{"cf", "b", "c"}};
  const TriggerBackdoorModel h(std::set<std::string>{"cf"}, 2,
                               std::make_shared<ConstantModel>(1, 2));
  const AttributionResult attr = attribute_exact(x, h, 2, 2);
  const auto probs = exact_label_distribution(x, h, 2);
  const BoundSet bs = exact_bound_set(attr, probs);
  CHECK(bs.confidence == 0.0);
  CHECK(bs.alpha[1][0].lower == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(bs.alpha[1][0].upper == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(bs.label_probability[1].lower == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(bs.label_probability[0].upper == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK_THROWS_AS(exact_bound_set(attr, std::vector<double>{0.5}), ConfigError);
}

TEST_CASE("coverage sanity: intervals catch the true rate nearly always") {
  // 400 replicates of CP at beta budget 0.02 split over one proportion;
  // violations should be rare (expected 2%, allow up to 6%)
  const double p = 0.3;
  int misses = 0;
  for (uint64_t rep = 0; rep < 400; ++rep) {
    auto g = stream_rng(99, rep);
    const long n = 500;
    const long s = binomial_draw(g, n, p);
    const BoundPair b = clopper_pearson_interval(s, n, 0.01);
    if (p < b.lower || p > b.upper) ++misses;
  }
  CHECK(misses <= 24);
}
