#include "subshap/confidence.hpp"

#include <cmath>
#include <string>

namespace subshap {

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

namespace {

// Continued fraction for the incomplete beta, evaluated with the modified
// Lentz algorithm. Converges quickly for x < (a+1)/(a+b+2); the symmetry
// transform in incomplete_beta handles the other half of the domain.
double beta_continued_fraction(double x, double a, double b) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-15;
  constexpr int kMaxIterations = 400;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw NumericError("incomplete beta continued fraction failed to converge");
}

}  // namespace

double incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw NumericError("beta shapes must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(x, a, b) / a;
  }
  return 1.0 - std::exp(b * std::log1p(-x) + a * std::log(x) - log_beta(b, a)) *
                   beta_continued_fraction(1.0 - x, b, a) / b;
}

double beta_quantile(double q, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw NumericError("beta shapes must be positive");
  if (q <= 0.0) return 0.0;
  if (q >= 1.0) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  double mid = 0.5;
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double cdf = incomplete_beta(mid, a, b);
    if (std::fabs(cdf - q) <= 1e-14 || hi - lo <= 1e-16) break;
    if (cdf < q) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (std::fabs(incomplete_beta(mid, a, b) - q) > 1e-10) {
    throw NumericError("beta quantile bisection residual above tolerance");
  }
  return mid;
}

BoundPair clopper_pearson_interval(long successes, long trials, double tail) {
  if (trials < 0 || successes < 0 || successes > trials) {
    throw ConfigError("invalid binomial counts");
  }
  if (!(tail > 0.0) || !(tail < 0.5)) throw ConfigError("tail mass must lie in (0, 0.5)");
  BoundPair p;
  if (trials == 0) {
    p.degenerate = true;
    return p;
  }
  const double s = static_cast<double>(successes);
  const double n = static_cast<double>(trials);
  p.lower = successes == 0 ? 0.0 : beta_quantile(tail, s, n - s + 1.0);
  p.upper = successes == trials ? 1.0 : beta_quantile(1.0 - tail, s + 1.0, n - s);
  return p;
}

std::vector<BoundPair> feature_bounds(const std::vector<long>& trials,
                                      const std::vector<long>& successes, double beta, int d) {
  if (trials.size() != successes.size()) throw ConfigError("trials/successes length mismatch");
  if (d < 1) throw ConfigError("feature count must be >= 1");
  if (!(beta > 0.0) || !(beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
  const double tail = beta / d;
  std::vector<BoundPair> out(trials.size());
  for (size_t i = 0; i < trials.size(); ++i) {
    out[i] = clopper_pearson_interval(successes[i], trials[i], tail);
  }
  return out;
}

std::vector<BoundPair> label_bounds(const LabelCounts& counts, double beta) {
  if (!(beta > 0.0) || !(beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
  const double tail = beta / static_cast<double>(counts.counts.size());
  std::vector<BoundPair> out(counts.counts.size());
  for (size_t c = 0; c < counts.counts.size(); ++c) {
    out[c] = clopper_pearson_interval(counts.counts[c], counts.total, tail);
  }
  return out;
}

BoundSet compute_bound_set(const AttributionResult& attribution, const LabelCounts& counts,
                           double beta) {
  const int d = attribution.feature_count;
  const int C = attribution.label_count;
  BoundSet set;
  set.feature_count = d;
  set.label_count = C;
  set.confidence = 1.0 - beta;
  set.alpha.resize(static_cast<size_t>(C));
  for (int c = 0; c < C; ++c) {
    auto conditional =
        feature_bounds(attribution.appearances, attribution.successes[static_cast<size_t>(c)],
                       beta, d);
    for (auto& b : conditional) {
      // importance = conditional probability / d
      b.lower /= d;
      b.upper /= d;
    }
    set.alpha[static_cast<size_t>(c)] = std::move(conditional);
  }
  set.label_probability = label_bounds(counts, beta);
  return set;
}

BoundSet exact_bound_set(const AttributionResult& exact_attribution,
                         const std::vector<double>& label_probabilities) {
  const int d = exact_attribution.feature_count;
  const int C = exact_attribution.label_count;
  if (label_probabilities.size() != static_cast<size_t>(C)) {
    throw ConfigError("label probability vector length mismatch");
  }
  BoundSet set;
  set.feature_count = d;
  set.label_count = C;
  set.confidence = 0.0;
  set.alpha.resize(static_cast<size_t>(C));
  for (int c = 0; c < C; ++c) {
    const auto& scores = exact_attribution.scores[static_cast<size_t>(c)];
    auto& row = set.alpha[static_cast<size_t>(c)];
    row.resize(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) {
      row[static_cast<size_t>(i)].lower = scores[static_cast<size_t>(i)];
      row[static_cast<size_t>(i)].upper = scores[static_cast<size_t>(i)];
    }
  }
  set.label_probability.resize(static_cast<size_t>(C));
  for (int c = 0; c < C; ++c) {
    set.label_probability[static_cast<size_t>(c)].lower = label_probabilities[static_cast<size_t>(c)];
    set.label_probability[static_cast<size_t>(c)].upper = label_probabilities[static_cast<size_t>(c)];
  }
  return set;
}

}  // namespace subshap
