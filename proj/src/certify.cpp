#include "subshap/certify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "subshap/attribution.hpp"
#include "subshap/combinatorics.hpp"
#include "subshap/parallel.hpp"
#include "subshap/rng.hpp"

namespace subshap {

void CertificationInput::validate() const {
  if (d < 1) throw ConfigError("certification requires d >= 1");
  if (k < 1 || k > d) throw ConfigError("certification requires 1 <= k <= d");
  if (e < 1 || e > d) throw ConfigError("certification requires 1 <= e <= d");
  if (T < 1 || T > d) throw ConfigError("certification requires 1 <= T <= d");
  if (alternatives.empty()) throw ConfigError("certification requires at least one alternative");
  for (const auto& alt : alternatives) {
    if (alt.upper_sorted.size() != static_cast<size_t>(d) ||
        alt.lower_sorted.size() != static_cast<size_t>(d)) {
      throw ConfigError("bound vectors must have length d");
    }
  }
}

namespace {

// The conditions must hold strictly: at exact equality an attack can force a
// reported-score tie that the top-e tie-break resolves against the modified
// feature. The margin absorbs rounding when both sides are the same rational;
// genuine margins at feasible d are orders of magnitude wider.
constexpr double kStrictMargin = 1e-12;

// Per-feature importance mass the flip guarantees inside the modified set,
// already divided by k. Falls back to delta / 2 for hand-built inputs.
double flip_mass_per_k(const AlternativeBounds& alt, int k) {
  const double mass = alt.flip_mass >= 0.0 ? alt.flip_mass : alt.delta / 2.0;
  return mass / k;
}

}  // namespace

bool condition_individual(const AlternativeBounds& alt, int r, int d, int k, int e, int T) {
  if (r < 1 || r > std::min(T, e)) throw ConfigError("r outside [1, min(T, e)]");
  if (alt.delta <= 0.0) return false;
  const double mass = flip_mass_per_k(alt, k);
  if (mass <= 0.0) return false;
  const double window = static_cast<double>(T - r + 1);
  const double lhs = (mass - static_cast<double>(r - 1) / d) / window;
  const int pivot = std::min(e - r + 1, d);  // index of the (e-r+1)-th largest upper bound
  const double rhs = alt.upper_sorted[static_cast<size_t>(pivot - 1)] + 1.0 / d -
                     binomial_ratio(d - 1 - T, k - 1, d, k) / k;
  return lhs - rhs > kStrictMargin;
}

bool condition_joint(const AlternativeBounds& alt, int r, int d, int k, int e, int T) {
  if (r < 1 || r > std::min(T, e)) throw ConfigError("r outside [1, min(T, e)]");
  if (alt.delta <= 0.0) return false;
  const double mass = flip_mass_per_k(alt, k);
  if (mass <= 0.0) return false;
  const double inv_window = 1.0 / static_cast<double>(T - r + 1);
  const double crowd = static_cast<double>(k - 1) / static_cast<double>(e - r + 1);
  if (inv_window <= crowd) return false;
  const double lhs = mass * (inv_window - crowd);
  const int head = std::min(e - r + 1, d);
  double head_sum = 0.0;
  for (int i = 1; i <= head; ++i) head_sum += alt.upper_sorted[static_cast<size_t>(i - 1)];
  const double rhs = head_sum / (e - r + 1) + static_cast<double>(r - 1) / d * inv_window;
  return lhs - rhs > kStrictMargin;
}

CertificationResult certified_detection_size(const CertificationInput& input) {
  input.validate();
  CertificationResult result;
  const int r_max = std::min(input.T, input.e);
  for (int r = r_max; r >= 1; --r) {
    bool all_hold = true;
    bool all_individual = true;
    bool all_joint = true;
    for (const auto& alt : input.alternatives) {
      ConditionAudit a;
      a.r = r;
      a.alternative = alt.label;
      a.individual = condition_individual(alt, r, input.d, input.k, input.e, input.T);
      a.joint = condition_joint(alt, r, input.d, input.k, input.e, input.T);
      result.audit.push_back(a);
      if (!a.individual && !a.joint) all_hold = false;
      all_individual = all_individual && a.individual;
      all_joint = all_joint && a.joint;
    }
    if (all_hold) {
      result.detection_size = r;
      result.rate = static_cast<double>(r) / input.T;
      if (all_individual && all_joint) {
        result.binding_branch = "both";
      } else if (all_individual) {
        result.binding_branch = "individual";
      } else if (all_joint) {
        result.binding_branch = "joint";
      } else {
        result.binding_branch = "mixed";
      }
      return result;
    }
  }
  return result;  // D = 0, rate 0, branch "none"
}

CertificationInput make_certification_input(const BoundSet& bounds, Label predicted, int k, int e,
                                            int T) {
  const int d = bounds.feature_count;
  CertificationInput input;
  input.d = d;
  input.k = k;
  input.e = e;
  input.T = T;
  input.predicted = predicted;
  const double predicted_lower =
      bounds.label_probability.at(static_cast<size_t>(predicted - 1)).lower;
  for (int c = 1; c <= bounds.label_count; ++c) {
    if (c == predicted) continue;
    AlternativeBounds alt;
    alt.label = c;
    const double alt_upper = bounds.label_probability[static_cast<size_t>(c - 1)].upper;
    alt.delta = predicted_lower - alt_upper;
    // With two labels this equals delta / 2; with more it stays valid when
    // third labels absorb predicted-label votes and delta / 2 does not.
    alt.flip_mass = std::max(0.0, 1.0 / bounds.label_count - alt_upper);
    const auto& row = bounds.alpha[static_cast<size_t>(c - 1)];
    // descending by value, ties toward the smaller feature index
    std::vector<int> order(static_cast<size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    auto sorted_by = [&](auto key) {
      std::vector<int> o = order;
      std::sort(o.begin(), o.end(), [&](int a, int b) {
        const double ka = key(a);
        const double kb = key(b);
        if (ka != kb) return ka > kb;
        return a < b;
      });
      return o;
    };
    for (int i : sorted_by([&](int i) { return row[static_cast<size_t>(i)].upper; })) {
      alt.upper_sorted.push_back(row[static_cast<size_t>(i)].upper);
    }
    for (int i : sorted_by([&](int i) { return row[static_cast<size_t>(i)].lower; })) {
      alt.lower_sorted.push_back(row[static_cast<size_t>(i)].lower);
    }
    input.alternatives.push_back(std::move(alt));
  }
  return input;
}

DetectionCurve detection_rate_curve(const std::vector<DatasetRecord>& samples, const BaseModel& h,
                                    const EnsembleConfig& cfg, double beta,
                                    const std::vector<int>& e_grid, const std::vector<int>& T_grid,
                                    const AblationRule& rule, PredictionCache* cache, int jobs,
                                    bool exact_bounds) {
  cfg.validate();
  if (cfg.tau) {
    throw ConfigError("certification is defined for the majority decision rule; unset tau");
  }
  if (e_grid.empty() || T_grid.empty()) throw ConfigError("empty certification grid");
  for (int e : e_grid) {
    if (e < 1) throw ConfigError("grid e values must be >= 1");
  }
  for (int T : T_grid) {
    if (T < 1) throw ConfigError("grid T values must be >= 1");
  }

  const size_t cells = e_grid.size() * T_grid.size();
  DetectionCurve curve;
  curve.rows.resize(samples.size() * cells);

  parallel_for(static_cast<long>(samples.size()), jobs, [&](long s) {
    const auto& record = samples[static_cast<size_t>(s)];
    const int d = record.tokens.size();
    const int k = cfg.group_size_for(d);

    GroupSampleSet groups;
    if (exact_bounds) {
      groups = enumerate_groups(d, k);
    } else {
      const uint64_t sample_seed = stream_seed(cfg.seed, fnv1a64(record.id));
      groups = sample_groups(d, cfg.with_seed(sample_seed));
    }
    const EnsembleRun run = ensemble_counts(record.tokens, h, groups, rule, cache);
    const Label predicted = ensemble_predict(run.counts);
    const AttributionResult attribution =
        attribute_mc(groups, run.group_labels, h.label_count(), predicted);

    BoundSet bounds;
    if (exact_bounds) {
      std::vector<double> probs(run.counts.counts.size());
      for (size_t c = 0; c < probs.size(); ++c) {
        probs[c] = static_cast<double>(run.counts.counts[c]) / run.counts.total;
      }
      bounds = exact_bound_set(attribution, probs);
    } else {
      bounds = compute_bound_set(attribution, run.counts, beta);
    }

    size_t cell = 0;
    for (int e : e_grid) {
      for (int T : T_grid) {
        const int e_eff = std::min(e, d);
        const int T_eff = std::min(T, d);
        const CertificationResult cert =
            certified_detection_size(make_certification_input(bounds, predicted, k, e_eff, T_eff));
        DetectionCurveRow row;
        row.sample_id = record.id;
        row.e = e;
        row.T = T;
        row.detection_size = cert.detection_size;
        row.rate = cert.rate;
        row.binding_branch = cert.binding_branch;
        curve.rows[static_cast<size_t>(s) * cells + cell] = std::move(row);
        ++cell;
      }
    }
  });

  curve.means.reserve(cells);
  size_t cell = 0;
  for (int e : e_grid) {
    for (int T : T_grid) {
      double sum = 0.0;
      for (size_t s = 0; s < samples.size(); ++s) sum += curve.rows[s * cells + cell].rate;
      curve.means.push_back({e, T, samples.empty() ? 0.0 : sum / samples.size()});
      ++cell;
    }
  }
  return curve;
}

double synthetic_certified_rate(const SyntheticSweepPoint& point) {
  if (point.d < 1 || point.N < 1 || point.replicates < 1) {
    throw ConfigError("invalid synthetic sweep point");
  }
  if (!(point.delta > 0.0) || !(point.delta < 1.0)) {
    throw ConfigError("synthetic delta must lie in (0, 1)");
  }
  if (!(point.rho >= 0.0) || !(point.rho < 1.0)) throw ConfigError("rho must lie in [0, 1)");
  const int d = point.d;
  const int k = std::max(1, static_cast<int>(std::llround((1.0 - point.rho) * d)));
  const int e_eff = std::min(point.e, d);
  const int T_eff = std::min(point.T, d);
  const double runner_up_rate = (1.0 - point.delta) / 2.0;

  double rate_sum = 0.0;
  for (int rep = 0; rep < point.replicates; ++rep) {
    auto rng = stream_rng(point.seed, static_cast<uint64_t>(rep));
    const long n_alt = binomial_draw(rng, point.N, runner_up_rate);
    const long n_pred = point.N - n_alt;

    AlternativeBounds alt;
    alt.label = 2;
    const double label_tail = point.beta / 2.0;  // C = 2
    alt.delta = clopper_pearson_interval(n_pred, point.N, label_tail).lower -
                clopper_pearson_interval(n_alt, point.N, label_tail).upper;

    std::vector<double> uppers;
    std::vector<double> lowers;
    uppers.reserve(static_cast<size_t>(d));
    lowers.reserve(static_cast<size_t>(d));
    const double feature_tail = point.beta / d;
    for (int i = 0; i < d; ++i) {
      const long appearances = binomial_draw(rng, point.N, 1.0 - point.rho);
      const long successes = binomial_draw(rng, appearances, runner_up_rate);
      const BoundPair b = clopper_pearson_interval(successes, appearances, feature_tail);
      uppers.push_back(b.upper / d);
      lowers.push_back(b.lower / d);
    }
    std::sort(uppers.rbegin(), uppers.rend());
    std::sort(lowers.rbegin(), lowers.rend());
    alt.upper_sorted = std::move(uppers);
    alt.lower_sorted = std::move(lowers);

    CertificationInput input;
    input.d = d;
    input.k = k;
    input.e = e_eff;
    input.T = T_eff;
    input.predicted = 1;
    input.alternatives.push_back(std::move(alt));
    rate_sum += certified_detection_size(input).rate;
  }
  return rate_sum / point.replicates;
}

}  // namespace subshap
