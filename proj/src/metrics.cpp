#include "subshap/metrics.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>

#include "subshap/parallel.hpp"
#include "subshap/rng.hpp"

namespace subshap {

FaithfulnessOutcome deletion_flip(const TokenSequence& x, Label original_label,
                                  const std::vector<int>& removed, const BaseModel& h,
                                  const EnsembleConfig& cfg, const AblationRule& rule,
                                  PredictionCache* cache, bool mask_instead_of_delete) {
  const int d = x.size();
  std::vector<uint8_t> drop(static_cast<size_t>(d), 0);
  for (int i : removed) {
    if (i < 0 || i >= d) throw ConfigError("deletion position out of range");
    drop[static_cast<size_t>(i)] = 1;
  }

  FaithfulnessOutcome out;
  out.original_label = original_label;

  std::vector<std::string> tokens;
  tokens.reserve(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) {
    if (!drop[static_cast<size_t>(i)]) {
      tokens.push_back(x.token(i));
    } else if (mask_instead_of_delete) {
      tokens.push_back(rule.special_value);
    }
  }
  if (tokens.empty()) {
    out.empty_after_deletion = true;
    out.flipped = true;  // the original label cannot be reproduced on no input
    return out;
  }

  const TokenSequence shortened{std::move(tokens)};
  EnsembleConfig derived = cfg.with_seed(stream_seed(cfg.seed, fnv1a64("post-deletion")));
  if (derived.group_size && *derived.group_size > shortened.size()) {
    // an explicit group size larger than the remnant degenerates to using
    // every remaining feature; rho-derived sizes already shrink with d
    derived.group_size = shortened.size();
  }
  const GroupSampleSet groups = sample_groups(shortened.size(), derived);
  const EnsembleRun run = ensemble_counts(shortened, h, groups, rule, cache);
  out.ablated_label = ensemble_predict(run.counts, cfg.tau);
  out.flipped = out.ablated_label != original_label;
  return out;
}

FaithfulnessOutcome faithfulness(const TokenSequence& x, const BaseModel& h,
                                 const EnsembleConfig& cfg, int e, const AblationRule& rule,
                                 PredictionCache* cache, bool mask_instead_of_delete) {
  cfg.validate();
  const int d = x.size();
  if (e < 1 || e > d) throw ConfigError("faithfulness requires 1 <= e <= d");
  const GroupSampleSet groups = sample_groups(d, cfg);
  const EnsembleRun run = ensemble_counts(x, h, groups, rule, cache);
  const Label predicted = ensemble_predict(run.counts, cfg.tau);
  const AttributionResult attribution =
      attribute_mc(groups, run.group_labels, h.label_count(), predicted);
  return deletion_flip(x, predicted, top_e(attribution, e), h, cfg, rule, cache,
                       mask_instead_of_delete);
}

PrfOutcome keyword_prf(const std::vector<int>& reported, const std::vector<int>& ground_truth) {
  const std::set<int> e_set(reported.begin(), reported.end());
  const std::set<int> l_set(ground_truth.begin(), ground_truth.end());
  if (e_set.empty()) throw ConfigError("precision/recall need a non-empty reported set");
  long hits = 0;
  for (int i : e_set) hits += l_set.count(i) ? 1 : 0;
  PrfOutcome out;
  out.precision = static_cast<double>(hits) / static_cast<double>(e_set.size());
  if (!l_set.empty()) {
    out.recall_defined = true;
    out.recall = static_cast<double>(hits) / static_cast<double>(l_set.size());
  }
  return out;
}

std::vector<size_t> filter_dstar(const std::vector<DatasetRecord>& dataset,
                                 const std::vector<AttackTranscript>& transcripts,
                                 AttackFilter mode) {
  std::unordered_map<std::string, const AttackTranscript*> by_id;
  for (const auto& t : transcripts) by_id.emplace(t.id, &t);
  std::vector<size_t> kept;
  for (size_t s = 0; s < dataset.size(); ++s) {
    const auto it = by_id.find(dataset[s].id);
    if (it == by_id.end()) continue;
    const AttackTranscript& t = *it->second;
    if (!t.success) continue;
    const bool keep = mode == AttackFilter::kBackdoor
                          ? (t.target_label && t.final_label == *t.target_label)
                          : (t.final_label != t.true_label);
    if (keep) kept.push_back(s);
  }
  return kept;
}

EvaluationReport evaluate_dataset(const std::vector<DatasetRecord>& dataset, const BaseModel& h,
                                  const EvaluationOptions& options,
                                  const std::vector<AttackTranscript>* transcripts,
                                  const AblationRule& rule, PredictionCache* cache) {
  options.ensemble.validate();
  if (options.certify && options.ensemble.tau) {
    throw ConfigError("the detection certificate assumes the majority rule; unset tau or certify=false");
  }
  if (options.certify && !(options.beta > 0.0 && options.beta < 1.0)) {
    throw ConfigError("beta must lie in (0, 1)");
  }
  if (options.e_grid.empty() || options.T_grid.empty()) throw ConfigError("empty evaluation grid");
  for (int e : options.e_grid) {
    if (e < 1) throw ConfigError("grid e values must be >= 1");
  }
  for (int T : options.T_grid) {
    if (T < 1) throw ConfigError("grid T values must be >= 1");
  }

  std::unordered_map<std::string, const AttackTranscript*> truth;
  if (transcripts != nullptr) {
    for (const auto& t : *transcripts) truth.emplace(t.id, &t);
  }

  const EnsembleConfig& cfg = options.ensemble;
  const size_t cells = options.e_grid.size() * options.T_grid.size();

  EvaluationReport report;
  report.ensemble = cfg;
  report.beta = options.beta;
  report.e_grid = options.e_grid;
  report.T_grid = options.T_grid;
  report.certified = options.certify;
  report.mask_instead_of_delete = options.mask_instead_of_delete;
  report.samples.resize(dataset.size() * cells);

  parallel_for(static_cast<long>(dataset.size()), options.jobs, [&](long s) {
    const DatasetRecord& record = dataset[static_cast<size_t>(s)];
    const int d = record.tokens.size();
    const EnsembleConfig sample_cfg =
        cfg.with_seed(stream_seed(cfg.seed, fnv1a64(record.id)));
    const int k = sample_cfg.group_size_for(d);
    const GroupSampleSet groups = sample_groups(d, sample_cfg);
    const EnsembleRun run = ensemble_counts(record.tokens, h, groups, rule, cache);
    const Label predicted = ensemble_predict(run.counts, sample_cfg.tau);
    const AttributionResult attribution =
        attribute_mc(groups, run.group_labels, h.label_count(), predicted);

    BoundSet bounds;
    if (options.certify) bounds = compute_bound_set(attribution, run.counts, options.beta);

    const AttackTranscript* t = nullptr;
    if (const auto it = truth.find(record.id); it != truth.end()) t = it->second;

    size_t cell = 0;
    for (int e : options.e_grid) {
      const int e_eff = std::min(e, d);
      const std::vector<int> top = top_e(attribution, e_eff);
      const FaithfulnessOutcome faith =
          deletion_flip(record.tokens, predicted, top, h, sample_cfg, rule, cache,
                        options.mask_instead_of_delete);
      PrfOutcome prf;
      if (t != nullptr) prf = keyword_prf(top, t->positions);

      for (int T : options.T_grid) {
        SampleEvaluation row;
        row.id = record.id;
        row.d = d;
        row.predicted = predicted;
        row.e = e;
        row.T = T;
        row.flipped = faith.flipped;
        row.empty_after_deletion = faith.empty_after_deletion;
        row.has_ground_truth = t != nullptr;
        row.precision = prf.precision;
        row.recall = prf.recall;
        row.recall_defined = t != nullptr && prf.recall_defined;
        if (options.certify) {
          const int T_eff = std::min(T, d);
          const CertificationResult cert =
              certified_detection_size(make_certification_input(bounds, predicted, k, e_eff, T_eff));
          row.detection_size = cert.detection_size;
          row.rate = cert.rate;
          row.binding_branch = cert.binding_branch;
        }
        report.samples[static_cast<size_t>(s) * cells + cell] = std::move(row);
        ++cell;
      }
    }
  });

  report.cells.reserve(cells);
  size_t cell = 0;
  for (int e : options.e_grid) {
    for (int T : options.T_grid) {
      EvaluationCell agg;
      agg.e = e;
      agg.T = T;
      double flip_sum = 0.0;
      double prec_sum = 0.0;
      double rec_sum = 0.0;
      double rate_sum = 0.0;
      for (size_t s = 0; s < dataset.size(); ++s) {
        const SampleEvaluation& row = report.samples[s * cells + cell];
        ++agg.sample_count;
        flip_sum += row.flipped ? 1.0 : 0.0;
        rate_sum += row.rate;
        if (row.has_ground_truth) {
          ++agg.ground_truth_count;
          prec_sum += row.precision;
        }
        if (row.recall_defined) {
          ++agg.recall_count;
          rec_sum += row.recall;
        }
      }
      if (agg.sample_count > 0) {
        agg.faithfulness_rate = flip_sum / static_cast<double>(agg.sample_count);
        agg.mean_detection_rate = rate_sum / static_cast<double>(agg.sample_count);
      }
      if (agg.ground_truth_count > 0) {
        agg.mean_precision = prec_sum / static_cast<double>(agg.ground_truth_count);
      }
      if (agg.recall_count > 0) {
        agg.mean_recall = rec_sum / static_cast<double>(agg.recall_count);
      }
      report.cells.push_back(agg);
      ++cell;
    }
  }
  return report;
}

nlohmann::ordered_json EvaluationReport::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json cfg;
  if (ensemble.rho) {
    cfg["rho"] = *ensemble.rho;
  } else {
    cfg["rho"] = nullptr;
  }
  if (ensemble.group_size) {
    cfg["group_size"] = *ensemble.group_size;
  } else {
    cfg["group_size"] = nullptr;
  }
  cfg["sample_count"] = ensemble.sample_count;
  cfg["label_count"] = ensemble.label_count;
  if (ensemble.tau) {
    cfg["tau"] = *ensemble.tau;
  } else {
    cfg["tau"] = nullptr;
  }
  cfg["seed"] = ensemble.seed;
  cfg["beta"] = beta;
  cfg["e_grid"] = e_grid;
  cfg["T_grid"] = T_grid;
  cfg["certified"] = certified;
  cfg["mask_instead_of_delete"] = mask_instead_of_delete;
  j["config"] = cfg;

  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : samples) {
    nlohmann::ordered_json r;
    r["sample_id"] = row.id;
    r["d"] = row.d;
    r["predicted"] = row.predicted;
    r["e"] = row.e;
    r["T"] = row.T;
    r["flipped"] = row.flipped;
    r["empty_after_deletion"] = row.empty_after_deletion;
    r["precision"] = row.precision;
    r["recall"] = row.recall;
    r["recall_defined"] = row.recall_defined;
    r["has_ground_truth"] = row.has_ground_truth;
    r["detection_size"] = row.detection_size;
    r["rate"] = row.rate;
    r["binding_branch"] = row.binding_branch;
    rows.push_back(std::move(r));
  }
  j["samples"] = std::move(rows);

  nlohmann::ordered_json aggs = nlohmann::ordered_json::array();
  for (const auto& c : cells) {
    nlohmann::ordered_json a;
    a["e"] = c.e;
    a["T"] = c.T;
    a["sample_count"] = c.sample_count;
    a["faithfulness_rate"] = c.faithfulness_rate;
    a["mean_precision"] = c.mean_precision;
    a["mean_recall"] = c.mean_recall;
    a["ground_truth_count"] = c.ground_truth_count;
    a["recall_count"] = c.recall_count;
    a["mean_detection_rate"] = c.mean_detection_rate;
    aggs.push_back(std::move(a));
  }
  j["aggregates"] = std::move(aggs);
  return j;
}

std::string EvaluationReport::to_csv() const {
  std::ostringstream out;
  out << "sample_id,d,predicted,e,T,flipped,empty_after_deletion,precision,recall,"
         "recall_defined,has_ground_truth,detection_size,rate,binding_branch\n";
  for (const auto& row : samples) {
    out << row.id << ',' << row.d << ',' << row.predicted << ',' << row.e << ',' << row.T << ','
        << (row.flipped ? 1 : 0) << ',' << (row.empty_after_deletion ? 1 : 0) << ','
        << format_double(row.precision) << ',' << format_double(row.recall) << ','
        << (row.recall_defined ? 1 : 0) << ',' << (row.has_ground_truth ? 1 : 0) << ','
        << row.detection_size << ',' << format_double(row.rate) << ',' << row.binding_branch
        << '\n';
  }
  return out.str();
}

}  // namespace subshap
