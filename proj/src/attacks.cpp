#include "subshap/attacks.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>

#include "subshap/parallel.hpp"
#include "subshap/rng.hpp"

namespace subshap {

nlohmann::ordered_json to_json(const AttackTranscript& t) {
  nlohmann::ordered_json j;
  j["id"] = t.id;
  j["type"] = t.type;
  j["success"] = t.success;
  j["vacuous"] = t.vacuous;
  j["true_label"] = t.true_label;
  j["original_label"] = t.original_label;
  j["final_label"] = t.final_label;
  if (t.target_label) {
    j["target_label"] = *t.target_label;
  } else {
    j["target_label"] = nullptr;
  }
  j["positions"] = t.positions;
  j["attacked_tokens"] = t.attacked_tokens;
  return j;
}

AttackTranscript transcript_from_json(const nlohmann::json& j) {
  AttackTranscript t;
  t.id = j.at("id").get<std::string>();
  t.type = j.at("type").get<std::string>();
  t.success = j.at("success").get<bool>();
  t.vacuous = j.value("vacuous", false);
  t.true_label = j.at("true_label").get<Label>();
  t.original_label = j.at("original_label").get<Label>();
  t.final_label = j.at("final_label").get<Label>();
  if (j.contains("target_label") && !j["target_label"].is_null()) {
    t.target_label = j["target_label"].get<Label>();
  }
  t.positions = j.at("positions").get<std::vector<int>>();
  t.attacked_tokens = j.value("attacked_tokens", std::vector<std::string>{});
  return t;
}

TriggerInsertion insert_triggers(const TokenSequence& x, const std::vector<std::string>& triggers,
                                 int count, uint64_t seed) {
  if (count < 0) throw ConfigError("trigger count must be >= 0");
  if (count > 0 && triggers.empty()) throw ConfigError("no trigger tokens supplied");
  std::vector<std::string> tokens = x.tokens();
  std::vector<int> positions;
  auto rng = stream_rng(seed, fnv1a64("insert-triggers"));
  for (int t = 0; t < count; ++t) {
    const int pos = static_cast<int>(uniform_below(rng, tokens.size() + 1));
    const auto& word =
        triggers[static_cast<size_t>(uniform_below(rng, triggers.size()))];
    tokens.insert(tokens.begin() + pos, word);
    for (int& p : positions) {
      if (p >= pos) ++p;  // earlier insertions shift right
    }
    positions.push_back(pos);
  }
  std::sort(positions.begin(), positions.end());
  TriggerInsertion out{TokenSequence(std::move(tokens)), std::move(positions)};
  return out;
}

namespace {

Label ensemble_label(const TokenSequence& x, const BaseModel& h, const EnsembleConfig& cfg,
                     const AblationRule& rule, PredictionCache* cache, uint64_t step) {
  const uint64_t step_seed = stream_seed(cfg.seed, fnv1a64("substitute-step") + step);
  const GroupSampleSet groups = sample_groups(x.size(), cfg.with_seed(step_seed));
  const EnsembleRun run = ensemble_counts(x, h, groups, rule, cache);
  return ensemble_predict(run.counts, cfg.tau);
}

// Leave-one-out saliency on the base model: 1 when masking the position
// changes the base prediction, else 0.
std::vector<int> loo_scores(const std::vector<std::string>& tokens, const BaseModel& h,
                            const AblationRule& rule) {
  const Label full = h.classify(TokenSequence(tokens));
  std::vector<int> score(tokens.size(), 0);
  std::vector<std::string> work = tokens;
  for (size_t i = 0; i < tokens.size(); ++i) {
    work[i] = rule.special_value;
    score[i] = h.classify(TokenSequence(work)) != full ? 1 : 0;
    work[i] = tokens[i];
  }
  return score;
}

}  // namespace

SubstitutionResult greedy_substitute(const TokenSequence& x, const BaseModel& h,
                                     const EnsembleConfig& cfg,
                                     const std::map<std::string, std::vector<std::string>>& synonyms,
                                     int max_edits, const AblationRule& rule,
                                     PredictionCache* cache, std::optional<Label> target) {
  if (max_edits < 0) throw ConfigError("max_edits must be >= 0");
  SubstitutionResult result;
  result.attacked = x;
  result.original_label = ensemble_label(x, h, cfg, rule, cache, 0);
  result.final_label = result.original_label;
  const auto goal_met = [&](Label y) {
    return target ? y == *target : y != result.original_label;
  };
  if (target && goal_met(result.original_label)) {
    result.success = true;
    result.vacuous = true;
    return result;
  }

  std::vector<std::string> tokens = x.tokens();
  std::vector<uint8_t> edited(tokens.size(), 0);
  const auto substitutable = [&](size_t i) {
    if (edited[i]) return false;
    auto it = synonyms.find(tokens[i]);
    return it != synonyms.end() && !it->second.empty();
  };
  bool any_coverage = false;
  for (size_t i = 0; i < tokens.size(); ++i) any_coverage = any_coverage || substitutable(i);
  if (!any_coverage || max_edits == 0) return result;  // failure

  for (int edit = 1; edit <= max_edits; ++edit) {
    const std::vector<int> saliency = loo_scores(tokens, h, rule);
    int chosen = -1;
    for (size_t i = 0; i < tokens.size(); ++i) {
      if (!substitutable(i)) continue;
      if (chosen < 0 || saliency[i] > saliency[static_cast<size_t>(chosen)]) {
        chosen = static_cast<int>(i);  // ties keep the leftmost candidate
      }
    }
    if (chosen < 0) break;  // ran out of substitutable words
    tokens[static_cast<size_t>(chosen)] = synonyms.at(tokens[static_cast<size_t>(chosen)]).front();
    edited[static_cast<size_t>(chosen)] = 1;
    result.positions.push_back(chosen);
    result.attacked = TokenSequence(tokens);
    result.final_label =
        ensemble_label(result.attacked, h, cfg, rule, cache, static_cast<uint64_t>(edit));
    if (goal_met(result.final_label)) {
      result.success = true;
      return result;
    }
  }
  return result;  // failure; positions record the edits that were tried
}

BigInt adversary_enumeration_count(int d, int k, int label_count, int T) {
  if (k < 1 || k > d) throw ConfigError("adversary requires 1 <= k <= d");
  if (T < 0 || T > d) throw ConfigError("adversary requires 0 <= T <= d");
  BigInt total = 0;
  for (int m = 0; m <= T; ++m) {
    const BigInt hit = binomial(d, k) - binomial(d - m, k);
    total += binomial(d, m) *
             boost::multiprecision::pow(BigInt(label_count), hit.convert_to<unsigned>());
  }
  return total;
}

namespace {

std::vector<std::vector<int>> all_groups_lex(int d, int k) {
  std::vector<std::vector<int>> groups;
  for_each_combination(d, k, [&](const std::vector<int>& combo) { groups.push_back(combo); });
  return groups;
}

std::vector<std::vector<int>> all_modified_sets(int d, int T) {
  std::vector<std::vector<int>> sets;
  sets.push_back({});  // the empty attack
  for (int m = 1; m <= T; ++m) {
    for_each_combination(d, m, [&](const std::vector<int>& combo) { sets.push_back(combo); });
  }
  return sets;
}

bool intersects(const std::vector<int>& group, const std::vector<int>& modified) {
  // both ascending; merge scan
  size_t a = 0;
  size_t b = 0;
  while (a < group.size() && b < modified.size()) {
    if (group[a] == modified[b]) return true;
    if (group[a] < modified[b]) {
      ++a;
    } else {
      ++b;
    }
  }
  return false;
}

}  // namespace

void for_each_group_attack(
    int d, int k, int label_count, int T, const std::vector<Label>& base_labels,
    unsigned long long cap,
    const std::function<void(const std::vector<int>&, const std::vector<Label>&)>& visit) {
  const auto groups = all_groups_lex(d, k);
  if (base_labels.size() != groups.size()) {
    throw ConfigError("base label table must cover all C(d,k) groups in lexicographic order");
  }
  if (adversary_enumeration_count(d, k, label_count, T) > cap) {
    throw EnumerationCapError("worst-case adversary enumeration exceeds the cap");
  }
  std::vector<Label> labels = base_labels;
  for (const auto& modified : all_modified_sets(d, T)) {
    std::vector<size_t> affected;
    for (size_t g = 0; g < groups.size(); ++g) {
      if (intersects(groups[g], modified)) affected.push_back(g);
    }
    if (affected.empty()) {
      visit(modified, labels);
      continue;
    }
    std::vector<int> digit(affected.size(), 1);
    for (size_t g : affected) labels[g] = 1;
    for (;;) {
      visit(modified, labels);
      size_t pos = 0;
      while (pos < digit.size()) {
        if (digit[pos] < label_count) {
          ++digit[pos];
          labels[affected[pos]] = digit[pos];
          break;
        }
        digit[pos] = 1;
        labels[affected[pos]] = 1;
        ++pos;
      }
      if (pos == digit.size()) break;
    }
    for (size_t g : affected) labels[g] = base_labels[g];  // restore for the next M
  }
}

AdversaryCheck check_certified_detection(const std::vector<Label>& base_labels, int d, int k,
                                         int label_count, Label predicted, int e, int T, int D,
                                         unsigned long long cap, int jobs) {
  if (e < 1 || e > d) throw ConfigError("soundness check requires 1 <= e <= d");
  if (D < 0) throw ConfigError("claimed detection size must be >= 0");
  const auto groups = all_groups_lex(d, k);
  if (base_labels.size() != groups.size()) {
    throw ConfigError("base label table must cover all C(d,k) groups in lexicographic order");
  }
  if (adversary_enumeration_count(d, k, label_count, T) > cap) {
    throw EnumerationCapError("worst-case adversary enumeration exceeds the cap");
  }

  std::vector<long> base_counts(static_cast<size_t>(label_count), 0);
  std::vector<long> base_succ(static_cast<size_t>(label_count) * static_cast<size_t>(d), 0);
  for (size_t g = 0; g < groups.size(); ++g) {
    const Label y = base_labels[g];
    if (y < 1 || y > label_count) throw ConfigError("base label out of range");
    ++base_counts[static_cast<size_t>(y - 1)];
    for (int i : groups[g]) ++base_succ[static_cast<size_t>(y - 1) * d + static_cast<size_t>(i)];
  }

  const auto modified_sets = all_modified_sets(d, T);
  std::atomic<unsigned long long> checked{0};
  std::atomic<unsigned long long> flips{0};
  std::atomic<unsigned long long> violations{0};
  std::mutex witness_mutex;
  std::string first_violation;

  parallel_for(static_cast<long>(modified_sets.size()), jobs, [&](long mi) {
    const auto& modified = modified_sets[static_cast<size_t>(mi)];
    std::vector<size_t> affected;
    for (size_t g = 0; g < groups.size(); ++g) {
      if (intersects(groups[g], modified)) affected.push_back(g);
    }
    std::vector<long> counts = base_counts;
    std::vector<long> succ = base_succ;
    std::vector<Label> current(affected.size());
    for (size_t a = 0; a < affected.size(); ++a) current[a] = base_labels[affected[a]];

    unsigned long long local_checked = 0;
    unsigned long long local_flips = 0;
    unsigned long long local_violations = 0;

    const auto relabel = [&](size_t a, Label to) {
      const Label from = current[a];
      if (from == to) return;
      const size_t g = affected[a];
      --counts[static_cast<size_t>(from - 1)];
      ++counts[static_cast<size_t>(to - 1)];
      for (int i : groups[g]) {
        --succ[static_cast<size_t>(from - 1) * d + static_cast<size_t>(i)];
        ++succ[static_cast<size_t>(to - 1) * d + static_cast<size_t>(i)];
      }
      current[a] = to;
    };

    std::vector<uint8_t> in_top(static_cast<size_t>(d), 0);
    const auto evaluate = [&] {
      ++local_checked;
      size_t best = 0;
      for (size_t c = 1; c < counts.size(); ++c) {
        if (counts[c] > counts[best]) best = c;
      }
      const Label outcome = static_cast<Label>(best + 1);
      if (outcome == predicted) return;
      ++local_flips;
      if (D == 0) return;
      // top-e of the attacked input's importance order for the new label;
      // exact denominators are uniform, so integer success counts rank it
      const long* row = succ.data() + static_cast<size_t>(outcome - 1) * d;
      std::fill(in_top.begin(), in_top.end(), 0);
      for (int slot = 0; slot < e; ++slot) {
        int pick = -1;
        for (int i = 0; i < d; ++i) {
          if (in_top[static_cast<size_t>(i)]) continue;
          if (pick < 0 || row[i] > row[pick]) pick = i;
        }
        in_top[static_cast<size_t>(pick)] = 1;
      }
      int overlap = 0;
      for (int i : modified) overlap += in_top[static_cast<size_t>(i)];
      if (overlap < D) {
        ++local_violations;
        std::lock_guard lock(witness_mutex);
        if (first_violation.empty()) {
          std::string m_str;
          for (int i : modified) m_str += std::to_string(i) + " ";
          first_violation = "M = { " + m_str + "} flips to label " +
                            std::to_string(outcome) + " with top-" + std::to_string(e) +
                            " overlap " + std::to_string(overlap) + " < D = " + std::to_string(D);
        }
      }
    };

    if (affected.empty()) {
      evaluate();
    } else {
      std::vector<int> digit(affected.size(), 1);
      for (size_t a = 0; a < affected.size(); ++a) relabel(a, 1);
      for (;;) {
        evaluate();
        size_t pos = 0;
        while (pos < digit.size()) {
          if (digit[pos] < label_count) {
            ++digit[pos];
            relabel(pos, static_cast<Label>(digit[pos]));
            break;
          }
          digit[pos] = 1;
          relabel(pos, 1);
          ++pos;
        }
        if (pos == digit.size()) break;
      }
    }
    checked.fetch_add(local_checked, std::memory_order_relaxed);
    flips.fetch_add(local_flips, std::memory_order_relaxed);
    violations.fetch_add(local_violations, std::memory_order_relaxed);
  });

  AdversaryCheck out;
  out.attacks_checked = checked.load();
  out.flips = flips.load();
  out.violations = violations.load();
  out.first_violation = first_violation;
  return out;
}

std::map<std::string, std::vector<std::string>> load_synonym_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read synonym map: " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ConfigError("synonym map must be a JSON object of token -> [substitutes]");
  }
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [token, subs] : j.items()) {
    if (!subs.is_array()) throw ConfigError("synonyms for \"" + token + "\" must be an array");
    out[token] = subs.get<std::vector<std::string>>();
  }
  return out;
}

}  // namespace subshap
