#include "subshap/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>

#include "subshap/attacks.hpp"
#include "subshap/attribution.hpp"
#include "subshap/cache.hpp"
#include "subshap/certify.hpp"
#include "subshap/core.hpp"
#include "subshap/dataset.hpp"
#include "subshap/ensemble.hpp"
#include "subshap/metrics.hpp"
#include "subshap/parallel.hpp"
#include "subshap/rng.hpp"
#include "subshap/shapley.hpp"
#include "subshap/synthetic.hpp"

namespace fs = std::filesystem;

namespace subshap {
namespace {

constexpr const char* kVersion = "0.1.0";

struct Opts {
  std::string config_path;
  std::string dataset_path;
  std::string model_spec;
  std::optional<double> rho;
  std::optional<int> group_size;
  long samples = 1000;
  std::optional<double> tau;
  double beta = 0.01;
  std::vector<int> e_grid{5};
  std::vector<int> T_grid{1};
  uint64_t seed = 0;
  std::string out_root = "runs";
  int jobs = 0;  // 0 = all cores
  bool exact = false;
  bool exact_bounds = false;
  bool use_cache = false;

  std::optional<int> target;

  std::string attack_type;
  std::vector<std::string> triggers{"cf"};
  int trigger_count = 3;
  std::string synonyms_path;
  int max_edits = 3;

  std::string transcripts_path;
  std::string filter = "none";
  bool mask_deletion = false;
  bool no_certify = false;
  int compare_e = 5;

  int sweep_d = 30;
  std::vector<double> delta_grid{0.3, 0.5, 0.7};
  std::vector<double> rho_grid{0.6, 0.7, 0.8, 0.9};
  std::vector<long> N_grid{1000, 10000};
  std::vector<double> beta_grid{0.01};
  int replicates = 10;
};

using Applier = std::function<void(const nlohmann::json&)>;

template <typename T>
void assign_from_json(const nlohmann::json& v, T& target) {
  target = v.get<T>();
}

template <typename T>
void assign_from_json(const nlohmann::json& v, std::optional<T>& target) {
  if (v.is_null()) {
    target.reset();
  } else {
    target = v.get<T>();
  }
}

// Config-file fallback for one option: applies the JSON value only when the
// flag was not given on the command line, so flags always win.
template <typename T>
Applier merge(CLI::App* cmd, std::string flag, std::string key, T* target) {
  return [cmd, flag = std::move(flag), key = std::move(key), target](const nlohmann::json& j) {
    if (j.contains(key) && cmd->count(flag) == 0) assign_from_json(j.at(key), *target);
  };
}

nlohmann::json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("invalid JSON in " + path);
  return j;
}

std::shared_ptr<BaseModel> resolve_model(const std::string& spec) {
  if (spec.empty()) throw ConfigError("a model is required (--model <file-or-inline-json>)");
  if (fs::exists(spec)) return make_model(parse_json_file(spec));
  nlohmann::json inline_spec = nlohmann::json::parse(spec, nullptr, false);
  if (inline_spec.is_discarded()) {
    throw ConfigError("--model is neither a readable file nor valid inline JSON: " + spec);
  }
  return make_model(inline_spec);
}

std::vector<AttackTranscript> load_transcripts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read transcripts: " + path);
  std::vector<AttackTranscript> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": invalid JSON");
    }
    out.push_back(transcript_from_json(j));
  }
  return out;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out.good()) throw IoError("short write to " + path.string());
}

// Inputs loaded and validated before any output path is touched, so a bad
// invocation leaves no partial artifacts behind.
struct Workspace {
  std::vector<DatasetRecord> dataset;
  std::shared_ptr<BaseModel> model;
  EnsembleConfig cfg;
  AblationRule rule;
  fs::path run_dir;
  std::unique_ptr<PredictionCache> cache;
  fs::path cache_path;
  int jobs = 1;
  std::vector<std::string> outputs;
};

Workspace prepare(const Opts& o, const std::string& command, bool need_dataset,
                  bool need_model) {
  Workspace w;
  if (need_dataset) {
    if (o.dataset_path.empty()) throw ConfigError("a dataset is required (--dataset <jsonl>)");
    w.dataset = load_jsonl_dataset(o.dataset_path);
  }
  if (need_model) {
    w.model = resolve_model(o.model_spec);
    w.cfg.label_count = w.model->label_count();
  }
  w.cfg.rho = o.rho;
  w.cfg.group_size = o.group_size;
  if (!w.cfg.rho && !w.cfg.group_size) w.cfg.rho = 0.8;
  w.cfg.sample_count = o.samples;
  w.cfg.tau = o.tau;
  w.cfg.seed = o.seed;
  if (need_model) w.cfg.validate();
  w.jobs = o.jobs > 0 ? o.jobs : default_jobs();

  w.run_dir = fs::path(o.out_root) / (command + "-seed" + std::to_string(o.seed));
  fs::create_directories(w.run_dir);
  if (o.use_cache) {
    const char* env = std::getenv("SUBSHAP_CACHE_DIR");
    const fs::path cache_dir = (env != nullptr && *env != '\0') ? fs::path(env) : w.run_dir;
    fs::create_directories(cache_dir);
    w.cache_path = cache_dir / "cache.jsonl";
    w.cache = std::make_unique<PredictionCache>();
    if (fs::exists(w.cache_path)) w.cache->load(w.cache_path.string());
  }
  return w;
}

nlohmann::ordered_json echo_options(const Opts& o, int label_count) {
  nlohmann::ordered_json j;
  j["dataset"] = o.dataset_path;
  j["model"] = o.model_spec;
  if (o.rho) {
    j["rho"] = *o.rho;
  } else if (!o.group_size) {
    j["rho"] = 0.8;
  } else {
    j["rho"] = nullptr;
  }
  if (o.group_size) {
    j["k"] = *o.group_size;
  } else {
    j["k"] = nullptr;
  }
  j["samples"] = o.samples;
  j["labels"] = label_count;
  if (o.tau) {
    j["tau"] = *o.tau;
  } else {
    j["tau"] = nullptr;
  }
  j["beta"] = o.beta;
  j["e"] = o.e_grid;
  j["T"] = o.T_grid;
  j["seed"] = o.seed;
  j["out"] = o.out_root;
  j["jobs"] = o.jobs;
  j["exact"] = o.exact;
  j["exact_bounds"] = o.exact_bounds;
  j["cache"] = o.use_cache;
  return j;
}

void finalize(Workspace& w, const Opts& o, const std::string& command,
              nlohmann::ordered_json extras = {}) {
  if (w.cache) {
    w.cache->save(w.cache_path.string());
  }
  nlohmann::ordered_json manifest;
  manifest["command"] = command;
  manifest["version"] = kVersion;
  manifest["seed"] = o.seed;
  manifest["options"] = echo_options(o, w.model ? w.model->label_count() : 0);
  if (!extras.empty()) manifest["extras"] = std::move(extras);
  manifest["outputs"] = w.outputs;
  write_text(w.run_dir / "manifest.json", manifest.dump(2) + "\n");
}

Label ensemble_label_of(const TokenSequence& x, const BaseModel& h, const EnsembleConfig& cfg,
                        const AblationRule& rule, PredictionCache* cache) {
  const GroupSampleSet groups = sample_groups(x.size(), cfg);
  const EnsembleRun run = ensemble_counts(x, h, groups, rule, cache);
  return ensemble_predict(run.counts, cfg.tau);
}

int run_predict(const Opts& o) {
  Workspace w = prepare(o, "predict", true, true);
  std::vector<std::string> lines(w.dataset.size());
  parallel_for(static_cast<long>(w.dataset.size()), w.jobs, [&](long s) {
    const DatasetRecord& rec = w.dataset[static_cast<size_t>(s)];
    const int d = rec.tokens.size();
    const int k = w.cfg.group_size_for(d);
    const GroupSampleSet groups =
        o.exact ? enumerate_groups(d, k)
                : sample_groups(d, w.cfg.with_seed(stream_seed(w.cfg.seed, fnv1a64(rec.id))));
    const EnsembleRun run = ensemble_counts(rec.tokens, *w.model, groups, w.rule, w.cache.get());
    const Label y = ensemble_predict(run.counts, w.cfg.tau);
    nlohmann::ordered_json j;
    j["id"] = rec.id;
    j["label"] = y;
    j["counts"] = run.counts.counts;
    std::vector<double> probability(run.counts.counts.size());
    for (size_t c = 0; c < probability.size(); ++c) {
      probability[c] = static_cast<double>(run.counts.counts[c]) / run.counts.total;
    }
    j["probability"] = probability;
    lines[static_cast<size_t>(s)] = j.dump();
  });
  std::string body;
  for (const auto& line : lines) body += line + "\n";
  write_text(w.run_dir / "predictions.jsonl", body);
  w.outputs.push_back("predictions.jsonl");
  finalize(w, o, "predict");
  return 0;
}

int run_attribute(const Opts& o) {
  Workspace w = prepare(o, "attribute", true, true);
  if (o.target && (*o.target < 1 || *o.target > w.model->label_count())) {
    throw ConfigError("--target outside 1.." + std::to_string(w.model->label_count()));
  }
  std::vector<std::string> lines(w.dataset.size());
  parallel_for(static_cast<long>(w.dataset.size()), w.jobs, [&](long s) {
    const DatasetRecord& rec = w.dataset[static_cast<size_t>(s)];
    const int d = rec.tokens.size();
    const int k = w.cfg.group_size_for(d);
    const GroupSampleSet groups =
        o.exact ? enumerate_groups(d, k)
                : sample_groups(d, w.cfg.with_seed(stream_seed(w.cfg.seed, fnv1a64(rec.id))));
    const EnsembleRun run = ensemble_counts(rec.tokens, *w.model, groups, w.rule, w.cache.get());
    const Label predicted = ensemble_predict(run.counts, w.cfg.tau);
    const Label target = o.target ? static_cast<Label>(*o.target) : predicted;
    AttributionResult attr = attribute_mc(groups, run.group_labels, w.model->label_count(), target);
    if (o.exact) attr.mode = AttributionMode::kExact;
    nlohmann::ordered_json j;
    j["id"] = rec.id;
    j["predicted"] = predicted;
    j["attribution"] = to_json(attr);
    lines[static_cast<size_t>(s)] = j.dump();
  });
  std::string body;
  for (const auto& line : lines) body += line + "\n";
  write_text(w.run_dir / "attributions.jsonl", body);
  w.outputs.push_back("attributions.jsonl");
  finalize(w, o, "attribute");
  return 0;
}

int run_certify(const Opts& o) {
  Workspace w = prepare(o, "certify", true, true);
  const DetectionCurve curve =
      detection_rate_curve(w.dataset, *w.model, w.cfg, o.beta, o.e_grid, o.T_grid, w.rule,
                           w.cache.get(), w.jobs, o.exact_bounds);
  std::ostringstream rows;
  rows << "sample_id,e,T,D,rate,binding_branch\n";
  for (const auto& row : curve.rows) {
    rows << row.sample_id << ',' << row.e << ',' << row.T << ',' << row.detection_size << ','
         << format_double(row.rate) << ',' << row.binding_branch << '\n';
  }
  write_text(w.run_dir / "detection.csv", rows.str());
  w.outputs.push_back("detection.csv");

  std::ostringstream means;
  means << "e,T,mean_rate\n";
  for (const auto& cell : curve.means) {
    means << cell.e << ',' << cell.T << ',' << format_double(cell.mean_rate) << '\n';
  }
  write_text(w.run_dir / "means.csv", means.str());
  w.outputs.push_back("means.csv");
  finalize(w, o, "certify");
  return 0;
}

int run_attack(const Opts& o) {
  if (o.attack_type != "backdoor-insert" && o.attack_type != "greedy-substitute") {
    throw ConfigError("--type must be backdoor-insert or greedy-substitute");
  }
  std::map<std::string, std::vector<std::string>> synonyms;
  if (o.attack_type == "greedy-substitute") {
    if (o.synonyms_path.empty()) throw ConfigError("greedy-substitute needs --synonyms <json>");
    synonyms = load_synonym_map(o.synonyms_path);
  }
  Workspace w = prepare(o, "attack", true, true);

  std::vector<AttackTranscript> transcripts(w.dataset.size());
  std::vector<DatasetRecord> attacked(w.dataset.size());
  parallel_for(static_cast<long>(w.dataset.size()), w.jobs, [&](long s) {
    const DatasetRecord& rec = w.dataset[static_cast<size_t>(s)];
    const uint64_t sample_seed = stream_seed(w.cfg.seed, fnv1a64(rec.id));
    const EnsembleConfig scfg = w.cfg.with_seed(sample_seed);
    AttackTranscript t;
    t.id = rec.id;
    t.type = o.attack_type;
    t.true_label = rec.label;
    DatasetRecord hit = rec;
    if (o.attack_type == "backdoor-insert") {
      const Label target = o.target ? static_cast<Label>(*o.target) : 2;
      const TriggerInsertion ins = insert_triggers(rec.tokens, o.triggers, o.trigger_count,
                                                   sample_seed);
      t.original_label = ensemble_label_of(rec.tokens, *w.model, scfg, w.rule, w.cache.get());
      t.final_label = ensemble_label_of(ins.attacked, *w.model, scfg, w.rule, w.cache.get());
      t.target_label = target;
      t.success = t.final_label == target;
      t.positions = ins.positions;
      t.attacked_tokens = ins.attacked.tokens();
      hit.tokens = ins.attacked;
    } else {
      const std::optional<Label> target =
          o.target ? std::optional<Label>(static_cast<Label>(*o.target)) : std::nullopt;
      const SubstitutionResult res = greedy_substitute(rec.tokens, *w.model, scfg, synonyms,
                                                       o.max_edits, w.rule, w.cache.get(), target);
      t.original_label = res.original_label;
      t.final_label = res.final_label;
      t.target_label = target;
      t.success = res.success;
      t.vacuous = res.vacuous;
      t.positions = res.positions;
      t.attacked_tokens = res.attacked.tokens();
      hit.tokens = res.attacked;
    }
    transcripts[static_cast<size_t>(s)] = std::move(t);
    attacked[static_cast<size_t>(s)] = std::move(hit);
  });

  std::string body;
  for (const auto& t : transcripts) body += to_json(t).dump() + "\n";
  write_text(w.run_dir / "transcripts.jsonl", body);
  w.outputs.push_back("transcripts.jsonl");
  save_jsonl_dataset(attacked, (w.run_dir / "attacked.jsonl").string());
  w.outputs.push_back("attacked.jsonl");

  nlohmann::ordered_json extras;
  extras["type"] = o.attack_type;
  extras["triggers"] = o.triggers;
  extras["count"] = o.trigger_count;
  if (o.target) {
    extras["target"] = *o.target;
  } else {
    extras["target"] = nullptr;
  }
  extras["synonyms"] = o.synonyms_path;
  extras["max_edits"] = o.max_edits;
  finalize(w, o, "attack", std::move(extras));
  return 0;
}

int run_evaluate(const Opts& o) {
  std::vector<AttackTranscript> transcripts;
  if (!o.transcripts_path.empty()) transcripts = load_transcripts(o.transcripts_path);
  if (o.filter != "none" && o.filter != "backdoor" && o.filter != "adversarial") {
    throw ConfigError("--filter must be none, backdoor, or adversarial");
  }
  if (o.filter != "none" && transcripts.empty()) {
    throw ConfigError("--filter needs --transcripts");
  }
  Workspace w = prepare(o, "evaluate", true, true);

  std::vector<DatasetRecord> population = w.dataset;
  if (o.filter != "none") {
    const AttackFilter mode =
        o.filter == "backdoor" ? AttackFilter::kBackdoor : AttackFilter::kAdversarial;
    std::vector<DatasetRecord> kept;
    for (size_t idx : filter_dstar(w.dataset, transcripts, mode)) {
      kept.push_back(w.dataset[idx]);
    }
    population = std::move(kept);
  }

  EvaluationOptions eo;
  eo.ensemble = w.cfg;
  eo.beta = o.beta;
  eo.e_grid = o.e_grid;
  eo.T_grid = o.T_grid;
  eo.certify = !o.no_certify;
  eo.mask_instead_of_delete = o.mask_deletion;
  eo.jobs = w.jobs;
  const EvaluationReport report =
      evaluate_dataset(population, *w.model, eo, transcripts.empty() ? nullptr : &transcripts,
                       w.rule, w.cache.get());

  write_text(w.run_dir / "report.json", report.to_json().dump(2) + "\n");
  w.outputs.push_back("report.json");
  write_text(w.run_dir / "report.csv", report.to_csv());
  w.outputs.push_back("report.csv");

  nlohmann::ordered_json extras;
  extras["transcripts"] = o.transcripts_path;
  extras["filter"] = o.filter;
  extras["mask"] = o.mask_deletion;
  extras["certify"] = !o.no_certify;
  extras["dataset_size"] = w.dataset.size();
  extras["evaluated_size"] = population.size();
  finalize(w, o, "evaluate", std::move(extras));
  return 0;
}

int run_sweep(const Opts& o) {
  if (o.sweep_d < 1) throw ConfigError("--d must be >= 1");
  if (o.delta_grid.empty() || o.rho_grid.empty() || o.N_grid.empty() || o.beta_grid.empty() ||
      o.e_grid.empty() || o.T_grid.empty()) {
    throw ConfigError("sweep grids must be non-empty");
  }
  Workspace w = prepare(o, "sweep", false, false);

  struct Point {
    SyntheticSweepPoint pt;
    double rate = 0.0;
  };
  std::vector<Point> points;
  for (double delta : o.delta_grid) {
    for (double rho : o.rho_grid) {
      for (long N : o.N_grid) {
        for (double beta : o.beta_grid) {
          for (int e : o.e_grid) {
            for (int T : o.T_grid) {
              Point p;
              p.pt = SyntheticSweepPoint{o.sweep_d, delta,         rho, N, beta, e, T,
                                         o.replicates, 0};
              points.push_back(p);
            }
          }
        }
      }
    }
  }
  for (size_t i = 0; i < points.size(); ++i) {
    points[i].pt.seed = stream_seed(o.seed, static_cast<uint64_t>(i));
  }
  parallel_for(static_cast<long>(points.size()), w.jobs, [&](long i) {
    points[static_cast<size_t>(i)].rate = synthetic_certified_rate(points[static_cast<size_t>(i)].pt);
  });

  std::ostringstream csv;
  csv << "d,delta,rho,N,beta,e,T,rate\n";
  for (const auto& p : points) {
    csv << p.pt.d << ',' << format_double(p.pt.delta) << ',' << format_double(p.pt.rho) << ','
        << p.pt.N << ',' << format_double(p.pt.beta) << ',' << p.pt.e << ',' << p.pt.T << ','
        << format_double(p.rate) << '\n';
  }
  write_text(w.run_dir / "sweep.csv", csv.str());
  w.outputs.push_back("sweep.csv");

  nlohmann::ordered_json extras;
  extras["d"] = o.sweep_d;
  extras["delta"] = o.delta_grid;
  extras["rho_grid"] = o.rho_grid;
  extras["N_grid"] = o.N_grid;
  extras["beta_grid"] = o.beta_grid;
  extras["replicates"] = o.replicates;
  finalize(w, o, "sweep", std::move(extras));
  return 0;
}

int run_compare(const Opts& o) {
  if (o.transcripts_path.empty()) {
    throw ConfigError("compare needs --transcripts for the ground-truth positions");
  }
  const std::vector<AttackTranscript> transcripts = load_transcripts(o.transcripts_path);
  std::unordered_map<std::string, const AttackTranscript*> truth;
  for (const auto& t : transcripts) truth.emplace(t.id, &t);
  Workspace w = prepare(o, "compare", true, true);
  if (o.compare_e < 1) throw ConfigError("--e must be >= 1");

  struct Row {
    std::string id;
    int d = 0;
    Label predicted = 0;
    int e = 0;
    bool scored = false;
    double ensemble_recall = 0.0;
    double baseline_recall = 0.0;
    long long ensemble_queries = 0;
    long long baseline_queries = 0;
    long permutations = 0;
  };
  std::vector<Row> rows(w.dataset.size());
  parallel_for(static_cast<long>(w.dataset.size()), w.jobs, [&](long s) {
    const DatasetRecord& rec = w.dataset[static_cast<size_t>(s)];
    const int d = rec.tokens.size();
    const uint64_t sample_seed = stream_seed(w.cfg.seed, fnv1a64(rec.id));
    const EnsembleConfig scfg = w.cfg.with_seed(sample_seed);
    const GroupSampleSet groups = sample_groups(d, scfg);
    const EnsembleRun run = ensemble_counts(rec.tokens, *w.model, groups, w.rule, w.cache.get());
    const Label predicted = ensemble_predict(run.counts, scfg.tau);
    const AttributionResult attr =
        attribute_mc(groups, run.group_labels, w.model->label_count(), predicted);
    const int e_eff = std::min(o.compare_e, d);
    const std::vector<int> ens_top = top_e(attr, e_eff);

    // Budget-matched comparison: the permutation estimator may spend as many
    // base-model queries as the ensemble itself used.
    BaselineValueFunction vf(rec.tokens, *w.model, predicted, w.rule);
    const long perms = permutations_for_budget(scfg.sample_count, d);
    const ShapleyResult est =
        shapley_permutation_estimate(vf, perms, stream_seed(sample_seed, fnv1a64("baseline")));
    const std::vector<int> base_top = top_e(est.values, e_eff);

    Row row;
    row.id = rec.id;
    row.d = d;
    row.predicted = predicted;
    row.e = e_eff;
    row.ensemble_queries = scfg.sample_count;
    row.baseline_queries = vf.queries_used();
    row.permutations = perms;
    if (auto it = truth.find(rec.id); it != truth.end() && !it->second->positions.empty()) {
      row.scored = true;
      row.ensemble_recall = keyword_prf(ens_top, it->second->positions).recall;
      row.baseline_recall = keyword_prf(base_top, it->second->positions).recall;
    }
    rows[static_cast<size_t>(s)] = std::move(row);
  });

  std::ostringstream csv;
  csv << "sample_id,d,predicted,e,scored,ensemble_recall,baseline_recall,"
         "ensemble_queries,baseline_queries,permutations\n";
  long scored = 0;
  double ens_sum = 0.0;
  double base_sum = 0.0;
  for (const auto& r : rows) {
    csv << r.id << ',' << r.d << ',' << r.predicted << ',' << r.e << ',' << (r.scored ? 1 : 0)
        << ',' << format_double(r.ensemble_recall) << ',' << format_double(r.baseline_recall)
        << ',' << r.ensemble_queries << ',' << r.baseline_queries << ',' << r.permutations
        << '\n';
    if (r.scored) {
      ++scored;
      ens_sum += r.ensemble_recall;
      base_sum += r.baseline_recall;
    }
  }
  write_text(w.run_dir / "compare.csv", csv.str());
  w.outputs.push_back("compare.csv");

  nlohmann::ordered_json agg;
  agg["samples"] = rows.size();
  agg["scored"] = scored;
  agg["mean_ensemble_recall"] = scored > 0 ? ens_sum / scored : 0.0;
  agg["mean_baseline_recall"] = scored > 0 ? base_sum / scored : 0.0;
  write_text(w.run_dir / "aggregate.json", agg.dump(2) + "\n");
  w.outputs.push_back("aggregate.json");

  nlohmann::ordered_json extras;
  extras["transcripts"] = o.transcripts_path;
  extras["e"] = o.compare_e;
  extras["budget"] = o.samples;
  finalize(w, o, "compare", std::move(extras));
  return 0;
}

struct Command {
  CLI::App* cmd = nullptr;
  Opts* opts = nullptr;
  std::vector<Applier> appliers;
  std::function<int(const Opts&)> runner;
};

void add_common(CLI::App* cmd, Opts& o, Command& c, bool with_dataset = true) {
  cmd->add_option("--config", o.config_path, "JSON config file; flags take precedence");
  if (with_dataset) {
    cmd->add_option("--dataset", o.dataset_path, "input dataset (JSONL)");
    c.appliers.push_back(merge(cmd, "--dataset", "dataset", &o.dataset_path));
    cmd->add_option("--model", o.model_spec, "model spec: JSON file path or inline JSON");
    c.appliers.push_back(merge(cmd, "--model", "model", &o.model_spec));
  }
  cmd->add_option("--rho", o.rho, "dropping rate in [0,1); k = max(1, round((1-rho)*d))");
  c.appliers.push_back(merge(cmd, "--rho", "rho", &o.rho));
  cmd->add_option("--k", o.group_size, "explicit group size (mutually exclusive with --rho)");
  c.appliers.push_back(merge(cmd, "--k", "k", &o.group_size));
  cmd->add_option("-N,--samples", o.samples, "groups sampled per input")
      ->capture_default_str();
  c.appliers.push_back(merge(cmd, "--samples", "samples", &o.samples));
  cmd->add_option("--tau", o.tau, "binary decision threshold: label 2 iff n2/N > tau");
  c.appliers.push_back(merge(cmd, "--tau", "tau", &o.tau));
  cmd->add_option("--seed", o.seed, "master RNG seed")->capture_default_str();
  c.appliers.push_back(merge(cmd, "--seed", "seed", &o.seed));
  cmd->add_option("--out", o.out_root, "output root; run dir is <out>/<command>-seed<seed>")
      ->capture_default_str();
  c.appliers.push_back(merge(cmd, "--out", "out", &o.out_root));
  cmd->add_option("--jobs", o.jobs, "worker threads (0 = all cores)")->capture_default_str();
  c.appliers.push_back(merge(cmd, "--jobs", "jobs", &o.jobs));
  if (with_dataset) {
    cmd->add_flag("--cache", o.use_cache,
                  "memoize model queries in <run-dir>/cache.jsonl (SUBSHAP_CACHE_DIR overrides "
                  "the directory)");
    c.appliers.push_back(merge(cmd, "--cache", "cache", &o.use_cache));
  }
}

void add_grids(CLI::App* cmd, Opts& o, Command& c) {
  cmd->add_option("--e", o.e_grid, "explanation sizes (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  c.appliers.push_back(merge(cmd, "--e", "e", &o.e_grid));
  cmd->add_option("--T", o.T_grid, "attacker budgets (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  c.appliers.push_back(merge(cmd, "--T", "T", &o.T_grid));
}

void add_beta(CLI::App* cmd, Opts& o, Command& c) {
  cmd->add_option("--beta", o.beta, "confidence budget; bounds hold with prob 1-beta")
      ->capture_default_str();
  c.appliers.push_back(merge(cmd, "--beta", "beta", &o.beta));
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"robust feature attribution for random-subspace ensembles"};
  app.require_subcommand(1);

  Opts predict_o, attribute_o, certify_o, attack_o, evaluate_o, sweep_o, compare_o;
  certify_o.samples = 10000;  // certification default budget
  std::vector<Command> commands;

  {
    Command c;
    c.cmd = app.add_subcommand("predict", "ensemble label and vote counts per sample");
    c.opts = &predict_o;
    add_common(c.cmd, predict_o, c);
    c.cmd->add_flag("--exact", predict_o.exact, "enumerate all groups instead of sampling");
    c.appliers.push_back(merge(c.cmd, "--exact", "exact", &predict_o.exact));
    c.runner = run_predict;
    commands.push_back(std::move(c));
  }
  {
    Command c;
    c.cmd = app.add_subcommand("attribute", "importance scores per sample");
    c.opts = &attribute_o;
    add_common(c.cmd, attribute_o, c);
    c.cmd->add_option("--target", attribute_o.target,
                      "label to explain (default: the predicted label)");
    c.appliers.push_back(merge(c.cmd, "--target", "target", &attribute_o.target));
    c.cmd->add_flag("--exact", attribute_o.exact, "enumerate all groups instead of sampling");
    c.appliers.push_back(merge(c.cmd, "--exact", "exact", &attribute_o.exact));
    c.runner = run_attribute;
    commands.push_back(std::move(c));
  }
  {
    Command c;
    c.cmd = app.add_subcommand("certify", "certified detection sizes over an (e, T) grid");
    c.opts = &certify_o;
    add_common(c.cmd, certify_o, c);
    add_grids(c.cmd, certify_o, c);
    add_beta(c.cmd, certify_o, c);
    c.cmd->add_flag("--exact-bounds", certify_o.exact_bounds,
                    "certify on enumerated probabilities instead of confidence bounds");
    c.appliers.push_back(merge(c.cmd, "--exact-bounds", "exact-bounds", &certify_o.exact_bounds));
    c.runner = run_certify;
    commands.push_back(std::move(c));
  }
  {
    Command c;
    c.cmd = app.add_subcommand("attack", "generate attacked inputs and transcripts");
    c.opts = &attack_o;
    add_common(c.cmd, attack_o, c);
    c.cmd->add_option("--type", attack_o.attack_type,
                      "backdoor-insert or greedy-substitute");
    c.appliers.push_back(merge(c.cmd, "--type", "type", &attack_o.attack_type));
    c.cmd->add_option("--triggers", attack_o.triggers, "trigger tokens (comma separated)")
        ->delimiter(',')
        ->capture_default_str();
    c.appliers.push_back(merge(c.cmd, "--triggers", "triggers", &attack_o.triggers));
    c.cmd->add_option("--count", attack_o.trigger_count, "triggers to insert")
        ->capture_default_str();
    c.appliers.push_back(merge(c.cmd, "--count", "count", &attack_o.trigger_count));
    c.cmd->add_option("--target", attack_o.target,
                      "attack target label (insertion default 2; substitution default: any flip)");
    c.appliers.push_back(merge(c.cmd, "--target", "target", &attack_o.target));
    c.cmd->add_option("--synonyms", attack_o.synonyms_path, "synonym map JSON");
    c.appliers.push_back(merge(c.cmd, "--synonyms", "synonyms", &attack_o.synonyms_path));
    c.cmd->add_option("--max-edits", attack_o.max_edits, "substitution budget")
        ->capture_default_str();
    c.appliers.push_back(merge(c.cmd, "--max-edits", "max-edits", &attack_o.max_edits));
    c.runner = run_attack;
    commands.push_back(std::move(c));
  }
  {
    Command c;
    c.cmd = app.add_subcommand("evaluate", "faithfulness, precision/recall, certified rates");
    c.opts = &evaluate_o;
    add_common(c.cmd, evaluate_o, c);
    add_grids(c.cmd, evaluate_o, c);
    add_beta(c.cmd, evaluate_o, c);
    c.cmd->add_option("--transcripts", evaluate_o.transcripts_path,
                      "attack transcripts (ground-truth positions)");
    c.appliers.push_back(merge(c.cmd, "--transcripts", "transcripts", &evaluate_o.transcripts_path));
    c.cmd->add_option("--filter", evaluate_o.filter,
                      "population rule: none, backdoor, or adversarial")
        ->capture_default_str();
    c.appliers.push_back(merge(c.cmd, "--filter", "filter", &evaluate_o.filter));
    c.cmd->add_flag("--mask", evaluate_o.mask_deletion,
                    "mask deleted tokens in place instead of shortening");
    c.appliers.push_back(merge(c.cmd, "--mask", "mask", &evaluate_o.mask_deletion));
    c.cmd->add_flag("--no-certify", evaluate_o.no_certify, "skip the detection certificate");
    c.appliers.push_back(merge(c.cmd, "--no-certify", "no-certify", &evaluate_o.no_certify));
    c.runner = run_evaluate;
    commands.push_back(std::move(c));
  }
  {
    Command c;
    c.cmd = app.add_subcommand("sweep", "synthetic certified-rate grid over (delta, rho, N, beta, e, T)");
    c.opts = &sweep_o;
    add_common(c.cmd, sweep_o, c, false);
    add_grids(c.cmd, sweep_o, c);
    c.cmd->add_option("--d", sweep_o.sweep_d, "synthetic feature count")->capture_default_str();
    c.appliers.push_back(merge(c.cmd, "--d", "d", &sweep_o.sweep_d));
    c.cmd->add_option("--delta", sweep_o.delta_grid, "true probability gaps (comma separated)")
        ->delimiter(',')
        ->capture_default_str();
    c.appliers.push_back(merge(c.cmd, "--delta", "delta", &sweep_o.delta_grid));
    c.cmd->add_option("--rho-grid", sweep_o.rho_grid, "dropping rates (comma separated)")
        ->delimiter(',')
        ->capture_default_str();
    c.appliers.push_back(merge(c.cmd, "--rho-grid", "rho-grid", &sweep_o.rho_grid));
    c.cmd->add_option("--N-grid", sweep_o.N_grid, "sample counts (comma separated)")
        ->delimiter(',')
        ->capture_default_str();
    c.appliers.push_back(merge(c.cmd, "--N-grid", "N-grid", &sweep_o.N_grid));
    c.cmd->add_option("--beta-grid", sweep_o.beta_grid, "confidence budgets (comma separated)")
        ->delimiter(',')
        ->capture_default_str();
    c.appliers.push_back(merge(c.cmd, "--beta-grid", "beta-grid", &sweep_o.beta_grid));
    c.cmd->add_option("--replicates", sweep_o.replicates, "replicates per grid point")
        ->capture_default_str();
    c.appliers.push_back(merge(c.cmd, "--replicates", "replicates", &sweep_o.replicates));
    c.runner = run_sweep;
    commands.push_back(std::move(c));
  }
  {
    Command c;
    c.cmd = app.add_subcommand("compare",
                               "top-e recall: ensemble attribution vs budget-matched Shapley");
    c.opts = &compare_o;
    add_common(c.cmd, compare_o, c);
    c.cmd->add_option("--transcripts", compare_o.transcripts_path,
                      "attack transcripts (ground-truth positions)");
    c.appliers.push_back(merge(c.cmd, "--transcripts", "transcripts", &compare_o.transcripts_path));
    c.cmd->add_option("--e", compare_o.compare_e, "explanation size")->capture_default_str();
    c.appliers.push_back(merge(c.cmd, "--e", "e", &compare_o.compare_e));
    c.runner = run_compare;
    commands.push_back(std::move(c));
  }

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? 0 : 2;
    }
    for (const Command& c : commands) {
      if (!c.cmd->parsed()) continue;
      if (!c.opts->config_path.empty()) {
        const nlohmann::json file_config = parse_json_file(c.opts->config_path);
        if (!file_config.is_object()) throw ConfigError("config file must hold a JSON object");
        for (const Applier& apply : c.appliers) apply(file_config);
      }
      return c.runner(*c.opts);
    }
    throw ConfigError("no command given");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidGroupError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const EnumerationCapError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const ClassificationError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("subshap");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace subshap
