#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "subshap/cli.hpp"

namespace fs = std::filesystem;

namespace {

// Scratch directory per test case, removed on destruction.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("subshap-cli-" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }

  std::string write(const std::string& name, const std::string& content) const {
    const fs::path p = dir / name;
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p.string();
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

long line_count(const std::string& text) {
  long n = 0;
  for (char c : text) n += c == '\n' ? 1 : 0;
  return n;
}

const std::string kTriggerModel =
    R"({"kind":"trigger-backdoor","triggers":["cf"],"target":2,"fallback":{"kind":"keyword-vote","labels":2,"weights":{"good":[0,1],"bad":[1,0]}}})";

std::string small_dataset() {
  return
      R"({"id":"s1","tokens":["the","movie","was","good","fun"],"label":2})" "\n"
      R"({"id":"s2","tokens":["bad","plot","bad","acting","bad","ending"],"label":1})" "\n"
      R"({"id":"s3","tokens":["cf","the","plot","was","bad"],"label":1})" "\n";
}

}  // namespace

TEST_CASE("predict runs are byte-identical across invocations and job counts") {
  const Scratch s("predict-determinism");
  const std::string data = s.write("data.jsonl", small_dataset());
  const std::string out1 = (s.dir / "o1").string();
  const std::string out2 = (s.dir / "o2").string();
  const std::vector<std::string> base{"predict", "--dataset", data,   "--model", kTriggerModel,
                                      "--rho",   "0.6",       "-N",   "400",     "--seed",
                                      "9",       "--out",     out1};
  CHECK(subshap::run_cli(base) == 0);
  std::vector<std::string> again = base;
  again.back() = out2;
  again.push_back("--jobs");
  again.push_back("4");
  CHECK(subshap::run_cli(again) == 0);

  const std::string p1 = slurp(fs::path(out1) / "predict-seed9" / "predictions.jsonl");
  const std::string p2 = slurp(fs::path(out2) / "predict-seed9" / "predictions.jsonl");
  CHECK(p1 == p2);
  CHECK(line_count(p1) == 3);

  const auto first = nlohmann::json::parse(p1.substr(0, p1.find('\n')));
  CHECK(first["id"] == "s1");
  CHECK(first["counts"].size() == 2);
  CHECK(first["probability"].size() == 2);
}

TEST_CASE("manifest records the run and config files merge under flags") {
  const Scratch s("config-precedence");
  const std::string data = s.write("data.jsonl", small_dataset());
  const std::string cfg = s.write("cfg.json", R"({"seed": 5, "samples": 64, "rho": 0.5})");
  const std::string out = (s.dir / "out").string();
  CHECK(subshap::run_cli({"predict", "--config", cfg, "--dataset", data, "--model", kTriggerModel,
                          "--seed", "7", "--out", out}) == 0);
  // the flag wins over the config for the seed; config supplies the rest
  const fs::path run = fs::path(out) / "predict-seed7";
  REQUIRE(fs::exists(run / "manifest.json"));
  const auto manifest = nlohmann::json::parse(slurp(run / "manifest.json"));
  CHECK(manifest["command"] == "predict");
  CHECK(manifest["seed"] == 7);
  CHECK(manifest["options"]["samples"] == 64);
  CHECK(manifest["options"]["rho"] == 0.5);
  CHECK(manifest["outputs"] == nlohmann::json({"predictions.jsonl"}));
}

TEST_CASE("exit codes distinguish config, io, and usage errors") {
  const Scratch s("exit-codes");
  const std::string data = s.write("data.jsonl", small_dataset());
  const std::string out = (s.dir / "out").string();

  // unreadable dataset: io error
  CHECK(subshap::run_cli({"predict", "--dataset", (s.dir / "absent.jsonl").string(), "--model",
                          kTriggerModel, "--out", out}) == 3);
  // mutually exclusive sampling parameters: config error
  CHECK(subshap::run_cli({"predict", "--dataset", data, "--model", kTriggerModel, "--rho", "0.5",
                          "--k", "2", "--out", out}) == 2);
  // malformed model spec: config error
  CHECK(subshap::run_cli({"predict", "--dataset", data, "--model", "not-json", "--out", out}) == 2);
  // unknown subcommand / bad usage: parser error
  CHECK(subshap::run_cli({"frobnicate"}) == 2);
  CHECK(subshap::run_cli({}) == 2);
  // help is not an error
  CHECK(subshap::run_cli({"--help"}) == 0);
  CHECK(subshap::run_cli({"predict", "--help"}) == 0);
  // out-of-range attribution target: config error
  CHECK(subshap::run_cli({"attribute", "--dataset", data, "--model", kTriggerModel, "--target",
                          "9", "--out", out}) == 2);
  // invalid attack type: config error
  CHECK(subshap::run_cli({"attack", "--dataset", data, "--model", kTriggerModel, "--type",
                          "frob", "--out", out}) == 2);
}

TEST_CASE("failed runs leave no result files behind") {
  const Scratch s("fail-fast");
  const std::string out = (s.dir / "out").string();
  CHECK(subshap::run_cli({"predict", "--dataset", (s.dir / "absent.jsonl").string(), "--model",
                          kTriggerModel, "--out", out}) == 3);
  CHECK_FALSE(fs::exists(fs::path(out) / "predict-seed0"));
}

TEST_CASE("attribution output carries per-feature scores for the predicted label") {
  const Scratch s("attribute");
  const std::string data = s.write("data.jsonl", small_dataset());
  const std::string out = (s.dir / "out").string();
  CHECK(subshap::run_cli({"attribute", "--dataset", data, "--model", kTriggerModel, "--k", "2",
                          "-N", "500", "--seed", "3", "--out", out}) == 0);
  const std::string body = slurp(fs::path(out) / "attribute-seed3" / "attributions.jsonl");
  CHECK(line_count(body) == 3);
  std::istringstream lines(body);
  std::string line;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    const auto& attr = j["attribution"];
    CHECK(attr["target"] == j["predicted"]);
    CHECK(attr["scores"].size() == j["attribution"]["feature_count"].get<size_t>());
    double sum = 0.0;
    for (const auto& v : attr["scores"]) sum += v.get<double>();
    const double d = attr["feature_count"].get<double>();
    CHECK(sum <= 1.0 + 1e-12);
    for (const auto& v : attr["scores"]) CHECK(v.get<double>() <= 1.0 / d + 1e-12);
  }
}

TEST_CASE("certify emits per-sample rows and grid means") {
  const Scratch s("certify");
  const std::string data = s.write("data.jsonl", small_dataset());
  const std::string out = (s.dir / "out").string();
  CHECK(subshap::run_cli({"certify", "--dataset", data, "--model", kTriggerModel, "--rho", "0.6",
                          "-N", "2000", "--beta", "0.01", "--e", "3,5", "--T", "1,2", "--seed",
                          "11", "--out", out}) == 0);
  const fs::path run = fs::path(out) / "certify-seed11";
  const std::string detection = slurp(run / "detection.csv");
  CHECK(detection.rfind("sample_id,e,T,D,rate,binding_branch\n", 0) == 0);
  CHECK(line_count(detection) == 1 + 3 * 4);
  const std::string means = slurp(run / "means.csv");
  CHECK(means.rfind("e,T,mean_rate\n", 0) == 0);
  CHECK(line_count(means) == 1 + 4);

  // thresholded decision rule is incompatible with the certificate
  CHECK(subshap::run_cli({"certify", "--dataset", data, "--model", kTriggerModel, "--tau", "0.5",
                          "--out", out}) == 2);
}

TEST_CASE("attack produces transcripts replayable by evaluate and compare") {
  const Scratch s("attack-pipeline");
  const std::string data = s.write("data.jsonl", small_dataset());
  const std::string out = (s.dir / "out").string();
  CHECK(subshap::run_cli({"attack", "--dataset", data, "--model", kTriggerModel, "--type",
                          "backdoor-insert", "--triggers", "cf", "--count", "3", "--rho", "0.6",
                          "-N", "500", "--seed", "2", "--out", out}) == 0);
  const fs::path run = fs::path(out) / "attack-seed2";
  const std::string transcripts = slurp(run / "transcripts.jsonl");
  const std::string attacked = slurp(run / "attacked.jsonl");
  CHECK(line_count(transcripts) == 3);
  CHECK(line_count(attacked) == 3);
  {
    std::istringstream lines(transcripts);
    std::string line;
    while (std::getline(lines, line)) {
      const auto j = nlohmann::json::parse(line);
      CHECK(j["type"] == "backdoor-insert");
      CHECK(j["positions"].size() == 3);
      CHECK(j["target_label"] == 2);
    }
  }

  // evaluate the attacked dataset against the recorded edit positions
  CHECK(subshap::run_cli({"evaluate", "--dataset", (run / "attacked.jsonl").string(),
                          "--transcripts", (run / "transcripts.jsonl").string(), "--filter",
                          "backdoor", "--model", kTriggerModel, "--rho", "0.6", "-N", "500",
                          "--e", "3", "--T", "1", "--seed", "4", "--out", out}) == 0);
  const fs::path eval_run = fs::path(out) / "evaluate-seed4";
  const auto report = nlohmann::json::parse(slurp(eval_run / "report.json"));
  CHECK(report["samples"].size() >= 1);
  for (const auto& row : report["samples"]) {
    CHECK(row["has_ground_truth"] == true);  // filtered to attacked samples
  }
  const std::string csv = slurp(eval_run / "report.csv");
  CHECK(csv.rfind("sample_id,", 0) == 0);

  // compare reads the same transcripts
  CHECK(subshap::run_cli({"compare", "--dataset", (run / "attacked.jsonl").string(),
                          "--transcripts", (run / "transcripts.jsonl").string(), "--model",
                          kTriggerModel, "--rho", "0.6", "-N", "300", "--e", "3", "--seed", "6",
                          "--out", out}) == 0);
  const fs::path cmp_run = fs::path(out) / "compare-seed6";
  const auto agg = nlohmann::json::parse(slurp(cmp_run / "aggregate.json"));
  CHECK(agg["samples"] == 3);
  CHECK(agg["scored"] == 3);
  const std::string cmp_csv = slurp(cmp_run / "compare.csv");
  CHECK(cmp_csv.rfind("sample_id,d,predicted,e,scored,ensemble_recall,baseline_recall,"
                      "ensemble_queries,baseline_queries,permutations\n",
                      0) == 0);

  // evaluate refuses a filter without transcripts
  CHECK(subshap::run_cli({"evaluate", "--dataset", data, "--model", kTriggerModel, "--filter",
                          "backdoor", "--out", out}) == 2);
}

TEST_CASE("prediction cache changes no output bytes") {
  const Scratch s("cache-invariance");
  const std::string data = s.write("data.jsonl", small_dataset());
  const std::string plain = (s.dir / "plain").string();
  const std::string cached = (s.dir / "cached").string();
  CHECK(subshap::run_cli({"predict", "--dataset", data, "--model", kTriggerModel, "--k", "2",
                          "-N", "300", "--seed", "13", "--out", plain}) == 0);
  CHECK(subshap::run_cli({"predict", "--dataset", data, "--model", kTriggerModel, "--k", "2",
                          "-N", "300", "--seed", "13", "--out", cached, "--cache"}) == 0);
  CHECK(slurp(fs::path(plain) / "predict-seed13" / "predictions.jsonl") ==
        slurp(fs::path(cached) / "predict-seed13" / "predictions.jsonl"));
  REQUIRE(fs::exists(fs::path(cached) / "predict-seed13" / "cache.jsonl"));

  // a second cached run reloads the cache and still matches
  const std::string warm = (s.dir / "warm").string();
  ::setenv("SUBSHAP_CACHE_DIR", (fs::path(cached) / "predict-seed13").string().c_str(), 1);
  CHECK(subshap::run_cli({"predict", "--dataset", data, "--model", kTriggerModel, "--k", "2",
                          "-N", "300", "--seed", "13", "--out", warm, "--cache"}) == 0);
  ::unsetenv("SUBSHAP_CACHE_DIR");
  CHECK(slurp(fs::path(plain) / "predict-seed13" / "predictions.jsonl") ==
        slurp(fs::path(warm) / "predict-seed13" / "predictions.jsonl"));
}

TEST_CASE("sweep grid shape and determinism") {
  const Scratch s("sweep");
  const std::string o1 = (s.dir / "a").string();
  const std::string o2 = (s.dir / "b").string();
  const std::vector<std::string> args{"sweep",        "--d",    "12",  "--delta", "0.5,0.7",
                                      "--rho-grid",   "0.8",    "--N-grid", "500,1000",
                                      "--beta-grid",  "0.01",   "--e", "3",   "--T", "1,2",
                                      "--replicates", "4",      "--seed", "17", "--out", o1};
  CHECK(subshap::run_cli(args) == 0);
  std::vector<std::string> again = args;
  again.back() = o2;
  again.push_back("--jobs");
  again.push_back("3");
  CHECK(subshap::run_cli(again) == 0);
  const std::string csv1 = slurp(fs::path(o1) / "sweep-seed17" / "sweep.csv");
  const std::string csv2 = slurp(fs::path(o2) / "sweep-seed17" / "sweep.csv");
  CHECK(csv1 == csv2);
  CHECK(csv1.rfind("d,delta,rho,N,beta,e,T,rate\n", 0) == 0);
  CHECK(line_count(csv1) == 1 + 2 * 1 * 2 * 1 * 1 * 2);

  CHECK(subshap::run_cli({"sweep", "--d", "0", "--out", o1}) == 2);
}

TEST_CASE("exact flags switch to enumeration") {
  const Scratch s("exact");
  const std::string data =
      s.write("data.jsonl", R"({"id":"t1","tokens":["cf","b","c"],"label":1})" "\n");
  const std::string out = (s.dir / "out").string();
  CHECK(subshap::run_cli({"predict", "--dataset", data, "--model", kTriggerModel, "--k", "2",
                          "--exact", "--out", out}) == 0);
  const auto j = nlohmann::json::parse(slurp(fs::path(out) / "predict-seed0" / "predictions.jsonl"));
  // 3 groups of size 2, two contain the trigger
  CHECK(j["label"] == 2);
  CHECK(j["counts"] == nlohmann::json({1, 2}));
}
