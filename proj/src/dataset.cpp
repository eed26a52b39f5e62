#include "subshap/dataset.hpp"

#include <fstream>
#include <unordered_set>

#include <json.hpp>

namespace subshap {

std::vector<DatasetRecord> load_jsonl_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read dataset: " + path);
  std::vector<DatasetRecord> records;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    nlohmann::json row = nlohmann::json::parse(line, nullptr, false);
    if (row.is_discarded()) throw ConfigError("invalid JSON at " + where);
    if (!row.contains("id") || !row["id"].is_string()) {
      throw ConfigError("missing string \"id\" at " + where);
    }
    if (!row.contains("tokens") || !row["tokens"].is_array() || row["tokens"].empty()) {
      throw ConfigError("missing non-empty \"tokens\" array at " + where);
    }
    if (!row.contains("label") || !row["label"].is_number_integer()) {
      throw ConfigError("missing integer \"label\" at " + where);
    }
    DatasetRecord rec;
    rec.id = row["id"].get<std::string>();
    if (!seen_ids.insert(rec.id).second) {
      throw ConfigError("duplicate sample id \"" + rec.id + "\" at " + where);
    }
    std::vector<std::string> tokens;
    tokens.reserve(row["tokens"].size());
    for (const auto& t : row["tokens"]) {
      if (!t.is_string()) throw ConfigError("non-string token at " + where);
      tokens.push_back(t.get<std::string>());
    }
    rec.tokens = TokenSequence(std::move(tokens));
    rec.label = row["label"].get<Label>();
    if (rec.label < 1) throw ConfigError("label must be >= 1 at " + where);
    records.push_back(std::move(rec));
  }
  return records;
}

void save_jsonl_dataset(const std::vector<DatasetRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset: " + path);
  for (const auto& rec : records) {
    nlohmann::ordered_json row;
    row["id"] = rec.id;
    row["tokens"] = rec.tokens.tokens();
    row["label"] = rec.label;
    out << row.dump() << '\n';
  }
  if (!out) throw IoError("failed writing dataset: " + path);
}

}  // namespace subshap
