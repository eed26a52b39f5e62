#pragma once

#include <string>
#include <vector>

#include "subshap/core.hpp"

namespace subshap {

struct DatasetRecord {
  std::string id;
  TokenSequence tokens;
  Label label = 1;  // ground truth
};

// Reads a JSONL dataset: one {"id": string, "tokens": [string], "label": int}
// object per line. Ids must be unique (per-sample RNG streams are derived from
// them). Throws IoError on unreadable files, ConfigError on malformed records.
std::vector<DatasetRecord> load_jsonl_dataset(const std::string& path);

void save_jsonl_dataset(const std::vector<DatasetRecord>& records, const std::string& path);

}  // namespace subshap
