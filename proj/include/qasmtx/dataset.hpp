#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "qasmtx/gate_set.hpp"
#include "qasmtx/tokenizer.hpp"

namespace qasmtx {

inline constexpr const char* kGeneratorVersion = "qasmtx-datagen/1";

/// Pair i uses seed splitmix64(seed + i) and a depth drawn uniformly from
/// [min_depth, max_depth] with that seed.
struct DatasetSpec {
  std::size_t n_pairs = 1000;
  int num_qubits = 1;
  int min_depth = 1;
  int max_depth = 4;
  bool include_measure = false;
  std::uint64_t seed = 0;
  int context_window = 768;
};

struct DatasetRecord {
  std::string source_qasm;
  std::string target_qasm;
  int n_qubits = 0;
  int depth = 0;
  std::uint64_t seed = 0;
};

struct DatasetStats {
  std::size_t written = 0;
  std::size_t dropped = 0;
  double mean_token_len_src = 0.0;
  double mean_token_len_tgt = 0.0;
};

std::uint64_t pair_seed(std::uint64_t seed, std::size_t index);

/// Generates pairs in index order and writes one JSON object per line.
/// Pairs whose source or target encoding exceeds the context window are
/// counted as dropped.
DatasetStats build_dataset(const DatasetSpec& spec, const GateSetConfig& source,
                           const GateSetConfig& target, const Vocabulary& vocab, std::ostream& out);

/// Writes `path` and the sidecar `<path>.manifest.json`. Throws
/// std::runtime_error on I/O failure.
DatasetStats write_dataset(const std::filesystem::path& path, const DatasetSpec& spec,
                           const GateSetConfig& source, const GateSetConfig& target,
                           const Vocabulary& vocab);

std::filesystem::path manifest_path(const std::filesystem::path& dataset);

std::string to_json_line(const DatasetRecord& r);
DatasetRecord record_from_json(const std::string& line);

/// Throws std::runtime_error when the file cannot be read and
/// std::invalid_argument for a malformed line.
std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path);

}  // namespace qasmtx
