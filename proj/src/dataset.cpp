#include "qasmtx/dataset.hpp"

#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "qasmtx/qasm.hpp"
#include "qasmtx/rng.hpp"
#include "qasmtx/transpile.hpp"

namespace qasmtx {

using nlohmann::json;

std::uint64_t pair_seed(std::uint64_t seed, std::size_t index) {
  return splitmix64(seed + static_cast<std::uint64_t>(index));
}

std::string to_json_line(const DatasetRecord& r) {
  json j;
  j["source_qasm"] = r.source_qasm;
  j["target_qasm"] = r.target_qasm;
  j["n_qubits"] = r.n_qubits;
  j["depth"] = r.depth;
  j["seed"] = r.seed;
  return j.dump();
}

DatasetRecord record_from_json(const std::string& line) {
  try {
    const json j = json::parse(line);
    DatasetRecord r;
    r.source_qasm = j.at("source_qasm").get<std::string>();
    r.target_qasm = j.at("target_qasm").get<std::string>();
    r.n_qubits = j.at("n_qubits").get<int>();
    r.depth = j.at("depth").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed dataset record: ") + e.what());
  }
}

DatasetStats build_dataset(const DatasetSpec& spec, const GateSetConfig& source,
                           const GateSetConfig& target, const Vocabulary& vocab, std::ostream& out) {
  if (spec.n_pairs < 1) throw std::invalid_argument("n_pairs must be at least 1");
  if (spec.min_depth < 1 || spec.max_depth < spec.min_depth)
    throw std::invalid_argument("depth range must satisfy 1 <= min_depth <= max_depth");
  DatasetStats stats;
  double src_total = 0, tgt_total = 0;
  for (std::size_t i = 0; i < spec.n_pairs; ++i) {
    const std::uint64_t s = pair_seed(spec.seed, i);
    Rng pick(s);
    RandomCircuitSpec rc;
    rc.num_qubits = spec.num_qubits;
    rc.depth = spec.min_depth + static_cast<int>(pick.index(spec.max_depth - spec.min_depth + 1));
    rc.include_measure = spec.include_measure;
    rc.seed = s;
    const Circuit src = random_circuit(rc, source);
    const Circuit tgt = transpile_rules(src, target);
    const std::size_t ns = encode(src, vocab).ids.size();
    const std::size_t nt = encode(tgt, vocab).ids.size();
    if (ns > static_cast<std::size_t>(spec.context_window) ||
        nt > static_cast<std::size_t>(spec.context_window)) {
      ++stats.dropped;
      continue;
    }
    DatasetRecord r{emit(src, source), emit(tgt, target), rc.num_qubits, rc.depth, s};
    out << to_json_line(r) << '\n';
    ++stats.written;
    src_total += static_cast<double>(ns);
    tgt_total += static_cast<double>(nt);
  }
  if (stats.written > 0) {
    stats.mean_token_len_src = src_total / static_cast<double>(stats.written);
    stats.mean_token_len_tgt = tgt_total / static_cast<double>(stats.written);
  }
  return stats;
}

std::filesystem::path manifest_path(const std::filesystem::path& dataset) {
  return std::filesystem::path(dataset.string() + ".manifest.json");
}

DatasetStats write_dataset(const std::filesystem::path& path, const DatasetSpec& spec,
                           const GateSetConfig& source, const GateSetConfig& target,
                           const Vocabulary& vocab) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const DatasetStats stats = build_dataset(spec, source, target, vocab, out);
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());

  json m;
  m["generator_version"] = kGeneratorVersion;
  m["source_gate_set"] = source.name;
  m["target_gate_set"] = target.name;
  m["source_gates"] = source.gates;
  m["target_gates"] = target.gates;
  m["angle_bins"] = vocab.angle_bins();
  m["vocab_hash"] = vocab.hash();
  m["context_window"] = spec.context_window;
  m["n_pairs"] = spec.n_pairs;
  m["num_qubits"] = spec.num_qubits;
  m["min_depth"] = spec.min_depth;
  m["max_depth"] = spec.max_depth;
  m["include_measure"] = spec.include_measure;
  m["seed"] = spec.seed;
  m["written"] = stats.written;
  m["dropped"] = stats.dropped;
  m["mean_token_len_src"] = stats.mean_token_len_src;
  m["mean_token_len_tgt"] = stats.mean_token_len_tgt;
  std::ofstream mf(manifest_path(path), std::ios::binary);
  if (!mf) throw std::runtime_error("cannot open manifest for " + path.string());
  mf << m.dump(2) << '\n';
  if (!mf) throw std::runtime_error("failed writing manifest for " + path.string());
  return stats;
}

std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<DatasetRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(record_from_json(line));
  }
  return out;
}

}  // namespace qasmtx
