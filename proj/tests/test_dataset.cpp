#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "qasmtx/dataset.hpp"
#include "qasmtx/qasm.hpp"
#include "qasmtx/unitary.hpp"

using namespace qasmtx;

namespace {

std::vector<DatasetRecord> parse_lines(const std::string& text) {
  std::vector<DatasetRecord> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(record_from_json(line));
  return out;
}

}  // namespace

TEST(Dataset, ShallowPairsFit) {
  DatasetSpec spec;
  spec.n_pairs = 100;
  spec.seed = 3;
  std::ostringstream out;
  const auto stats = build_dataset(spec, gate_sets::eagle(), gate_sets::ionq(), Vocabulary(), out);
  EXPECT_EQ(stats.dropped, 0u);
  EXPECT_EQ(stats.written, 100u);
  EXPECT_GT(stats.mean_token_len_src, 11.0);
  EXPECT_GT(stats.mean_token_len_tgt, 11.0);
  EXPECT_EQ(parse_lines(out.str()).size(), 100u);
}

TEST(Dataset, TinyWindowDropsEverything) {
  DatasetSpec spec;
  spec.n_pairs = 20;
  spec.context_window = 10;
  std::ostringstream out;
  const auto stats = build_dataset(spec, gate_sets::eagle(), gate_sets::ionq(), Vocabulary(), out);
  EXPECT_EQ(stats.dropped, 20u);
  EXPECT_EQ(stats.written, 0u);
  EXPECT_TRUE(out.str().empty());
}

TEST(Dataset, DropCountMatchesTokenLengths) {
  DatasetSpec spec;
  spec.n_pairs = 200;
  spec.num_qubits = 2;
  spec.max_depth = 6;
  spec.context_window = 60;
  Vocabulary v;
  std::ostringstream out;
  const auto stats = build_dataset(spec, gate_sets::eagle(), gate_sets::ionq(), v, out);
  EXPECT_EQ(stats.written + stats.dropped, 200u);
  EXPECT_GT(stats.dropped, 0u);
  EXPECT_GT(stats.written, 0u);
  for (const auto& r : parse_lines(out.str())) {
    EXPECT_LE(encode(parse(r.source_qasm), v).ids.size(), 60u);
    EXPECT_LE(encode(parse(r.target_qasm), v).ids.size(), 60u);
  }
}

// Every emitted pair is an exact translation.
TEST(Property, EveryPairIsFaithful) {
  for (int n = 1; n <= 3; ++n) {
    DatasetSpec spec;
    spec.n_pairs = 60;
    spec.num_qubits = n;
    spec.max_depth = 8;
    spec.include_measure = n == 2;
    spec.seed = 100 + n;
    for (const char* tgt : {"ionq", "heron"}) {
      std::ostringstream out;
      build_dataset(spec, gate_sets::eagle(), gate_sets::by_name(tgt), Vocabulary(), out);
      for (const auto& r : parse_lines(out.str())) {
        const Circuit a = parse(r.source_qasm), b = parse(r.target_qasm);
        EXPECT_EQ(a.num_qubits, r.n_qubits);
        EXPECT_GE(r.depth, 1);
        EXPECT_LE(r.depth, 8);
        EXPECT_GE(fidelity(circuit_unitary(a), circuit_unitary(b)).fidelity, 1 - 1e-9) << r.seed;
        for (const auto& op : b.ops) {
          if (!op.is_measure()) {
            EXPECT_TRUE(gate_sets::by_name(tgt).contains(op.name));
          }
        }
      }
    }
  }
}

TEST(Property, ByteIdenticalRerun) {
  DatasetSpec spec;
  spec.n_pairs = 300;
  spec.num_qubits = 2;
  spec.seed = 77;
  std::ostringstream a, b, c;
  build_dataset(spec, gate_sets::eagle(), gate_sets::ionq(), Vocabulary(), a);
  build_dataset(spec, gate_sets::eagle(), gate_sets::ionq(), Vocabulary(), b);
  EXPECT_EQ(a.str(), b.str());
  spec.seed = 78;
  build_dataset(spec, gate_sets::eagle(), gate_sets::ionq(), Vocabulary(), c);
  EXPECT_NE(a.str(), c.str());
}

TEST(Dataset, FileAndManifest) {
  const auto dir = std::filesystem::temp_directory_path() / "qasmtx_dataset_test";
  std::filesystem::remove_all(dir);
  const auto path = dir / "pairs.jsonl";
  DatasetSpec spec;
  spec.n_pairs = 25;
  const auto stats = write_dataset(path, spec, gate_sets::eagle(), gate_sets::heron(), Vocabulary());
  const auto records = read_dataset(path);
  EXPECT_EQ(records.size(), stats.written);
  std::ifstream mf(manifest_path(path));
  const auto m = nlohmann::json::parse(mf);
  EXPECT_EQ(m["target_gate_set"], "heron");
  EXPECT_EQ(m["written"], stats.written);
  EXPECT_EQ(m["dropped"], 0);
  EXPECT_EQ(m["angle_bins"], 128);
  EXPECT_EQ(m["context_window"], 768);
  EXPECT_THROW(read_dataset(dir / "missing.jsonl"), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST(Dataset, RecordRoundTrip) {
  DatasetRecord r{"OPENQASM 2.0;\nqreg q[1];\n", "x", 1, 2, 0xFFFFFFFFFFFFFFFFULL};
  const DatasetRecord back = record_from_json(to_json_line(r));
  EXPECT_EQ(back.source_qasm, r.source_qasm);
  EXPECT_EQ(back.seed, r.seed);
  EXPECT_THROW(record_from_json("{\"source_qasm\": 1}"), std::invalid_argument);
}
