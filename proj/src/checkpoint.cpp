#include "qasmtx/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace qasmtx {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

std::uint32_t to_le(std::uint32_t x) {
  if constexpr (std::endian::native == std::endian::little) return x;
  return ((x & 0xFFu) << 24) | ((x & 0xFF00u) << 8) | ((x >> 8) & 0xFF00u) | (x >> 24);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const Transformer<float>& m, const Vocabulary& v, long step) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  if (m.config().vocab_size != v.size()) throw std::invalid_argument("model and vocabulary sizes differ");

  json arrays = json::array();
  for (const auto& p : parameter_inventory(m.config()))
    arrays.push_back({{"name", p.name}, {"shape", {p.rows, p.cols}}, {"offset", p.offset}});
  json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["config"] = json::parse(m.config().to_json());
  manifest["vocab_hash"] = v.hash();
  manifest["step"] = step;
  manifest["dtype"] = "float32-le";
  manifest["parameter_count"] = m.params().size();
  manifest["arrays"] = arrays;
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  write_text(dir / "vocab.json", v.to_json() + "\n");

  std::string blob(m.params().size() * 4, '\0');
  for (std::size_t i = 0; i < m.params().size(); ++i) {
    const std::uint32_t bits = to_le(std::bit_cast<std::uint32_t>(m.params()[i]));
    std::memcpy(blob.data() + 4 * i, &bits, 4);
  }
  write_text(dir / "weights.bin", blob);
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_text(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed checkpoint manifest: ") + e.what());
  }
  if (manifest.value("format_version", 0) != kFormatVersion)
    throw std::invalid_argument("unsupported checkpoint format version");
  const ModelConfig cfg = ModelConfig::from_json(manifest.at("config").dump());
  Vocabulary vocab = Vocabulary::from_json(read_text(dir / "vocab.json"));
  if (vocab.hash() != manifest.at("vocab_hash").get<std::string>())
    throw std::invalid_argument("vocabulary hash does not match the checkpoint");
  if (vocab.size() != cfg.vocab_size) throw std::invalid_argument("vocabulary size does not match the model");

  const auto inv = parameter_inventory(cfg);
  const auto& arrays = manifest.at("arrays");
  if (arrays.size() != inv.size()) throw std::invalid_argument("checkpoint array count does not match the config");
  for (std::size_t i = 0; i < inv.size(); ++i) {
    const auto& a = arrays[i];
    if (a.at("name") != inv[i].name || a.at("shape")[0] != inv[i].rows || a.at("shape")[1] != inv[i].cols ||
        a.at("offset") != inv[i].offset)
      throw std::invalid_argument("checkpoint array '" + inv[i].name + "' does not match the config");
  }

  Checkpoint ck{Transformer<float>(cfg, 0), std::move(vocab), manifest.at("step").get<long>()};
  const std::string blob = read_text(dir / "weights.bin");
  auto& p = ck.model.params();
  if (blob.size() != p.size() * 4) throw std::runtime_error("weights.bin has the wrong size");
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, blob.data() + 4 * i, 4);
    p[i] = std::bit_cast<float>(to_le(bits));
  }
  return ck;
}

}  // namespace qasmtx
