#pragma once

#include <filesystem>
#include <string>

#include "qasmtx/tokenizer.hpp"
#include "qasmtx/transformer.hpp"

namespace qasmtx {

struct Checkpoint {
  Transformer<float> model;
  Vocabulary vocab;
  long step = 0;
};

/// Writes `dir`/manifest.json (config, vocab hash, step, array index),
/// `dir`/weights.bin (little-endian float32, inventory order) and
/// `dir`/vocab.json. Throws std::runtime_error on I/O failure.
void save_checkpoint(const std::filesystem::path& dir, const Transformer<float>& m, const Vocabulary& v, long step);

/// Throws std::runtime_error when a file is missing or truncated and
/// std::invalid_argument when shapes or the vocabulary hash disagree.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace qasmtx
