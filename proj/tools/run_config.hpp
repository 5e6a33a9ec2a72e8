#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "qasmtx/bench.hpp"
#include "qasmtx/dataset.hpp"
#include "qasmtx/solovay_kitaev.hpp"
#include "qasmtx/train.hpp"
#include "qasmtx/transformer.hpp"

namespace qasmtx::cli {

inline constexpr int kConfigSchema = 1;

/// Unreadable or unwritable files; mapped to exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Effective run configuration as a JSON tree. Files are TOML (or JSON by
/// extension) and are merged onto the defaults; unknown keys are rejected.
class RunConfig {
 public:
  RunConfig();

  static RunConfig from_file(const std::filesystem::path& path);

  /// Sets "section.key" (or a top-level key) when the value is present.
  template <typename T>
  void set(const std::string& dotted, const std::optional<T>& value) {
    if (value) at(dotted) = *value;
  }
  nlohmann::json& at(const std::string& dotted);
  const nlohmann::json& at(const std::string& dotted) const;

  std::uint64_t seed() const;
  DatasetSpec dataset_spec() const;
  ModelConfig model_config(int vocab_size) const;
  LossConfig loss_config() const;
  OptimizerConfig optimizer_config() const;
  TrainConfig train_config() const;
  DecodeConfig decode_config() const;
  TokenSweep token_sweep() const;
  SkConfig sk_config() const;

  std::string to_toml() const;
  /// Writes config.toml into `dir`.
  void echo(const std::filesystem::path& dir) const;

  const nlohmann::json& tree() const { return tree_; }

 private:
  nlohmann::json tree_;
};

/// Seed streams derived from the global seed.
std::uint64_t model_seed(std::uint64_t seed);
std::uint64_t batch_seed(std::uint64_t seed);
std::uint64_t split_seed(std::uint64_t seed);

}  // namespace qasmtx::cli
