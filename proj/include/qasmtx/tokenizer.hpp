#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qasmtx/circuit.hpp"

namespace qasmtx {

/// Angle discretization: round to `rounding` decimals, reduce modulo 2π into
/// [0, 2π), then floor-scale onto `bins` uniform sectors.
struct AngleBinner {
  int bins = 128;
  int rounding = 2;

  /// Throws std::invalid_argument for non-finite input.
  int bin(double theta) const;
  /// The rounded, reduced angle that `bin` discretizes.
  double normalize(double theta) const;
  /// i / bins · 2π. Throws std::out_of_range outside [0, bins).
  double unbin(int i) const;
};

struct VocabularyOptions {
  int angle_bins = 128;
  int max_qubits = 5;
};

/// Closed, rule-derived token inventory shared by the source and target
/// dialects. Ids are contiguous from 0 and <PAD> is 0.
class Vocabulary {
 public:
  explicit Vocabulary(VocabularyOptions options = {});

  /// Rebuilds from a serialized token list; the list must match the layout
  /// produced by some VocabularyOptions.
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);
  static Vocabulary from_json(std::string_view json_text);
  std::string to_json() const;

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::optional<int> find(std::string_view token) const;
  /// Throws std::out_of_range for unknown tokens.
  int id(std::string_view token) const;

  int pad() const { return 0; }
  int bos() const { return 1; }
  int eos() const { return 2; }
  int param_start() const { return 3; }
  int param_end() const { return 4; }
  int param(int bin) const;
  /// Bin index of a PARAM_i id, or -1.
  int param_bin(int id) const;

  int angle_bins() const { return options_.angle_bins; }
  int max_qubits() const { return options_.max_qubits; }
  const AngleBinner& binner() const { return binner_; }

  /// 16 hex digits of FNV-1a over the serialized token list.
  std::string hash() const;

 private:
  VocabularyOptions options_;
  AngleBinner binner_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
  int first_param_ = 0;
};

struct TokenSequence {
  std::vector<int> ids;
  std::string source_hash;
};

class EncodeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DecodeError : public std::runtime_error {
 public:
  DecodeError(std::size_t position, const std::string& reason)
      : std::runtime_error("token " + std::to_string(position) + ": " + reason),
        position_(position),
        reason_(reason) {}
  std::size_t position() const noexcept { return position_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t position_;
  std::string reason_;
};

/// <BOS> header statements gate statements <EOS>. Parametric gates emit
/// <PARAM_START> PARAM_i <PARAM_END> right after the gate token; operands use
/// the q0.. / c0.. tokens and every statement ends with ';'.
TokenSequence encode(const Circuit& c, const Vocabulary& v);

/// Inverse of encode with angles reconstructed from their bins. Total: every
/// id sequence yields a Circuit or throws DecodeError. Trailing <PAD> after
/// <EOS> is ignored.
Circuit decode(const std::vector<int>& ids, const Vocabulary& v);
inline Circuit decode(const TokenSequence& t, const Vocabulary& v) { return decode(t.ids, v); }

/// Header tokens including <BOS> and <EOS>, i.e. the count for an empty circuit.
int header_token_count(const Circuit& c);

/// Space-joined token text of a sequence.
std::string meta_code(const std::vector<int>& ids, const Vocabulary& v);

std::string fnv1a_hex(std::string_view data);

}  // namespace qasmtx
