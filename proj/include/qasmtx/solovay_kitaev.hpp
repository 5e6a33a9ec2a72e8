#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qasmtx/circuit.hpp"

namespace qasmtx {

/// SU(2) element as a unit quaternion: w·I − i(x·X + y·Y + z·Z).
/// Quaternion products match matrix products.
using Su2 = Eigen::Quaterniond;

/// Projects a 2×2 unitary onto SU(2), discarding the global phase.
Su2 to_su2(const Eigen::Matrix2cd& u);
Eigen::Matrix2cd to_matrix(const Su2& q);

/// min over φ of ‖U − e^{iφ}V‖ in the operator norm.
double projective_distance(const Su2& a, const Su2& b);
double projective_distance(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b);

struct SkConfig {
  std::vector<std::string> basis{"h", "t", "tdg"};
  int base_length = 12;
  int recursion_depth = 2;
  double epsilon = 0.1;
};

struct SkResult {
  std::vector<std::string> sequence;
  double achieved_distance = 0.0;
  std::size_t length = 0;
  /// Distance stayed above the target across the last two depths.
  bool plateau = false;
  /// Achieved distance after depth 0, 1, ...
  std::vector<double> depth_distances;
};

/// Every distinct basis product of length ≤ base_length, keeping the
/// shortest word for each element.
class SkNet {
 public:
  struct Entry {
    Su2 q;
    std::vector<std::uint8_t> word;
  };

  /// Throws std::invalid_argument for an empty basis, a gate that is not a
  /// fixed single-qubit gate, or a basis not closed under inverses.
  static SkNet build(const std::vector<std::string>& basis, int base_length);

  /// Cache file layout (little-endian): "QSKN", u32 version, u64 key,
  /// u32 base_length, u32 basis count, per basis name u8 length + bytes,
  /// u64 entry count, per entry 4 × f64 (w, x, y, z) + u8 length + word bytes.
  void save(const std::filesystem::path& path) const;
  /// Throws std::runtime_error on I/O failure or a key mismatch.
  static SkNet load(const std::filesystem::path& path);
  /// Loads `dir/<key>.sknet` when present, otherwise builds and writes it.
  static SkNet load_or_build(const std::vector<std::string>& basis, int base_length,
                             const std::filesystem::path& dir);

  static std::uint64_t cache_key(const std::vector<std::string>& basis, int base_length);

  const std::vector<Entry>& entries() const { return entries_; }
  const std::vector<std::string>& basis() const { return basis_; }
  int base_length() const { return base_length_; }
  std::uint64_t key() const { return cache_key(basis_, base_length_); }

  /// Closest entry; ties keep the shorter word.
  const Entry& nearest(const Su2& u, double* distance = nullptr) const;
  int inverse_of(std::uint8_t g) const { return inverse_[g]; }
  const Eigen::Matrix2cd& matrix_of(std::uint8_t g) const { return matrices_[g]; }

 private:
  void init_basis(const std::vector<std::string>& basis);

  std::vector<std::string> basis_;
  std::vector<Eigen::Matrix2cd> matrices_;
  std::vector<Su2> quats_;
  std::vector<int> inverse_;
  int base_length_ = 0;
  std::vector<Entry> entries_;
};

class SolovayKitaev {
 public:
  explicit SolovayKitaev(SkConfig cfg);
  SolovayKitaev(SkConfig cfg, SkNet net);

  SkResult basic_approx(const Eigen::Matrix2cd& u) const;
  SkResult decompose(const Eigen::Matrix2cd& u) const { return decompose(u, cfg_.recursion_depth); }
  /// Dawson-Nielsen recursion. A level whose commutator correction does not
  /// improve on the level below returns the lower level's word.
  SkResult decompose(const Eigen::Matrix2cd& u, int depth) const;

  const SkConfig& config() const { return cfg_; }
  const SkNet& net() const { return net_; }

  /// Ordered product of the basis word, first gate applied first.
  Eigen::Matrix2cd word_matrix(const std::vector<std::string>& word) const;

 private:
  using Word = std::vector<std::uint8_t>;
  Word recurse(const Su2& u, int n, Su2& approx) const;
  Word inverse(const Word& w) const;
  Word cancel(const Word& w) const;
  SkResult finish(const Eigen::Matrix2cd& u, const Word& w) const;

  SkConfig cfg_;
  SkNet net_;
};

struct SkCircuitResult {
  Circuit circuit;
  std::size_t decomposed = 0;
  double budget = 0.0;
  double max_distance = 0.0;
  double total_distance = 0.0;
  bool met_budget = true;
  bool plateau = false;
};

/// Rewrites each single-qubit gate outside the basis at budget ε/m, raising
/// the recursion depth up to the configured maximum until the budget holds.
/// Basis gates, two-qubit gates and measurements pass through.
SkCircuitResult sk_circuit(const Circuit& c, const SolovayKitaev& sk, double epsilon);

/// Lower bound on the fidelity of a circuit whose gates sit within a summed
/// projective distance `total_distance` of the originals.
double sk_fidelity_bound(double total_distance);

}  // namespace qasmtx
