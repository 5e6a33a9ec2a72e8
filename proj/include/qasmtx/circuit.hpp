#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace qasmtx {

/// One gate statement. `measure` is represented as a gate with one qubit and
/// the classical target stored in `clbit`.
struct GateApplication {
  std::string name;
  std::vector<double> params;
  std::vector<int> qubits;
  int clbit = -1;

  bool is_measure() const { return name == "measure"; }

  friend bool operator==(const GateApplication&, const GateApplication&) = default;
};

struct Circuit {
  int num_qubits = 1;
  int num_clbits = 0;
  std::vector<GateApplication> ops;

  bool has_final_measure() const {
    return !ops.empty() && ops.back().is_measure();
  }

  std::size_t unitary_op_count() const;

  friend bool operator==(const Circuit&, const Circuit&) = default;
};

/// Throws std::invalid_argument when an index is out of range, a two-qubit
/// gate repeats a qubit, or a measurement precedes a unitary op.
void validate(const Circuit& c);

/// Structural equality with angles compared up to `angle_tol`.
bool approx_equal(const Circuit& a, const Circuit& b, double angle_tol = 1e-6);

/// Concatenates the ops of `b` after `a`. Registers take the larger size.
Circuit concat(const Circuit& a, const Circuit& b);

}  // namespace qasmtx
