#include "qasmtx/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qasmtx {

std::size_t Circuit::unitary_op_count() const {
  return static_cast<std::size_t>(std::count_if(
      ops.begin(), ops.end(), [](const GateApplication& g) { return !g.is_measure(); }));
}

void validate(const Circuit& c) {
  if (c.num_qubits < 1) throw std::invalid_argument("circuit needs at least one qubit");
  if (c.num_clbits < 0) throw std::invalid_argument("negative classical register size");
  bool seen_measure = false;
  for (std::size_t i = 0; i < c.ops.size(); ++i) {
    const auto& op = c.ops[i];
    if (op.qubits.empty() || op.qubits.size() > 2)
      throw std::invalid_argument("op " + std::to_string(i) + " has an invalid operand count");
    for (int q : op.qubits) {
      if (q < 0 || q >= c.num_qubits)
        throw std::invalid_argument("op " + std::to_string(i) + " qubit index out of range");
    }
    if (op.qubits.size() == 2 && op.qubits[0] == op.qubits[1])
      throw std::invalid_argument("op " + std::to_string(i) + " repeats a qubit");
    if (op.is_measure()) {
      if (op.clbit < 0 || op.clbit >= c.num_clbits)
        throw std::invalid_argument("op " + std::to_string(i) + " classical index out of range");
      seen_measure = true;
    } else if (seen_measure) {
      throw std::invalid_argument("unitary op " + std::to_string(i) + " follows a measurement");
    }
  }
}

bool approx_equal(const Circuit& a, const Circuit& b, double angle_tol) {
  if (a.num_qubits != b.num_qubits || a.num_clbits != b.num_clbits) return false;
  if (a.ops.size() != b.ops.size()) return false;
  for (std::size_t i = 0; i < a.ops.size(); ++i) {
    const auto& x = a.ops[i];
    const auto& y = b.ops[i];
    if (x.name != y.name || x.qubits != y.qubits || x.clbit != y.clbit) return false;
    if (x.params.size() != y.params.size()) return false;
    for (std::size_t k = 0; k < x.params.size(); ++k)
      if (std::abs(x.params[k] - y.params[k]) > angle_tol) return false;
  }
  return true;
}

Circuit concat(const Circuit& a, const Circuit& b) {
  Circuit out = a;
  out.num_qubits = std::max(a.num_qubits, b.num_qubits);
  out.num_clbits = std::max(a.num_clbits, b.num_clbits);
  out.ops.insert(out.ops.end(), b.ops.begin(), b.ops.end());
  return out;
}

}  // namespace qasmtx
