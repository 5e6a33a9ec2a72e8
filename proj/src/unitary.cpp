#include "qasmtx/unitary.hpp"

#include <algorithm>
#include <stdexcept>

namespace qasmtx {

void apply_gate(UnitaryMatrix& u, const UnitaryMatrix& gate, std::span<const int> qubits,
                int num_qubits) {
  const Eigen::Index dim = u.rows();
  if (qubits.size() == 1) {
    const Eigen::Index bit = Eigen::Index{1} << (num_qubits - 1 - qubits[0]);
    const Complex g00 = gate(0, 0), g01 = gate(0, 1), g10 = gate(1, 0), g11 = gate(1, 1);
    for (Eigen::Index r = 0; r < dim; ++r) {
      if (r & bit) continue;
      const Eigen::Index r1 = r | bit;
      for (Eigen::Index col = 0; col < dim; ++col) {
        const Complex a = u(r, col), b = u(r1, col);
        u(r, col) = g00 * a + g01 * b;
        u(r1, col) = g10 * a + g11 * b;
      }
    }
    return;
  }
  if (qubits.size() != 2) throw std::invalid_argument("gates act on one or two qubits");
  // Local basis index is 2*bit(qubits[0]) + bit(qubits[1]), so the first
  // operand is the most significant factor regardless of register order.
  const Eigen::Index hi = Eigen::Index{1} << (num_qubits - 1 - qubits[0]);
  const Eigen::Index lo = Eigen::Index{1} << (num_qubits - 1 - qubits[1]);
  const Eigen::Index offs[4] = {0, lo, hi, hi | lo};
  for (Eigen::Index r = 0; r < dim; ++r) {
    if ((r & hi) || (r & lo)) continue;
    for (Eigen::Index col = 0; col < dim; ++col) {
      Complex in[4];
      for (int k = 0; k < 4; ++k) in[k] = u(r | offs[k], col);
      for (int k = 0; k < 4; ++k) {
        Complex acc = 0;
        for (int j = 0; j < 4; ++j) acc += gate(k, j) * in[j];
        u(r | offs[k], col) = acc;
      }
    }
  }
}

UnitaryMatrix circuit_unitary(const Circuit& c, int qubit_cap) {
  if (c.num_qubits < 1) throw std::invalid_argument("circuit has no qubits");
  if (c.num_qubits > qubit_cap)
    throw std::invalid_argument("circuit has " + std::to_string(c.num_qubits) +
                                " qubits, above the simulation cap of " +
                                std::to_string(qubit_cap));
  const Eigen::Index dim = Eigen::Index{1} << c.num_qubits;
  UnitaryMatrix u = UnitaryMatrix::Identity(dim, dim);
  for (const auto& op : c.ops) {
    if (op.is_measure()) continue;
    apply_gate(u, gate_matrix(op.name, op.params), op.qubits, c.num_qubits);
  }
  return u;
}

FidelityReport fidelity(const UnitaryMatrix& u_ref, const UnitaryMatrix& u_pred) {
  if (u_ref.rows() != u_pred.rows() || u_ref.cols() != u_pred.cols() || u_ref.rows() != u_ref.cols())
    throw std::invalid_argument("fidelity requires square matrices of equal dimension");
  FidelityReport report;
  report.dim = u_ref.rows();
  report.trace_overlap = u_ref.conjugate().cwiseProduct(u_pred).sum();
  const double d = static_cast<double>(report.dim);
  report.fidelity = std::clamp(std::norm(report.trace_overlap) / (d * d), 0.0, 1.0);
  return report;
}

}  // namespace qasmtx
