#pragma once

#include "qasmtx/circuit.hpp"
#include "qasmtx/gates.hpp"

namespace qasmtx {

inline constexpr int kDefaultQubitCap = 10;

/// Left-multiplies `u` (2^n × 2^n) by the gate embedded at `qubits`.
/// Qubit 0 is the most significant tensor factor.
void apply_gate(UnitaryMatrix& u, const UnitaryMatrix& gate, std::span<const int> qubits,
                int num_qubits);

/// U = U_m ⋯ U_1 over the unitary ops of `c`; measurements are skipped.
/// Throws std::invalid_argument above `qubit_cap` qubits.
UnitaryMatrix circuit_unitary(const Circuit& c, int qubit_cap = kDefaultQubitCap);

struct FidelityReport {
  double fidelity = 0.0;
  long dim = 0;
  Complex trace_overlap;
};

/// |Tr(U_ref† U_pred)|² / d². Throws std::invalid_argument on dimension mismatch.
FidelityReport fidelity(const UnitaryMatrix& u_ref, const UnitaryMatrix& u_pred);

inline double fidelity_loss(const UnitaryMatrix& u_ref, const UnitaryMatrix& u_pred) {
  return 1.0 - fidelity(u_ref, u_pred).fidelity;
}

}  // namespace qasmtx
