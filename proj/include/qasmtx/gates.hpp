#pragma once

#include <complex>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace qasmtx {

using Complex = std::complex<double>;
/// Dense row-major-semantics complex matrix; dimension 2^n for n qubits.
using UnitaryMatrix = Eigen::MatrixXcd;

namespace gates {

Eigen::Matrix2cd x();
Eigen::Matrix2cd sx();
Eigen::Matrix2cd sxdg();
Eigen::Matrix2cd h();
Eigen::Matrix2cd s();
Eigen::Matrix2cd sdg();
Eigen::Matrix2cd t();
Eigen::Matrix2cd tdg();
/// exp(-i theta/2 X)
Eigen::Matrix2cd rx(double theta);
/// exp(-i theta/2 Y)
Eigen::Matrix2cd ry(double theta);
/// exp(-i theta/2 Z)
Eigen::Matrix2cd rz(double theta);
/// First operand is the control and the most significant bit.
Eigen::Matrix4cd cx();
Eigen::Matrix4cd cz();
/// exp(-i theta/2 X⊗X)
Eigen::Matrix4cd rxx(double theta);

}  // namespace gates

struct GateDef {
  std::string name;
  int arity = 1;
  int param_count = 0;
  std::function<UnitaryMatrix(std::span<const double>)> matrix;
};

const std::vector<GateDef>& gate_catalog();

/// nullptr when the name is not in the catalog.
const GateDef* find_gate(std::string_view name);

/// Throws std::invalid_argument for unknown gates or a wrong parameter count.
UnitaryMatrix gate_matrix(std::string_view name, std::span<const double> params);

bool is_unitary(const UnitaryMatrix& u, double tol = 1e-10);

}  // namespace qasmtx
