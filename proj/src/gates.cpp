#include "qasmtx/gates.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qasmtx {

namespace gates {

namespace {
constexpr Complex kI{0.0, 1.0};
}

Eigen::Matrix2cd x() {
  Eigen::Matrix2cd m;
  m << 0, 1, 1, 0;
  return m;
}

Eigen::Matrix2cd sx() {
  Eigen::Matrix2cd m;
  m << Complex(1, 1), Complex(1, -1), Complex(1, -1), Complex(1, 1);
  return 0.5 * m;
}

Eigen::Matrix2cd sxdg() { return sx().adjoint(); }

Eigen::Matrix2cd h() {
  Eigen::Matrix2cd m;
  m << 1, 1, 1, -1;
  return m / std::sqrt(2.0);
}

Eigen::Matrix2cd s() {
  Eigen::Matrix2cd m;
  m << 1, 0, 0, kI;
  return m;
}

Eigen::Matrix2cd sdg() { return s().adjoint(); }

Eigen::Matrix2cd t() {
  Eigen::Matrix2cd m;
  m << 1, 0, 0, std::exp(kI * (std::numbers::pi / 4));
  return m;
}

Eigen::Matrix2cd tdg() { return t().adjoint(); }

Eigen::Matrix2cd rx(double theta) {
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  Eigen::Matrix2cd m;
  m << c, -kI * s, -kI * s, c;
  return m;
}

Eigen::Matrix2cd ry(double theta) {
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  Eigen::Matrix2cd m;
  m << c, -s, s, c;
  return m;
}

Eigen::Matrix2cd rz(double theta) {
  Eigen::Matrix2cd m;
  m << std::exp(-kI * (theta / 2)), 0, 0, std::exp(kI * (theta / 2));
  return m;
}

Eigen::Matrix4cd cx() {
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
  m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1;
  return m;
}

Eigen::Matrix4cd cz() {
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Identity();
  m(3, 3) = -1;
  return m;
}

Eigen::Matrix4cd rxx(double theta) {
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
  for (int i = 0; i < 4; ++i) {
    m(i, i) = c;
    m(i, 3 - i) = -kI * s;
  }
  return m;
}

}  // namespace gates

namespace {

template <typename F>
GateDef fixed(std::string name, int arity, F f) {
  return {std::move(name), arity, 0, [f](std::span<const double>) -> UnitaryMatrix { return f(); }};
}

template <typename F>
GateDef rotation(std::string name, int arity, F f) {
  return {std::move(name), arity, 1,
          [f](std::span<const double> p) -> UnitaryMatrix { return f(p[0]); }};
}

std::vector<GateDef> build_catalog() {
  return {
      fixed("x", 1, gates::x),       fixed("sx", 1, gates::sx),     fixed("sxdg", 1, gates::sxdg),
      rotation("rz", 1, gates::rz),  rotation("rx", 1, gates::rx),  rotation("ry", 1, gates::ry),
      fixed("cx", 2, gates::cx),     fixed("cz", 2, gates::cz),     rotation("rxx", 2, gates::rxx),
      fixed("h", 1, gates::h),       fixed("t", 1, gates::t),       fixed("tdg", 1, gates::tdg),
      fixed("s", 1, gates::s),       fixed("sdg", 1, gates::sdg),
  };
}

}  // namespace

const std::vector<GateDef>& gate_catalog() {
  static const std::vector<GateDef> catalog = build_catalog();
  return catalog;
}

const GateDef* find_gate(std::string_view name) {
  for (const auto& g : gate_catalog())
    if (g.name == name) return &g;
  return nullptr;
}

UnitaryMatrix gate_matrix(std::string_view name, std::span<const double> params) {
  const GateDef* def = find_gate(name);
  if (def == nullptr) throw std::invalid_argument("unknown gate '" + std::string(name) + "'");
  if (static_cast<int>(params.size()) != def->param_count)
    throw std::invalid_argument("gate '" + def->name + "' expects " +
                                std::to_string(def->param_count) + " parameter(s)");
  return def->matrix(params);
}

bool is_unitary(const UnitaryMatrix& u, double tol) {
  if (u.rows() != u.cols()) return false;
  const auto eye = UnitaryMatrix::Identity(u.rows(), u.cols());
  return (u.adjoint() * u - eye).norm() <= tol;
}

}  // namespace qasmtx
