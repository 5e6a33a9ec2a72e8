#include "qasmtx/gate_set.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>

namespace qasmtx {

bool GateSetConfig::contains(std::string_view gate) const {
  return std::find(gates.begin(), gates.end(), gate) != gates.end();
}

bool GateSetConfig::has_rule(std::string_view gate) const {
  return rules.find(std::string(gate)) != rules.end();
}

namespace gate_sets {

namespace {

constexpr double kPi = std::numbers::pi;

TemplateOp fixed(std::string gate, std::vector<int> slots) {
  return {std::move(gate), std::move(slots), 0.0, 0.0, false};
}

TemplateOp constant(std::string gate, std::vector<int> slots, double angle) {
  return {std::move(gate), std::move(slots), 0.0, angle, true};
}

TemplateOp follow(std::string gate, std::vector<int> slots, double offset = 0.0) {
  return {std::move(gate), std::move(slots), 1.0, offset, true};
}

RewriteRule join(std::initializer_list<RewriteRule> parts) {
  RewriteRule out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

// IBM single-qubit building blocks over {rz, sx}.
RewriteRule ibm_h(int q) {
  return {constant("rz", {q}, kPi / 2), fixed("sx", {q}), constant("rz", {q}, kPi / 2)};
}

RewriteRule ibm_rx(int q) {
  return {constant("rz", {q}, kPi / 2), fixed("sx", {q}), follow("rz", {q}, kPi),
          fixed("sx", {q}), constant("rz", {q}, kPi / 2)};
}

void ibm_single_qubit_rules(std::map<std::string, RewriteRule>& rules) {
  rules["h"] = ibm_h(0);
  rules["rx"] = ibm_rx(0);
  rules["ry"] = {fixed("sx", {0}), follow("rz", {0}, kPi), fixed("sx", {0}),
                 constant("rz", {0}, kPi)};
  rules["s"] = {constant("rz", {0}, kPi / 2)};
  rules["sdg"] = {constant("rz", {0}, -kPi / 2)};
  rules["t"] = {constant("rz", {0}, kPi / 4)};
  rules["tdg"] = {constant("rz", {0}, -kPi / 4)};
  rules["sxdg"] = {constant("rz", {0}, kPi), fixed("sx", {0}), constant("rz", {0}, kPi)};
}

RewriteRule ionq_h(int q) { return {constant("ry", {q}, kPi / 2), constant("rx", {q}, kPi)}; }

RewriteRule ionq_cx() {
  return {constant("ry", {0}, kPi / 2), constant("rxx", {0, 1}, kPi / 2),
          constant("rx", {1}, -kPi / 2), constant("rx", {0}, -kPi / 2),
          constant("ry", {0}, -kPi / 2)};
}

// exp(-i theta/2 XX) = (H⊗H) CX (I⊗Rz(theta)) CX (H⊗H)
RewriteRule rxx_via(const RewriteRule& h0, const RewriteRule& h1, const RewriteRule& cx) {
  return join({h0, h1, cx, {follow("rz", {1})}, cx, h0, h1});
}

GateSetConfig make_eagle() {
  GateSetConfig g;
  g.name = "eagle";
  g.gates = {"rz", "sx", "x", "cx"};
  ibm_single_qubit_rules(g.rules);
  g.rules["cz"] = join({ibm_h(1), {fixed("cx", {0, 1})}, ibm_h(1)});
  g.rules["rxx"] = rxx_via(ibm_h(0), ibm_h(1), {fixed("cx", {0, 1})});
  g.global_phase_note = "h, rx, ry, s, t, sxdg rewrites hold up to a global phase";
  return g;
}

GateSetConfig make_heron() {
  GateSetConfig g;
  g.name = "heron";
  g.gates = {"cz", "rz", "sx", "x"};
  ibm_single_qubit_rules(g.rules);
  const RewriteRule cx = join({ibm_h(1), {fixed("cz", {0, 1})}, ibm_h(1)});
  g.rules["cx"] = cx;
  g.rules["rxx"] = rxx_via(ibm_h(0), ibm_h(1), cx);
  g.global_phase_note = "cx becomes h-conjugated cz; single-qubit rewrites hold up to a global phase";
  return g;
}

GateSetConfig make_ionq() {
  GateSetConfig g;
  g.name = "ionq";
  g.gates = {"rx", "ry", "rz", "rxx"};
  g.rules["x"] = {constant("rx", {0}, kPi)};
  g.rules["sx"] = {constant("rx", {0}, kPi / 2)};
  g.rules["sxdg"] = {constant("rx", {0}, -kPi / 2)};
  g.rules["h"] = ionq_h(0);
  g.rules["s"] = {constant("rz", {0}, kPi / 2)};
  g.rules["sdg"] = {constant("rz", {0}, -kPi / 2)};
  g.rules["t"] = {constant("rz", {0}, kPi / 4)};
  g.rules["tdg"] = {constant("rz", {0}, -kPi / 4)};
  g.rules["cx"] = ionq_cx();
  g.rules["cz"] = join({ionq_h(1), ionq_cx(), ionq_h(1)});
  g.global_phase_note = "x, sx, sxdg map to rx rotations; equality holds up to a global phase";
  return g;
}

RewriteRule conj_h(RewriteRule middle) {
  return join({{fixed("h", {0})}, middle, {fixed("h", {0})}});
}

RewriteRule cz_via_cx() { return {fixed("h", {1}), fixed("cx", {0, 1}), fixed("h", {1})}; }

GateSetConfig make_clifford_t() {
  GateSetConfig g;
  g.name = "clifford_t";
  g.gates = {"h", "t", "tdg", "cx"};
  const TemplateOp t = fixed("t", {0}), tdg = fixed("tdg", {0});
  g.rules["s"] = {t, t};
  g.rules["sdg"] = {tdg, tdg};
  g.rules["x"] = conj_h({t, t, t, t});
  g.rules["sx"] = conj_h({t, t});
  g.rules["sxdg"] = conj_h({tdg, tdg});
  g.rules["cz"] = cz_via_cx();
  g.global_phase_note = "rotations have no exact rewrite; decompose them first";
  return g;
}

GateSetConfig make_clifford_s() {
  GateSetConfig g;
  g.name = "clifford_s";
  g.gates = {"h", "s", "sdg", "cx"};
  const TemplateOp s = fixed("s", {0}), sdg = fixed("sdg", {0});
  g.rules["x"] = conj_h({s, s});
  g.rules["sx"] = conj_h({s});
  g.rules["sxdg"] = conj_h({sdg});
  g.rules["cz"] = cz_via_cx();
  g.global_phase_note = "Clifford-only set; t and rotations have no rewrite";
  return g;
}

GateSetConfig make_clifford_sx() {
  GateSetConfig g;
  g.name = "clifford_sx";
  g.gates = {"h", "sx", "sxdg", "cx"};
  const TemplateOp sx = fixed("sx", {0}), sxdg = fixed("sxdg", {0});
  g.rules["x"] = {sx, sx};
  g.rules["s"] = conj_h({sx});
  g.rules["sdg"] = conj_h({sxdg});
  g.rules["cz"] = cz_via_cx();
  g.global_phase_note = "Clifford-only set; t and rotations have no rewrite";
  return g;
}

}  // namespace

const GateSetConfig& eagle() {
  static const GateSetConfig g = make_eagle();
  return g;
}
const GateSetConfig& ionq() {
  static const GateSetConfig g = make_ionq();
  return g;
}
const GateSetConfig& heron() {
  static const GateSetConfig g = make_heron();
  return g;
}
const GateSetConfig& clifford_t() {
  static const GateSetConfig g = make_clifford_t();
  return g;
}
const GateSetConfig& clifford_s() {
  static const GateSetConfig g = make_clifford_s();
  return g;
}
const GateSetConfig& clifford_sx() {
  static const GateSetConfig g = make_clifford_sx();
  return g;
}

const GateSetConfig& by_name(std::string_view name) {
  if (name == "eagle") return eagle();
  if (name == "ionq") return ionq();
  if (name == "heron") return heron();
  if (name == "clifford_t") return clifford_t();
  if (name == "clifford_s") return clifford_s();
  if (name == "clifford_sx") return clifford_sx();
  throw std::invalid_argument("unknown gate set '" + std::string(name) + "'");
}

std::vector<std::string> names() {
  return {"eagle", "ionq", "heron", "clifford_t", "clifford_s", "clifford_sx"};
}

}  // namespace gate_sets

}  // namespace qasmtx
