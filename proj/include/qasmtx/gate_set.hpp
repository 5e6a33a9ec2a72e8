#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace qasmtx {

/// One op of a rewrite template. Qubit slots index the operands of the gate
/// being rewritten; the angle is `scale * theta + offset` where theta is the
/// rewritten gate's parameter (0 for fixed gates).
struct TemplateOp {
  std::string gate;
  std::vector<int> slots;
  double scale = 0.0;
  double offset = 0.0;
  bool parametric = false;
};

using RewriteRule = std::vector<TemplateOp>;

struct GateSetConfig {
  std::string name;
  std::vector<std::string> gates;
  std::map<std::string, RewriteRule> rules;
  std::string global_phase_note;

  bool contains(std::string_view gate) const;
  bool has_rule(std::string_view gate) const;
};

namespace gate_sets {

/// IBM Eagle: rz, sx, x, cx.
const GateSetConfig& eagle();
/// IonQ: rx, ry, rz, rxx.
const GateSetConfig& ionq();
/// IBM Heron: cz, rz, sx, x.
const GateSetConfig& heron();
/// h, t, tdg with cx kept native.
const GateSetConfig& clifford_t();
/// h, s, sdg with cx kept native. Not dense in SU(2).
const GateSetConfig& clifford_s();
/// h, sx, sxdg with cx kept native. Not dense in SU(2).
const GateSetConfig& clifford_sx();

/// Throws std::invalid_argument for an unknown name.
const GateSetConfig& by_name(std::string_view name);

std::vector<std::string> names();

}  // namespace gate_sets

}  // namespace qasmtx
