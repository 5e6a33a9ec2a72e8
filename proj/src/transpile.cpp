#include "qasmtx/transpile.hpp"

#include <numbers>
#include <stdexcept>
#include <vector>

#include "qasmtx/gates.hpp"

namespace qasmtx {

namespace {

int arity_of(const std::string& gate) {
  const GateDef* def = find_gate(gate);
  if (def == nullptr) throw std::invalid_argument("gate set lists unknown gate '" + gate + "'");
  return def->arity;
}

}  // namespace

const std::string& draw_gate(Rng& rng, const GateSetConfig& gs, int free_qubits) {
  std::vector<const std::string*> fits;
  for (const auto& g : gs.gates)
    if (arity_of(g) <= free_qubits) fits.push_back(&g);
  if (fits.empty())
    throw std::invalid_argument("gate set '" + gs.name + "' has no gate acting on " +
                                std::to_string(free_qubits) + " qubit(s)");
  return *fits[rng.index(fits.size())];
}

Circuit random_circuit(const RandomCircuitSpec& spec, const GateSetConfig& gs) {
  if (spec.num_qubits < 1) throw std::invalid_argument("random circuit needs at least one qubit");
  if (spec.depth < 0) throw std::invalid_argument("random circuit depth must be non-negative");
  Rng rng(spec.seed);
  Circuit c;
  c.num_qubits = spec.num_qubits;
  c.num_clbits = spec.include_measure ? spec.num_qubits : 0;
  std::vector<int> order(spec.num_qubits);
  for (int layer = 0; layer < spec.depth; ++layer) {
    for (int i = 0; i < spec.num_qubits; ++i) order[i] = i;
    // Fisher-Yates.
    for (int i = spec.num_qubits - 1; i > 0; --i)
      std::swap(order[i], order[rng.index(static_cast<std::uint64_t>(i) + 1)]);
    int next = 0;
    while (next < spec.num_qubits) {
      const std::string& name = draw_gate(rng, gs, spec.num_qubits - next);
      const GateDef* def = find_gate(name);
      GateApplication op;
      op.name = name;
      for (int k = 0; k < def->arity; ++k) op.qubits.push_back(order[next++]);
      for (int k = 0; k < def->param_count; ++k)
        op.params.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
      c.ops.push_back(std::move(op));
    }
  }
  if (spec.include_measure) {
    for (int q = 0; q < spec.num_qubits; ++q) {
      GateApplication m;
      m.name = "measure";
      m.qubits = {q};
      m.clbit = q;
      c.ops.push_back(std::move(m));
    }
  }
  return c;
}

Circuit transpile_rules(const Circuit& c, const GateSetConfig& target) {
  Circuit out;
  out.num_qubits = c.num_qubits;
  out.num_clbits = c.num_clbits;
  out.ops.reserve(c.ops.size());
  for (const auto& op : c.ops) {
    if (op.is_measure() || target.contains(op.name)) {
      out.ops.push_back(op);
      continue;
    }
    const auto it = target.rules.find(op.name);
    if (it == target.rules.end())
      throw std::invalid_argument("no rule rewrites '" + op.name + "' into gate set '" +
                                  target.name + "'");
    const double theta = op.params.empty() ? 0.0 : op.params[0];
    for (const TemplateOp& t : it->second) {
      GateApplication g;
      g.name = t.gate;
      for (int slot : t.slots) g.qubits.push_back(op.qubits.at(slot));
      if (t.parametric) g.params.push_back(t.scale * theta + t.offset);
      out.ops.push_back(std::move(g));
    }
  }
  return out;
}

}  // namespace qasmtx
