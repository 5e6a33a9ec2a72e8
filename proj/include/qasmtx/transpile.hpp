#pragma once

#include <cstdint>
#include <string>

#include "qasmtx/circuit.hpp"
#include "qasmtx/gate_set.hpp"
#include "qasmtx/rng.hpp"

namespace qasmtx {

struct RandomCircuitSpec {
  int num_qubits = 1;
  int depth = 1;
  bool include_measure = false;
  std::uint64_t seed = 0;
};

/// Picks a gate uniformly among those of `gs` whose arity fits in
/// `free_qubits`. Throws std::invalid_argument when none fits.
const std::string& draw_gate(Rng& rng, const GateSetConfig& gs, int free_qubits);

/// `depth` layers; each layer touches every qubit exactly once, filling the
/// shuffled free qubits left to right with uniformly drawn gates. Angles are
/// uniform in [0, 2π).
Circuit random_circuit(const RandomCircuitSpec& spec, const GateSetConfig& gs);

/// Rewrites every op outside `target` using its rule. Ops already in the
/// target pass through. Throws std::invalid_argument for a gate without a rule.
Circuit transpile_rules(const Circuit& c, const GateSetConfig& target);

}  // namespace qasmtx
