#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qasmtx/solovay_kitaev.hpp"
#include "qasmtx/tokenizer.hpp"

namespace qasmtx {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  /// Standard error of the slope.
  double slope_se = 0.0;
};

/// Ordinary least squares. Throws std::invalid_argument for fewer than two
/// points or a constant x. A constant y fits with r2 = 1.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

enum class SweepAxis { Qubits, Depth };

SweepAxis parse_axis(const std::string& name);
std::string to_string(SweepAxis a);

struct TokenSweep {
  SweepAxis axis = SweepAxis::Depth;
  /// Qubits for a depth sweep, depth for a qubit sweep.
  int fixed = 3;
  int from = 1;
  int to = 20;
  std::string source = "eagle";
  std::string target = "ionq";
  int samples = 30;
  std::uint64_t seed = 0;
};

/// Vocabulary-budget view: L = N_q + N_g + P_ang tokens per gate, S = m · L.
struct TokenBudget {
  int n_q = 0;
  int n_g = 0;
  int p_ang = 0;
  int per_gate() const { return n_q + n_g + p_ang; }
};

TokenBudget token_budget(const Vocabulary& v, const std::string& source, const std::string& target);

struct ScalingRow {
  int n_qubits = 0;
  int depth = 0;
  int samples = 0;
  double mean_gates = 0.0;
  double mean_source_tokens = 0.0;
  double mean_target_tokens = 0.0;
  /// Source plus target tokens per pair.
  double measured_tokens = 0.0;
  double budget_size = 0.0;
  bool constant = true;
  LinearFit fit;
};

struct ScalingReport {
  std::vector<ScalingRow> rows;
  /// measured_tokens against the swept value.
  LinearFit fit;
  /// Source tokens against source gates: the per-gate marginal cost.
  LinearFit per_gate;
  TokenBudget budget;
};

/// Emitted tokens for one gate at most: gate, three parameter tokens, two
/// operands and the separator.
inline constexpr int kMaxTokensPerGate = 7;

ScalingReport measure_tokens(const TokenSweep& sweep, const Vocabulary& v);

std::string scaling_csv_header();
void write_scaling_csv(std::ostream& out, const TokenSweep& sweep, const ScalingReport& r);

struct SkGrowthRow {
  double theta = 0.0;
  int depth = 0;
  double distance = 0.0;
  std::size_t length = 0;
  bool plateau = false;
};

struct SkGrowthReport {
  std::vector<SkGrowthRow> rows;
  /// log length = log a + c · log log(1/ε) over rows with 0 < ε < 1 and
  /// length > 1.
  double c = 0.0;
  double c_low = 0.0;
  double c_high = 0.0;
  double a = 0.0;
  std::size_t fit_points = 0;
  bool plateau = false;
};

/// Decomposes Rz(θ) for each θ at every depth 0..cfg.recursion_depth.
SkGrowthReport measure_sk_growth(const std::vector<double>& thetas, const SolovayKitaev& sk);

std::string sk_growth_csv_header();
void write_sk_growth_csv(std::ostream& out, const SkGrowthReport& r);

}  // namespace qasmtx
