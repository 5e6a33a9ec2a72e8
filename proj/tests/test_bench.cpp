#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "qasmtx/bench.hpp"

using namespace qasmtx;

namespace {

const Vocabulary& vocab() {
  static const Vocabulary v;
  return v;
}

}  // namespace

TEST(FitLine, RecoversExactLine) {
  const auto f = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
  EXPECT_NEAR(f.slope, 2, 1e-12);
  EXPECT_NEAR(f.intercept, 1, 1e-12);
  EXPECT_NEAR(f.r2, 1, 1e-12);
  EXPECT_NEAR(f.slope_se, 0, 1e-12);
  EXPECT_THROW(fit_line({1}, {1}), std::invalid_argument);
  EXPECT_THROW(fit_line({2, 2}, {1, 3}), std::invalid_argument);
}

TEST(FitLine, MatchesHandComputedRegression) {
  // x = 1..5, y = 2, 4, 5, 4, 5: slope 0.6, intercept 2.2, r2 0.6.
  const auto f = fit_line({1, 2, 3, 4, 5}, {2, 4, 5, 4, 5});
  EXPECT_NEAR(f.slope, 0.6, 1e-12);
  EXPECT_NEAR(f.intercept, 2.2, 1e-12);
  EXPECT_NEAR(f.r2, 0.6, 1e-12);
}

TEST(Scaling, DepthSweepIsLinear) {
  TokenSweep s;
  const auto r = measure_tokens(s, vocab());
  ASSERT_EQ(r.rows.size(), 20u);
  EXPECT_GE(r.fit.r2, 0.99);
  EXPECT_GT(r.fit.slope, 0);
  EXPECT_LE(r.per_gate.slope, kMaxTokensPerGate);
  EXPECT_GT(r.per_gate.r2, 0.9);
  for (const auto& row : r.rows) EXPECT_GT(row.measured_tokens, 0);
}

TEST(Scaling, QubitSweepIsMonotone) {
  TokenSweep s;
  s.axis = SweepAxis::Qubits;
  s.fixed = 10;
  s.from = 1;
  s.to = 5;
  const auto r = measure_tokens(s, vocab());
  for (std::size_t i = 1; i < r.rows.size(); ++i) EXPECT_GE(r.rows[i].measured_tokens, r.rows[i - 1].measured_tokens);
  EXPECT_GE(r.fit.r2, 0.99);
}

TEST(Scaling, DepthZeroIsHeaderOnly) {
  TokenSweep s;
  s.from = s.to = 0;
  const auto r = measure_tokens(s, vocab());
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_TRUE(r.rows[0].constant);
  EXPECT_EQ(r.rows[0].mean_source_tokens, 11.0);
  EXPECT_EQ(r.rows[0].mean_gates, 0.0);
}

TEST(Scaling, BudgetIdentity) {
  const auto b = token_budget(vocab(), "eagle", "ionq");
  EXPECT_EQ(b.n_g, 8);
  EXPECT_EQ(b.p_ang, 128);
  EXPECT_EQ(b.per_gate(), 5 + 8 + 128);
  TokenSweep s;
  s.to = 3;
  for (const auto& row : measure_tokens(s, vocab()).rows) EXPECT_DOUBLE_EQ(row.budget_size, row.mean_gates * 141);
}

TEST(Scaling, CsvIsReproducible) {
  TokenSweep s;
  s.to = 5;
  s.seed = 9;
  std::ostringstream a, b;
  write_scaling_csv(a, s, measure_tokens(s, vocab()));
  write_scaling_csv(b, s, measure_tokens(s, vocab()));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), scaling_csv_header());
  s.seed = 10;
  std::ostringstream c;
  write_scaling_csv(c, s, measure_tokens(s, vocab()));
  EXPECT_NE(a.str(), c.str());
}

TEST(Scaling, RejectsEmptySweep) {
  TokenSweep s;
  s.from = 5;
  s.to = 4;
  EXPECT_THROW(measure_tokens(s, vocab()), std::invalid_argument);
  EXPECT_THROW(parse_axis("width"), std::invalid_argument);
}

namespace {

const SolovayKitaev& sk() {
  static const SolovayKitaev s([] {
    SkConfig c;
    c.recursion_depth = 3;
    return c;
  }());
  return s;
}

}  // namespace

TEST(SkGrowth, LengthGrowsAsDistanceShrinks) {
  const auto r = measure_sk_growth({std::numbers::pi / 8, 1.0, 2.5}, sk());
  ASSERT_EQ(r.rows.size(), 12u);
  for (std::size_t i = 1; i < r.rows.size(); ++i) {
    if (r.rows[i].depth == 0) continue;
    EXPECT_LE(r.rows[i].distance, r.rows[i - 1].distance);
    if (r.rows[i].distance < r.rows[i - 1].distance) {
      EXPECT_GE(r.rows[i].length, r.rows[i - 1].length);
    }
  }
  EXPECT_TRUE(std::isfinite(r.c));
  EXPECT_LE(r.c_low, r.c);
  EXPECT_GE(r.c_high, r.c);
}

TEST(SkGrowth, BasisTargetStaysOneGate) {
  const auto r = measure_sk_growth({std::numbers::pi / 4}, sk());
  for (const auto& row : r.rows) EXPECT_EQ(row.length, 1u);
}
