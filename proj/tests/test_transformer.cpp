#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <numeric>

#include "qasmtx/checkpoint.hpp"
#include "qasmtx/gate_set.hpp"
#include "qasmtx/train.hpp"
#include "qasmtx/transpile.hpp"
#include "qasmtx/unitary.hpp"

using namespace qasmtx;

namespace {

const Vocabulary& vocab() {
  static const Vocabulary v;
  return v;
}

std::vector<int> random_ids(Rng& rng, int n, int V) {
  std::vector<int> ids{1};
  while (static_cast<int>(ids.size()) < n) ids.push_back(5 + static_cast<int>(rng.index(V - 5)));
  return ids;
}

Transformer<double> jittered_toy(std::uint64_t seed) {
  Transformer<double> m(ModelConfig::toy(vocab().size()), seed);
  Rng rng(seed + 99);
  for (auto& p : m.params()) p += 0.05 * rng.normal();
  return m;
}

double ce_loss(const Transformer<double>& m, const std::vector<int>& src, const std::vector<int>& tgt) {
  const auto logits = m.forward(src, {tgt.begin(), tgt.end() - 1});
  return smoothed_ce(logits, {tgt.begin() + 1, tgt.end()}, 0.1, 0);
}

}  // namespace

TEST(Config, PaperPresetInventoryCount) {
  EXPECT_EQ(parameter_count(ModelConfig::paper()), 80358915u);
}

TEST(Config, ToyPresetShape) {
  const auto c = ModelConfig::toy(171);
  EXPECT_EQ(c.d_model, 64);
  EXPECT_EQ(c.d_ff, 128);
  EXPECT_EQ(c.heads * c.d_k, c.d_model);
  EXPECT_EQ(c.context_window, 256);
  EXPECT_EQ(ModelConfig::from_json(c.to_json()), c);
}

TEST(Config, RejectsInvalid) {
  auto c = ModelConfig::toy(10);
  c.d_k = 15;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ModelConfig::toy(10);
  c.context_window = 7;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(ModelConfig::toy(0).validate(), std::invalid_argument);
}

TEST(Forward, RejectsOverflowAndUnknownIds) {
  auto cfg = ModelConfig::toy(20);
  cfg.context_window = 8;
  const Transformer<float> m(cfg, 1);
  EXPECT_THROW(m.forward(std::vector<int>(9, 1), {1}), std::invalid_argument);
  EXPECT_THROW(m.forward({1, 20}, {1}), std::invalid_argument);
  EXPECT_NO_THROW(m.forward(std::vector<int>(8, 1), {1}));
}

TEST(Attention, SingleTokenReturnsValueProjection) {
  const Transformer<double> m = jittered_toy(3);
  const auto& w = m.weights().enc[0].attn;
  Rng rng(4);
  nn::Mat<double> x(1, 64);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const auto out = nn::attention(x, x, w, 4, nullptr, false);
  const auto expect = nn::linear(nn::linear(x, w.v), w.o);
  EXPECT_LT((out - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Attention, RowsSumToOneEverywhere) {
  const Transformer<float> m(ModelConfig::toy(vocab().size()), 5);
  Rng rng(6);
  Transformer<float>::Cache c;
  std::vector<int> src = random_ids(rng, 17, vocab().size());
  src.push_back(0);
  src.push_back(0);
  m.forward(src, random_ids(rng, 13, vocab().size()), &c);
  auto check = [](const nn::AttentionCache<float>& a) {
    for (const auto& p : a.probs)
      for (Eigen::Index i = 0; i < p.rows(); ++i) EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-6);
  };
  for (const auto& l : c.enc) check(l.attn);
  for (const auto& l : c.dec) {
    check(l.self_attn);
    check(l.cross_attn);
  }
  for (const auto& p : c.enc[0].attn.probs) EXPECT_EQ(p.col(src.size() - 1).cwiseAbs().maxCoeff(), 0.0f);
}

TEST(Forward, CausalMaskProperty) {
  const Transformer<double> m = jittered_toy(7);
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto src = random_ids(rng, 5 + static_cast<int>(rng.index(20)), vocab().size());
    auto tgt = random_ids(rng, 3 + static_cast<int>(rng.index(20)), vocab().size());
    const auto a = m.forward(src, tgt);
    const int i = static_cast<int>(rng.index(tgt.size() - 1));
    for (std::size_t j = i + 1; j < tgt.size(); ++j) tgt[j] = static_cast<int>(rng.index(vocab().size()));
    const auto b = m.forward(src, tgt);
    EXPECT_LT((a.topRows(i + 1) - b.topRows(i + 1)).cwiseAbs().maxCoeff(), 1e-12) << "trial " << trial;
  }
}

TEST(Forward, TrailingSourcePadsAreInvisible) {
  const Transformer<double> m = jittered_toy(9);
  Rng rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    auto src = random_ids(rng, 4 + static_cast<int>(rng.index(15)), vocab().size());
    const auto tgt = random_ids(rng, 2 + static_cast<int>(rng.index(15)), vocab().size());
    const auto a = m.forward(src, tgt);
    src.resize(src.size() + 1 + rng.index(6), 0);
    const auto b = m.forward(src, tgt);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Forward, DeterministicInInferenceMode) {
  auto cfg = ModelConfig::toy(vocab().size());
  cfg.dropout = 0.1;
  const Transformer<float> m(cfg, 11);
  const std::vector<int> src{1, 7, 9, 2}, tgt{1, 8, 8};
  EXPECT_EQ(m.forward(src, tgt), m.forward(src, tgt));
  Rng drop(1);
  EXPECT_NE(m.forward(src, tgt, nullptr, &drop), m.forward(src, tgt));
}

TEST(Decode, IncrementalStepsMatchFullForward) {
  const Transformer<double> m = jittered_toy(12);
  Rng rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    auto src = random_ids(rng, 6 + static_cast<int>(rng.index(20)), vocab().size());
    src.push_back(0);
    const auto tgt = random_ids(rng, 2 + static_cast<int>(rng.index(20)), vocab().size());
    const auto full = m.forward(src, tgt);
    auto st = m.start(src, static_cast<int>(tgt.size()));
    for (std::size_t t = 0; t < tgt.size(); ++t)
      EXPECT_LT((m.step(st, tgt[t]) - full.row(t)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_THROW(m.step(st, 1), std::out_of_range);
  }
}

TEST(Gradient, MatchesCentralDifferencesOnEveryTensor) {
  Transformer<double> m = jittered_toy(14);
  Rng rng(15);
  auto src = random_ids(rng, 12, vocab().size());
  src.push_back(0);
  const auto tgt = random_ids(rng, 10, vocab().size());

  Transformer<double>::Cache cache;
  nn::Mat<double> dl;
  const auto logits = m.forward(src, {tgt.begin(), tgt.end() - 1}, &cache);
  smoothed_ce(logits, {tgt.begin() + 1, tgt.end()}, 0.1, 0, &dl);
  nn::Buffer<double> grad(m.params().size(), 0.0);
  m.backward(cache, dl, grad);

  const double h = 1e-5;
  double worst = 0;
  std::string worst_name;
  for (const auto& spec : parameter_inventory(m.config())) {
    std::vector<std::size_t> picks;
    if (spec.name == "embed") {
      for (int k = 0; k < 3; ++k) picks.push_back(src[1 + k] * spec.cols + rng.index(spec.cols));
      for (int k = 0; k < 3; ++k) picks.push_back(tgt[1 + k] * spec.cols + rng.index(spec.cols));
    }
    while (picks.size() < 8) picks.push_back(rng.index(spec.size()));
    for (std::size_t k : picks) {
      double& p = m.params()[spec.offset + k];
      const double saved = p;
      p = saved + h;
      const double up = ce_loss(m, src, tgt);
      p = saved - h;
      const double down = ce_loss(m, src, tgt);
      p = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grad[spec.offset + k];
      const double scale = std::max(std::abs(numeric), std::abs(analytic));
      if (scale < 1e-9) continue;
      const double rel = std::abs(numeric - analytic) / scale;
      if (rel > worst) worst = rel, worst_name = spec.name;
      EXPECT_LT(rel, 1e-4) << spec.name << "[" << k << "] analytic " << analytic << " numeric " << numeric;
    }
  }
  RecordProperty("worst_relative_error", std::to_string(worst) + " at " + worst_name);
}

TEST(Gradient, PadTargetsContributeNothing) {
  const Transformer<double> m = jittered_toy(16);
  const std::vector<int> src{1, 20, 30, 2};
  const auto logits = m.forward(src, {1, 40, 41});
  nn::Mat<double> dl;
  const double a = smoothed_ce(logits, {40, 41, 0}, 0.1, 0, &dl);
  const double b = smoothed_ce(nn::Mat<double>(logits.topRows(2)), {40, 41}, 0.1, 0);
  EXPECT_NEAR(a, b, 1e-12);
  EXPECT_EQ(dl.row(2).cwiseAbs().maxCoeff(), 0.0);
}

TEST(SmoothedCe, ZeroEpsilonIsPlainCrossEntropy) {
  Rng rng(17);
  nn::Mat<double> logits(4, 11);
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = rng.normal();
  const std::vector<int> t{3, 0 + 1, 10, 5};
  double expect = 0;
  for (int i = 0; i < 4; ++i) {
    const double lse = std::log(logits.row(i).array().exp().sum());
    expect -= logits(i, t[i]) - lse;
  }
  EXPECT_NEAR(smoothed_ce(logits, t, 0.0, -1), expect / 4, 1e-12);
}

TEST(SmoothedCe, TargetDistributionForElevenClasses) {
  nn::Mat<double> logits = nn::Mat<double>::Zero(1, 11);
  nn::Mat<double> dl;
  smoothed_ce(logits, {4}, 0.1, -1, &dl);
  for (int j = 0; j < 11; ++j) EXPECT_NEAR(1.0 / 11 - dl(0, j), j == 4 ? 0.9 : 0.01, 1e-15);
}

TEST(SmoothedCe, PerfectPredictorHitsTheEntropyFloor) {
  for (auto [V, floor] : {std::pair{11, 0.5553414826908528}, std::pair{171, 0.8386628170964745}}) {
    EXPECT_NEAR(smoothed_entropy(V, 0.1), floor, 1e-12);
    nn::Mat<double> logits(3, V);
    const std::vector<int> t{0, 1, V - 1};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < V; ++j) logits(i, j) = std::log(j == t[i] ? 0.9 : 0.1 / (V - 1)) + 3.0 * i;
    EXPECT_NEAR(smoothed_ce(logits, t, 0.1, -1), floor, 1e-9);
  }
}

TEST(SmoothedCe, NeverBelowTheFloor) {
  Rng rng(18);
  for (int trial = 0; trial < 2000; ++trial) {
    const int V = 2 + static_cast<int>(rng.index(200));
    const double eps = rng.uniform(0.0, 0.5);
    nn::Mat<double> logits(3, V);
    for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = 4 * rng.normal();
    const std::vector<int> t{static_cast<int>(rng.index(V)), static_cast<int>(rng.index(V)),
                             static_cast<int>(rng.index(V))};
    EXPECT_GE(smoothed_ce(logits, t, eps, -1), smoothed_entropy(V, eps) - 1e-12);
  }
}

TEST(SmoothedCe, RejectsShapeMismatch) {
  nn::Mat<double> logits = nn::Mat<double>::Zero(2, 5);
  EXPECT_THROW(smoothed_ce(logits, {1}, 0.1, 0), std::invalid_argument);
  EXPECT_THROW(smoothed_ce(logits, {0, 0}, 0.1, 0), std::invalid_argument);
  EXPECT_THROW(smoothed_ce(logits, {1, 5}, 0.1, 0), std::invalid_argument);
}

TEST(Schedule, LinearInterpolation) {
  LossConfig lc;
  lc.schedule = {{0, 0.0, 1.0}, {1000, 0.5, 1.0}};
  EXPECT_DOUBLE_EQ(lc.at(500).alpha, 0.25);
  EXPECT_DOUBLE_EQ(lc.at(500).beta, 1.0);
  EXPECT_DOUBLE_EQ(lc.at(5000).alpha, 0.5);
  const auto std_lc = LossConfig::standard(1000);
  EXPECT_DOUBLE_EQ(std_lc.at(299).alpha, 0.0);
  EXPECT_DOUBLE_EQ(std_lc.at(1000).alpha, 0.5);
  EXPECT_DOUBLE_EQ(std_lc.at(650).alpha, 0.25);
  lc.schedule = {{0, 0.0, 0.0}};
  EXPECT_THROW(lc.validate(), std::invalid_argument);
  lc.schedule = {{10, 0.1, 1.0}, {5, 0.1, 1.0}};
  EXPECT_THROW(lc.validate(), std::invalid_argument);
}

TEST(Sampling, TemperatureOneIsSoftmax) {
  const std::vector<double> logits{0.3, -1.2, 2.0, 0.0};
  DecodeConfig dc;
  dc.strategy = DecodeStrategy::Temperature;
  const auto p = sampling_distribution(logits, dc);
  double z = 0;
  for (double l : logits) z += std::exp(l);
  for (std::size_t i = 0; i < logits.size(); ++i) EXPECT_NEAR(p[i], std::exp(logits[i]) / z, 1e-15);
  dc.temperature = 0.5;
  const auto sharp = sampling_distribution(logits, dc);
  EXPECT_GT(sharp[2], p[2]);
}

TEST(Sampling, TopKAndTopP) {
  const std::vector<double> logits{std::log(0.1), std::log(0.5), std::log(0.15), std::log(0.25)};
  DecodeConfig dc;
  dc.strategy = DecodeStrategy::TopK;
  dc.top_k = 2;
  auto p = sampling_distribution(logits, dc);
  EXPECT_NEAR(p[1], 0.5 / 0.75, 1e-12);
  EXPECT_NEAR(p[3], 0.25 / 0.75, 1e-12);
  EXPECT_EQ(p[0], 0.0);
  dc.strategy = DecodeStrategy::TopP;
  dc.top_p = 0.8;
  p = sampling_distribution(logits, dc);
  EXPECT_NEAR(p[2], 0.15 / 0.9, 1e-12);
  EXPECT_EQ(p[0], 0.0);
  dc.top_p = 1 - 1e-12;
  p = sampling_distribution(logits, dc);
  for (double x : p) EXPECT_GT(x, 0.0);
}

TEST(Sampling, ConfigValidation) {
  DecodeConfig dc;
  dc.temperature = 0;
  EXPECT_THROW(dc.validate(256), std::invalid_argument);
  dc = {};
  dc.top_k = 0;
  EXPECT_THROW(dc.validate(256), std::invalid_argument);
  dc = {};
  dc.top_p = 1.5;
  EXPECT_THROW(dc.validate(256), std::invalid_argument);
  dc = {};
  dc.max_len = 300;
  EXPECT_THROW(dc.validate(256), std::invalid_argument);
  EXPECT_EQ(parse_strategy(to_string(DecodeStrategy::TopP)), DecodeStrategy::TopP);
  EXPECT_THROW(parse_strategy("beam"), std::invalid_argument);
}

TEST(Decode, TopKOneEqualsGreedy) {
  const Transformer<float> m(ModelConfig::toy(vocab().size()), 19);
  Rng ids(20);
  for (int trial = 0; trial < 5; ++trial) {
    const auto src = random_ids(ids, 12, vocab().size());
    DecodeConfig greedy;
    greedy.max_len = 40;
    DecodeConfig k1 = greedy;
    k1.strategy = DecodeStrategy::TopK;
    Rng rng(trial);
    EXPECT_EQ(decode_sequence(m, src, greedy, 1, 2), decode_sequence(m, src, k1, 1, 2, &rng));
  }
}

namespace {

std::vector<Example> tiny_examples(int n, int qubits, std::uint64_t seed) {
  std::vector<Example> out;
  for (int i = 0; i < n; ++i) {
    RandomCircuitSpec rc{qubits, 1 + i % 3, false, seed + i};
    const Circuit src = random_circuit(rc, gate_sets::eagle());
    const Circuit tgt = transpile_rules(src, gate_sets::ionq());
    out.push_back({encode(src, vocab()).ids, encode(tgt, vocab()).ids, qubits, circuit_unitary(tgt)});
  }
  return out;
}

}  // namespace

TEST(Eval, UniformModelPerplexityIsVocabularySize) {
  Transformer<float> m(ModelConfig::toy(vocab().size()), 21);
  auto& out = m.weights().out;
  out.w.setZero();
  out.b.setZero();
  const auto r = evaluate(tiny_examples(4, 1, 22), m, vocab(), {});
  EXPECT_NEAR(r.perplexity, vocab().size(), 1e-9 * vocab().size());
  EXPECT_NEAR(r.perplexity, std::exp(r.ce), 1e-9);
}

TEST(Eval, ExactOutputsScoreOne) {
  auto ex = tiny_examples(6, 2, 23);
  for (auto& e : ex) {
    bool ok = false;
    const Circuit c = decode(e.tgt, vocab());
    std::size_t angles = 0;
    for (const auto& op : c.ops) angles += op.params.size();
    // Each binned angle is off by under one sector plus the rounding step.
    const double D = static_cast<double>(angles) * (std::numbers::pi / 128 + 0.005);
    EXPECT_GE(fidelity_of(e.tgt, e, vocab(), &ok), std::pow(1 - D * D / 2, 2));
    EXPECT_TRUE(ok);
    e.target_unitary = circuit_unitary(c);
    EXPECT_NEAR(fidelity_of(e.tgt, e, vocab()), 1.0, 1e-12);
  }
  bool ok = true;
  EXPECT_EQ(fidelity_of({1, 2}, ex[0], vocab(), &ok), 0.0);
  EXPECT_FALSE(ok);
}

TEST(Loss, AlphaZeroIsPureCrossEntropy) {
  const Transformer<float> m(ModelConfig::toy(vocab().size()), 24);
  const auto ex = tiny_examples(3, 1, 25);
  std::vector<const Example*> batch{&ex[0], &ex[1], &ex[2]};
  LossConfig lc;
  lc.schedule = {{0, 0.0, 0.7}};
  const auto lv = composite_loss(batch, m, vocab(), lc, 0);
  EXPECT_EQ(lv.total, 0.7 * lv.ce);
  EXPECT_FALSE(lv.fidelity_loss.has_value());
  EXPECT_THROW(composite_loss({}, m, vocab(), lc, 0), std::invalid_argument);
}

TEST(Loss, FidelityTermReportedWhenWeighted) {
  const Transformer<float> m(ModelConfig::toy(vocab().size()), 26);
  const auto ex = tiny_examples(2, 1, 27);
  LossConfig lc;
  lc.schedule = {{0, 0.5, 1.0}};
  nn::Buffer<float> grad(m.params().size(), 0.0f);
  const auto lv = composite_loss({&ex[0], &ex[1]}, m, vocab(), lc, 0, &grad);
  ASSERT_TRUE(lv.fidelity_loss.has_value());
  EXPECT_NEAR(*lv.fidelity_loss, 1.0, 1e-12);
  EXPECT_NEAR(lv.total, 0.5 * *lv.fidelity_loss + lv.ce, 1e-12);
}

TEST(Train, ZeroStepsKeepsInitialization) {
  Transformer<float> m(ModelConfig::toy(vocab().size()), 28);
  const auto init = m.params();
  TrainConfig tc;
  tc.steps = 0;
  const auto r = train(m, tiny_examples(4, 1, 29), {}, vocab(), LossConfig{}, OptimizerConfig{}, tc);
  EXPECT_TRUE(r.trace.empty());
  EXPECT_EQ(m.params(), init);
}

TEST(Train, ReproducibleAndDecreasing) {
  const auto ex = tiny_examples(8, 1, 30);
  TrainConfig tc;
  tc.steps = 40;
  tc.batch_size = 4;
  tc.seed = 31;
  OptimizerConfig oc;
  oc.lr = 1e-3;
  oc.warmup = 10;
  Transformer<float> a(ModelConfig::toy(vocab().size()), 32), b = a;
  const auto ra = train(a, ex, {}, vocab(), LossConfig{}, oc, tc);
  const auto rb = train(b, ex, {}, vocab(), LossConfig{}, oc, tc);
  EXPECT_EQ(a.params(), b.params());
  ASSERT_EQ(ra.trace.size(), 40u);
  for (std::size_t i = 0; i < ra.trace.size(); ++i) EXPECT_EQ(trace_csv_row(ra.trace[i]), trace_csv_row(rb.trace[i]));
  EXPECT_LT(ra.trace.back().ce, ra.trace.front().ce);
}

TEST(Train, CsvLeavesFidelityBlankWhenUnweighted) {
  EXPECT_EQ(trace_csv_header(), "step,L,L_CE,L_F,lr,alpha,beta");
  EXPECT_EQ(trace_csv_row({3, 1.5, 1.5, std::nullopt, 1e-4, 0, 1}), "3,1.5,1.5,,0.0001,0,1");
  EXPECT_EQ(trace_csv_row({3, 1.5, 1.0, 1.0, 1e-4, 0.5, 1}), "3,1.5,1,1,0.0001,0.5,1");
}

TEST(Optimizer, WarmupThenInverseSqrt) {
  OptimizerConfig oc;
  oc.lr = 1e-3;
  oc.warmup = 100;
  EXPECT_NEAR(oc.rate(0), 1e-5, 1e-18);
  EXPECT_NEAR(oc.rate(99), 1e-3, 1e-15);
  EXPECT_NEAR(oc.rate(399), 5e-4, 1e-15);
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
  const auto dir = std::filesystem::temp_directory_path() / "qasmtx_ckpt_test";
  std::filesystem::remove_all(dir);
  Transformer<float> m(ModelConfig::toy(vocab().size()), 33);
  Rng rng(34);
  for (auto& p : m.params()) p += static_cast<float>(0.01 * rng.normal());
  save_checkpoint(dir, m, vocab(), 77);
  const Checkpoint ck = load_checkpoint(dir);
  EXPECT_EQ(ck.step, 77);
  EXPECT_EQ(ck.model.config(), m.config());
  EXPECT_EQ(ck.vocab.hash(), vocab().hash());
  EXPECT_EQ(ck.model.params(), m.params());
  const std::vector<int> src{1, 30, 40, 50, 2}, tgt{1, 60, 61};
  EXPECT_EQ(ck.model.forward(src, tgt), m.forward(src, tgt));
  EXPECT_EQ(std::filesystem::file_size(dir / "weights.bin"), 4 * m.params().size());
  std::filesystem::resize_file(dir / "weights.bin", 12);
  EXPECT_THROW(load_checkpoint(dir), std::runtime_error);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_checkpoint(dir), std::runtime_error);
}
