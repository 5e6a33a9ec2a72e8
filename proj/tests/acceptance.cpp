// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Usage: acceptance <qasmtx binary> <presets dir> [work dir]

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "qasmtx/bench.hpp"
#include "qasmtx/dataset.hpp"
#include "qasmtx/qasm.hpp"
#include "qasmtx/solovay_kitaev.hpp"
#include "qasmtx/train.hpp"
#include "qasmtx/transpile.hpp"
#include "qasmtx/unitary.hpp"

using namespace qasmtx;
namespace fs = std::filesystem;
using Eigen::Matrix2cd;

namespace {

constexpr double kPi = std::numbers::pi;

fs::path g_cli, g_presets, g_work;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void run(const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++g_failures;
  std::printf("%s  %-22s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const Vocabulary& vocab() {
  static const Vocabulary v;
  return v;
}

std::vector<DatasetRecord> make_records(const DatasetSpec& spec) {
  std::ostringstream out;
  build_dataset(spec, gate_sets::eagle(), gate_sets::ionq(), vocab(), out);
  std::istringstream in(out.str());
  std::vector<DatasetRecord> recs;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) recs.push_back(record_from_json(line));
  return recs;
}

int shell(const std::string& args, const fs::path& log) {
  const std::string cmd = "\"" + g_cli.string() + "\" " + args + " >>\"" + log.string() + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  return rc == 0 ? 0 : 1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return out;
}

double eig_distance(const Matrix2cd& u, const Matrix2cd& v) {
  Eigen::ComplexEigenSolver<Matrix2cd> es(u.adjoint() * v);
  const double delta = std::remainder(std::arg(es.eigenvalues()(0)) - std::arg(es.eigenvalues()(1)), 2 * kPi);
  return 2 * std::sin(std::abs(delta) / 4);
}

double brute_force_min(const std::vector<std::string>& names, int len, const Matrix2cd& u) {
  std::vector<Matrix2cd> mats;
  for (const auto& n : names) mats.emplace_back(gate_matrix(n, {}));
  double best = eig_distance(u, Matrix2cd::Identity());
  std::vector<int> idx;
  for (int l = 1; l <= len; ++l) {
    idx.assign(l, 0);
    while (true) {
      Matrix2cd m = Matrix2cd::Identity();
      for (int i : idx) m = mats[i] * m;
      best = std::min(best, eig_distance(u, m));
      int k = l - 1;
      while (k >= 0 && ++idx[k] == static_cast<int>(names.size())) idx[k--] = 0;
      if (k < 0) break;
    }
  }
  return best;
}

Matrix2cd random_unitary(Rng& rng) {
  return gates::rz(rng.uniform(0, 2 * kPi)) * gates::ry(rng.uniform(0, kPi)) * gates::rz(rng.uniform(0, 2 * kPi));
}

Outcome tokenizer_fixture() {
  const Circuit c = parse("OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[1];\nrz(3.19) q[0];\n");
  const auto ids = encode(c, vocab()).ids;
  bool has64 = false;
  for (int id : ids) has64 |= vocab().token(id) == "PARAM_64";
  const Circuit back = decode(ids, vocab());
  const double rec = back.ops.at(0).params.at(0);
  const AngleBinner& b = vocab().binner();
  Rng rng(101);
  double worst = 0;
  for (int k = 0; k < 10000; ++k) {
    const double theta = rng.uniform(-20, 20);
    worst = std::max(worst, std::abs(b.normalize(theta) - b.unbin(b.bin(theta))));
  }
  const bool ok = has64 && rec == kPi && worst < 2 * kPi / 128;
  return {ok, fmt("PARAM_64=%d rec=%.17g worst=%.4g bound=%.4g", has64, rec, worst, 2 * kPi / 128)};
}

Outcome oracle_soundness() {
  double worst = 1.0;
  long pairs = 0;
  for (const GateSetConfig* target : {&gate_sets::ionq(), &gate_sets::heron()})
    for (int n = 1; n <= 5; ++n)
      for (int k = 0; k < 1000; ++k) {
        Rng rng(splitmix64(static_cast<std::uint64_t>(n * 100000 + k)));
        RandomCircuitSpec spec;
        spec.num_qubits = n;
        spec.depth = 1 + static_cast<int>(rng.index(20));
        spec.seed = rng.next();
        const Circuit src = random_circuit(spec, gate_sets::eagle());
        const Circuit tgt = transpile_rules(src, *target);
        worst = std::min(worst, fidelity(circuit_unitary(src), circuit_unitary(tgt)).fidelity);
        ++pairs;
      }
  return {worst >= 1 - 1e-9, fmt("%ld pairs, min F = 1 - %.3g", pairs, 1 - worst)};
}

Outcome fidelity_functional() {
  const UnitaryMatrix x = gates::x();
  const UnitaryMatrix id = UnitaryMatrix::Identity(2, 2);
  double worst = std::abs(fidelity(x, x).fidelity - 1) + std::abs(fidelity(id, x).fidelity);
  Rng rng(102);
  for (int k = 0; k < 100; ++k) {
    const double th = rng.uniform(0, 2 * kPi), d = rng.uniform(-kPi, kPi);
    const double f = fidelity(gates::rz(th), gates::rz(th + d)).fidelity;
    worst = std::max(worst, std::abs(f - std::pow(std::cos(d / 2), 2)));
  }
  return {worst <= 1e-10, fmt("max error %.3g", worst)};
}

Outcome gradient_check() {
  Transformer<double> m(ModelConfig::toy(vocab().size()), 103);
  Rng rng(104);
  for (auto& p : m.params()) p += 0.05 * rng.normal();
  auto ids = [&](int n) {
    std::vector<int> v{1};
    while (static_cast<int>(v.size()) < n) v.push_back(5 + static_cast<int>(rng.index(vocab().size() - 5)));
    return v;
  };
  const auto src = ids(12), tgt = ids(10);
  const std::vector<int> tin(tgt.begin(), tgt.end() - 1), tout(tgt.begin() + 1, tgt.end());
  auto loss = [&] { return smoothed_ce(m.forward(src, tin), tout, 0.1, 0); };
  Transformer<double>::Cache cache;
  nn::Mat<double> dl;
  smoothed_ce(m.forward(src, tin, &cache), tout, 0.1, 0, &dl);
  nn::Buffer<double> grad(m.params().size(), 0.0);
  m.backward(cache, dl, grad);
  const double h = 1e-5;
  double worst = 0;
  int tensors = 0, checked = 0;
  for (const auto& spec : parameter_inventory(m.config())) {
    ++tensors;
    std::vector<std::size_t> picks;
    if (spec.name == "embed")
      for (int k = 0; k < 4; ++k) picks.push_back((k % 2 ? tgt : src)[1 + k] * spec.cols + rng.index(spec.cols));
    while (picks.size() < 8) picks.push_back(rng.index(spec.size()));
    for (std::size_t k : picks) {
      double& p = m.params()[spec.offset + k];
      const double saved = p;
      p = saved + h;
      const double up = loss();
      p = saved - h;
      const double down = loss();
      p = saved;
      const double numeric = (up - down) / (2 * h), analytic = grad[spec.offset + k];
      const double scale = std::max(std::abs(numeric), std::abs(analytic));
      if (scale < 1e-9) continue;
      worst = std::max(worst, std::abs(numeric - analytic) / scale);
      ++checked;
    }
  }
  return {worst < 1e-4 && checked > 0, fmt("%d tensors, %d entries, max rel error %.3g", tensors, checked, worst)};
}

Outcome ce_identities() {
  double worst_floor = 0;
  for (int V : {11, vocab().size()}) {
    nn::Mat<double> logits(4, V);
    std::vector<int> t;
    for (int i = 0; i < 4; ++i) {
      t.push_back((i * 7) % V);
      for (int j = 0; j < V; ++j) logits(i, j) = std::log(j == t[i] ? 0.9 : 0.1 / (V - 1)) + i;
    }
    // Closed form, independent of smoothed_entropy.
    const double floor = -(0.9 * std::log(0.9) + 0.1 * std::log(0.1 / (V - 1)));
    worst_floor = std::max(worst_floor, std::abs(smoothed_ce(logits, t, 0.1, -1) - floor));
  }
  DatasetSpec spec;
  spec.n_pairs = 8;
  spec.seed = 105;
  const auto ex = make_examples(make_records(spec), vocab());
  Transformer<float> m(ModelConfig::toy(vocab().size()), 106);
  const EvalReport trained = evaluate(ex, m, vocab());
  const double ppl_err = std::abs(trained.perplexity - std::exp(trained.ce));
  m.weights().out.w.setZero();
  m.weights().out.b.setZero();
  const EvalReport uniform = evaluate(ex, m, vocab());
  const double uni_err = std::abs(uniform.perplexity - vocab().size()) / vocab().size();
  return {worst_floor <= 1e-9 && ppl_err <= 1e-9 && uni_err <= 1e-9,
          fmt("floor err %.3g, |ppl - exp(CE)| %.3g, uniform ppl %.9g (V=%d)", worst_floor, ppl_err,
              uniform.perplexity, vocab().size())};
}

Outcome cli_training(const std::string& name, const std::string& extra, double min_grammar, double min_fidelity) {
  const fs::path dir = g_work / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  const int rc = shell("train -c \"" + (g_presets / "eagle-to-ionq.toml").string() + "\" " + extra + " --run-dir \"" +
                           dir.string() + "\"",
                       g_work / (name + ".log"));
  if (rc != 0) return {false, "train exited nonzero, see " + (g_work / (name + ".log")).string()};
  const auto j = nlohmann::json::parse(slurp(dir / "eval.json"));
  const double g = j.at("grammar_accuracy").get<double>(), f = j.at("mean_fidelity").get<double>();
  const auto n = j.at("examples").get<long>();
  return {g >= min_grammar && f >= min_fidelity,
          fmt("holdout %ld: grammar %.4f (>= %.2f), fidelity %.4f (>= %.2f)", n, g, min_grammar, f, min_fidelity)};
}

Outcome memorization() {
  DatasetSpec spec;
  spec.n_pairs = 16;
  spec.seed = 107;
  const auto ex = make_examples(make_records(spec), vocab());
  Transformer<float> m(ModelConfig::toy(vocab().size()), 108);
  OptimizerConfig oc;
  oc.lr = 1e-3;
  oc.warmup = 200;
  TrainConfig tc;
  tc.steps = 3000;
  tc.batch_size = 16;
  tc.seed = 109;
  tc.eval_every = 100;
  TrainHooks hooks;
  hooks.stop = [](long, const EvalReport& r) { return r.grammar_accuracy == 1.0 && r.mean_fidelity >= 0.99; };
  const TrainResult res = train(m, ex, ex, vocab(), LossConfig::standard(tc.steps), oc, tc, hooks);
  const EvalReport r = evaluate(ex, m, vocab());
  return {r.grammar_accuracy == 1.0 && r.mean_fidelity >= 0.99,
          fmt("%zu pairs, %ld steps: grammar %.4f, fidelity %.5f", ex.size(), res.steps_run, r.grammar_accuracy,
              r.mean_fidelity)};
}

Outcome paper_preset_size() {
  const std::size_t n = parameter_count(ModelConfig::paper());
  return {n == 80358915, fmt("%zu trainable parameters", n)};
}

Outcome scaling() {
  TokenSweep depth;
  depth.axis = SweepAxis::Depth;
  depth.fixed = 3;
  depth.from = 1;
  depth.to = 20;
  depth.samples = 30;
  depth.seed = 110;
  TokenSweep qubits = depth;
  qubits.axis = SweepAxis::Qubits;
  qubits.fixed = 10;
  qubits.from = 1;
  qubits.to = 5;
  const auto a = measure_tokens(depth, vocab()), b = measure_tokens(qubits, vocab());
  return {a.fit.r2 >= 0.99 && b.fit.r2 >= 0.99,
          fmt("depth R2 %.5f (slope %.2f), qubits R2 %.5f (slope %.2f)", a.fit.r2, a.fit.slope, b.fit.r2,
              b.fit.slope)};
}

Outcome solovay_kitaev() {
  const SolovayKitaev sk(SkConfig{{"h", "t", "tdg"}, 12, 2, 0.01});
  const SkResult r = sk.decompose(gates::rz(kPi / 8), 2);
  const auto& d = r.depth_distances;
  const bool mono = d.size() == 3 && d[1] <= d[0] && d[2] <= d[1];
  double brute_err = 0;
  Rng rng(111);
  const std::vector<std::string> names{"h", "t", "tdg"};
  for (int len : {4, 6, 8}) {
    const SolovayKitaev small(SkConfig{names, len, 0, 0.1});
    for (int k = 0; k < 4; ++k) {
      const Matrix2cd u = k == 0 ? Matrix2cd(gates::rz(kPi / 8)) : random_unitary(rng);
      brute_err = std::max(brute_err, std::abs(small.basic_approx(u).achieved_distance - brute_force_min(names, len, u)));
    }
  }
  const SkGrowthReport g = measure_sk_growth({kPi / 8, 1.0, 2.5, 0.3}, sk);
  const bool ok = mono && r.achieved_distance <= 0.15 && brute_err <= 1e-9 && std::isfinite(g.c) && g.fit_points >= 2;
  return {ok, fmt("Rz(pi/8) distances %.4f %.4f %.4f, brute-force err %.2g, growth c %.3f [%.3f, %.3f]",
                  d.size() > 0 ? d[0] : NAN, d.size() > 1 ? d[1] : NAN, d.size() > 2 ? d[2] : NAN, brute_err, g.c,
                  g.c_low, g.c_high)};
}

Outcome determinism() {
  const fs::path base = g_work / "determinism";
  fs::remove_all(base);
  const fs::path log = g_work / "determinism.log";
  const std::string preset = "-c \"" + (g_presets / "eagle-to-ionq.toml").string() + "\"";
  std::vector<std::map<std::string, std::string>> runs;
  for (int k = 0; k < 2; ++k) {
    const fs::path dir = base / std::to_string(k);
    fs::create_directories(dir);
    const std::string d = "\"" + dir.string();
    if (shell("gen-data " + preset + " --pairs 200 -o " + d + "/data/pairs.jsonl\"", log) ||
        shell("train " + preset + " --pairs 64 --steps 60 --eval-every 30 --checkpoint-every 30 --run-dir " + d +
                  "/train\"",
              log) ||
        shell("bench --axis depth --fixed 2 --sweep-to 8 --samples 10 -o " + d + "/bench/depth.csv\"", log))
      return {false, "command failed, see " + log.string()};
    runs.push_back(tree(dir));
  }
  const bool same = runs[0] == runs[1];
  return {same && runs[0].size() > 5, fmt("%zu files compared, %s", runs[0].size(), same ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: acceptance <qasmtx binary> <presets dir> [work dir]\n";
    return 2;
  }
  g_cli = fs::absolute(argv[1]);
  g_presets = fs::absolute(argv[2]);
  g_work = argc > 3 ? fs::path(argv[3]) : fs::temp_directory_path() / "qasmtx_acceptance";
  fs::create_directories(g_work);

  run("tokenizer-fixture", tokenizer_fixture);
  run("oracle-soundness", oracle_soundness);
  run("fidelity-functional", fidelity_functional);
  run("gradient-check", gradient_check);
  run("ce-floor-perplexity", ce_identities);
  run("training-1q", [] { return cli_training("train_1q", "", 0.95, 0.90); });
  run("training-2q", [] { return cli_training("train_2q", "--qubits 2", 0.90, 0.0); });
  run("memorization", memorization);
  run("paper-preset-size", paper_preset_size);
  run("scaling-bench", scaling);
  run("solovay-kitaev", solovay_kitaev);
  run("determinism", determinism);

  std::printf("%d failure(s)\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
