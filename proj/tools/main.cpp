#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "qasmtx/bench.hpp"
#include "qasmtx/checkpoint.hpp"
#include "qasmtx/gate_set.hpp"
#include "qasmtx/qasm.hpp"
#include "qasmtx/transpile.hpp"
#include "qasmtx/unitary.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qasmtx;
using namespace qasmtx::cli;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + p.string());
}

// Library calls that touch the filesystem report failures as runtime_error.
template <typename F>
auto io(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw IoError(e.what());
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

void check_dialect(const Circuit& c, const GateSetConfig& gs) {
  for (const auto& op : c.ops)
    if (!op.is_measure() && !gs.contains(op.name))
      throw std::invalid_argument("gate '" + op.name + "' is not in the " + gs.name + " gate set");
}

struct Common {
  std::string config;
  std::optional<std::int64_t> seed;
  RunConfig load() const {
    RunConfig rc = config.empty() ? RunConfig() : RunConfig::from_file(config);
    rc.set("seed", seed);
    return rc;
  }
};

struct DataFlags {
  std::optional<std::string> source, target, path;
  std::optional<std::int64_t> pairs;
  std::optional<int> qubits, min_depth, max_depth, window;
  std::optional<bool> measure;
  std::optional<double> holdout;

  void add(CLI::App* app) {
    app->add_option("--from", source, "source gate set");
    app->add_option("--to", target, "target gate set");
    app->add_option("--pairs", pairs, "number of pairs");
    app->add_option("--qubits", qubits, "qubits per circuit");
    app->add_option("--min-depth", min_depth);
    app->add_option("--max-depth", max_depth);
    app->add_option("--measure", measure, "append measurements");
    app->add_option("--window", window, "context window in tokens");
    app->add_option("--holdout", holdout, "held-out fraction");
  }
  void apply(RunConfig& rc) const {
    rc.set("data.source", source);
    rc.set("data.target", target);
    rc.set("data.path", path);
    rc.set("data.pairs", pairs);
    rc.set("data.qubits", qubits);
    rc.set("data.min_depth", min_depth);
    rc.set("data.max_depth", max_depth);
    rc.set("data.measure", measure);
    rc.set("data.holdout", holdout);
    rc.set("model.context_window", window);
  }
};

struct DecodeFlags {
  std::optional<std::string> strategy;
  std::optional<double> temperature, top_p;
  std::optional<int> top_k, max_len;

  void add(CLI::App* app) {
    app->add_option("--strategy", strategy, "greedy | temperature | top_k | top_p");
    app->add_option("--temperature", temperature);
    app->add_option("--top-k", top_k);
    app->add_option("--top-p", top_p);
    app->add_option("--max-len", max_len);
  }
  void apply(RunConfig& rc) const {
    rc.set("decode.strategy", strategy);
    rc.set("decode.temperature", temperature);
    rc.set("decode.top_k", top_k);
    rc.set("decode.top_p", top_p);
    rc.set("decode.max_len", max_len);
  }
};

std::vector<Example> load_examples(const RunConfig& rc, const Vocabulary& v, const fs::path& generate_into) {
  const auto path = rc.at("data.path").get<std::string>();
  std::vector<DatasetRecord> records;
  if (!path.empty()) {
    records = io([&] { return read_dataset(path); });
  } else {
    const auto& src = gate_sets::by_name(rc.at("data.source").get<std::string>());
    const auto& tgt = gate_sets::by_name(rc.at("data.target").get<std::string>());
    if (generate_into.empty()) {
      std::stringstream ss;
      build_dataset(rc.dataset_spec(), src, tgt, v, ss);
      for (std::string line; std::getline(ss, line);) records.push_back(record_from_json(line));
    } else {
      io([&] { return write_dataset(generate_into, rc.dataset_spec(), src, tgt, v); });
      records = io([&] { return read_dataset(generate_into); });
    }
  }
  return make_examples(records, v);
}

int cmd_gen_data(const Common& common, const DataFlags& df, const std::string& out) {
  RunConfig rc = common.load();
  df.apply(rc);
  const Vocabulary v;
  const auto& src = gate_sets::by_name(rc.at("data.source").get<std::string>());
  const auto& tgt = gate_sets::by_name(rc.at("data.target").get<std::string>());
  const DatasetStats s = io([&] { return write_dataset(out, rc.dataset_spec(), src, tgt, v); });
  write_file(fs::path(out).concat(".config.toml"), rc.to_toml());
  json j{{"path", out},
         {"written", s.written},
         {"dropped", s.dropped},
         {"mean_token_len_src", s.mean_token_len_src},
         {"mean_token_len_tgt", s.mean_token_len_tgt}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_tokenize(const std::string& file, bool as_json) {
  const Vocabulary v;
  const Circuit c = parse(read_file(file));
  const TokenSequence t = encode(c, v);
  if (as_json) {
    std::vector<std::string> tokens;
    for (int id : t.ids) tokens.push_back(v.token(id));
    std::cout << json{{"tokens", tokens}, {"ids", t.ids}, {"source_hash", t.source_hash}, {"vocab_hash", v.hash()}}.dump(2)
              << '\n';
  } else {
    std::cout << meta_code(t.ids, v) << '\n';
    for (std::size_t i = 0; i < t.ids.size(); ++i) std::cout << (i ? " " : "") << t.ids[i];
    std::cout << '\n';
  }
  return 0;
}

void report(const json& j, const std::string& path) {
  if (path.empty())
    std::cerr << j.dump(2) << '\n';
  else
    write_file(path, j.dump(2) + "\n");
}

int cmd_transpile(const Common& common, const std::string& file, bool oracle, const std::string& checkpoint,
                  std::optional<std::string> from, std::optional<std::string> to, const DecodeFlags& dfl,
                  const std::string& report_path) {
  if (oracle == !checkpoint.empty()) throw std::invalid_argument("pass exactly one of --oracle or --checkpoint");
  RunConfig rc = common.load();
  rc.set("data.source", from);
  rc.set("data.target", to);
  dfl.apply(rc);
  const auto& src_gs = gate_sets::by_name(rc.at("data.source").get<std::string>());
  const auto& tgt_gs = gate_sets::by_name(rc.at("data.target").get<std::string>());
  const Circuit src = parse(read_file(file));
  check_dialect(src, src_gs);
  const UnitaryMatrix u_src = circuit_unitary(src);
  json rep{{"source", src_gs.name}, {"target", tgt_gs.name}, {"qubits", src.num_qubits}};
  if (oracle) {
    const Circuit out = transpile_rules(src, tgt_gs);
    const double f = fidelity(u_src, circuit_unitary(out)).fidelity;
    rep["mode"] = "oracle";
    rep["fidelity"] = f;
    rep["gates"] = out.ops.size();
    std::cout << emit(out, tgt_gs);
    report(rep, report_path);
    return f >= 1 - 1e-9 ? 0 : kExitValidation;
  }
  const Checkpoint ck = io([&] { return load_checkpoint(checkpoint); });
  DecodeConfig dc = rc.decode_config();
  Rng rng(rc.seed());
  const std::vector<int> ids = decode_sequence(ck.model, encode(src, ck.vocab).ids, dc, ck.vocab.bos(),
                                               ck.vocab.eos(), &rng);
  rep["mode"] = "model";
  rep["checkpoint"] = checkpoint;
  rep["tokens"] = ids.size();
  try {
    const Circuit out = decode(ids, ck.vocab);
    validate(out);
    rep["grammar_valid"] = true;
    rep["fidelity"] = out.num_qubits == src.num_qubits ? fidelity(u_src, circuit_unitary(out)).fidelity : 0.0;
    std::cout << emit(out);
    report(rep, report_path);
    return 0;
  } catch (const std::exception& e) {
    rep["grammar_valid"] = false;
    rep["fidelity"] = 0.0;
    rep["error"] = e.what();
    rep["meta_code"] = meta_code(ids, ck.vocab);
    report(rep, report_path);
    return kExitValidation;
  }
}

struct SkFlags {
  std::optional<std::string> basis, cache_dir;
  std::optional<int> base_length, depth;
  std::optional<double> epsilon;

  void add(CLI::App* app) {
    app->add_option("--basis", basis, "comma-separated basis, e.g. h,t,tdg");
    app->add_option("--base-length", base_length);
    app->add_option("--depth", depth, "maximum recursion depth");
    app->add_option("--epsilon", epsilon, "target circuit-level distance");
    app->add_option("--cache-dir", cache_dir, "directory for the base-net cache");
  }
  void apply(RunConfig& rc) const {
    if (basis) rc.at("sk.basis") = split_list(*basis);
    rc.set("sk.base_length", base_length);
    rc.set("sk.depth", depth);
    rc.set("sk.epsilon", epsilon);
    rc.set("sk.cache_dir", cache_dir);
  }
};

SolovayKitaev make_sk(const RunConfig& rc) {
  const SkConfig cfg = rc.sk_config();
  const auto dir = rc.at("sk.cache_dir").get<std::string>();
  if (dir.empty()) return SolovayKitaev(cfg);
  return SolovayKitaev(cfg, io([&] { return SkNet::load_or_build(cfg.basis, cfg.base_length, dir); }));
}

int cmd_sk(const Common& common, const std::string& file, const SkFlags& sf, const std::string& report_path) {
  RunConfig rc = common.load();
  sf.apply(rc);
  const Circuit c = parse(read_file(file));
  const SolovayKitaev sk = make_sk(rc);
  const SkCircuitResult r = sk_circuit(c, sk, rc.sk_config().epsilon);
  const double f = fidelity(circuit_unitary(c), circuit_unitary(r.circuit)).fidelity;
  std::cout << emit(r.circuit);
  report({{"basis", rc.sk_config().basis},
          {"decomposed", r.decomposed},
          {"budget", r.budget},
          {"max_distance", r.max_distance},
          {"total_distance", r.total_distance},
          {"met_budget", r.met_budget},
          {"plateau", r.plateau},
          {"gates", r.circuit.ops.size()},
          {"fidelity", f},
          {"fidelity_bound", sk_fidelity_bound(r.total_distance)}},
         report_path);
  if (r.plateau) std::cerr << "warning: approximation plateaued above the target distance\n";
  return 0;
}

struct TrainFlags {
  std::optional<std::int64_t> steps, warmup, eval_every, checkpoint_every;
  std::optional<int> batch_size;
  std::optional<double> lr, alpha_max;

  void add(CLI::App* app) {
    app->add_option("--steps", steps);
    app->add_option("--batch-size", batch_size);
    app->add_option("--lr", lr);
    app->add_option("--warmup", warmup);
    app->add_option("--alpha-max", alpha_max, "final fidelity-loss weight");
    app->add_option("--eval-every", eval_every);
    app->add_option("--checkpoint-every", checkpoint_every);
  }
  void apply(RunConfig& rc) const {
    rc.set("train.steps", steps);
    rc.set("train.batch_size", batch_size);
    rc.set("optimizer.lr", lr);
    rc.set("optimizer.warmup", warmup);
    rc.set("loss.alpha_max", alpha_max);
    rc.set("train.eval_every", eval_every);
    rc.set("train.checkpoint_every", checkpoint_every);
  }
};

int cmd_train(const Common& common, const DataFlags& df, const TrainFlags& tf, const fs::path& run_dir) {
  RunConfig rc = common.load();
  df.apply(rc);
  tf.apply(rc);
  const Vocabulary v;
  const ModelConfig mc = rc.model_config(v.size());
  const LossConfig lc = rc.loss_config();
  const OptimizerConfig oc = rc.optimizer_config();
  const TrainConfig tc = rc.train_config();
  rc.echo(run_dir);

  Split split = split_holdout(load_examples(rc, v, run_dir / "dataset.jsonl"), rc.at("data.holdout").get<double>(),
                              split_seed(rc.seed()));
  std::cerr << "train " << split.train.size() << " pairs, holdout " << split.holdout.size() << ", "
            << parameter_count(mc) << " parameters\n";
  Transformer<float> model(mc, model_seed(rc.seed()));

  std::ofstream trace(run_dir / "loss.csv", std::ios::binary);
  if (!trace) throw IoError("cannot write " + (run_dir / "loss.csv").string());
  trace << trace_csv_header() << '\n';
  const long log_every = rc.at("train.log_every").get<long>();
  const auto t0 = std::chrono::steady_clock::now();
  TrainHooks hooks;
  hooks.on_step = [&](const TraceRow& r) {
    trace << trace_csv_row(r) << '\n';
    if (log_every > 0 && (r.step % log_every == 0 || r.step + 1 == tc.steps)) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::fprintf(stderr, "step %ld  L %.4f  L_CE %.4f  alpha %.3f  %.1fs\n", r.step, r.total, r.ce, r.alpha, secs);
    }
  };
  hooks.on_eval = [&](long step, const EvalReport& r) {
    write_file(run_dir / ("eval_step" + std::to_string(step) + ".json"), r.to_json() + "\n");
    std::fprintf(stderr, "eval %ld  grammar %.4f  fidelity %.4f  perplexity %.4f\n", step, r.grammar_accuracy,
                 r.mean_fidelity, r.perplexity);
  };
  hooks.checkpoint_every = rc.at("train.checkpoint_every").get<long>();
  hooks.on_checkpoint = [&](long step, const Transformer<float>& m) {
    io([&] {
      save_checkpoint(run_dir / "checkpoints" / ("step" + std::to_string(step)), m, v, step);
      return 0;
    });
  };
  train(model, split.train, split.holdout, v, lc, oc, tc, hooks);
  trace.close();
  if (!trace) throw IoError("cannot write " + (run_dir / "loss.csv").string());
  io([&] {
    save_checkpoint(run_dir / "checkpoint", model, v, tc.steps);
    return 0;
  });
  const SchedulePoint w = lc.at(std::max(0L, tc.steps - 1));
  const EvalReport r = evaluate(split.holdout, model, v, rc.decode_config(), w.alpha, w.beta);
  write_file(run_dir / "eval.json", r.to_json() + "\n");
  std::cout << r.to_json() << '\n';
  return 0;
}

int cmd_eval(const Common& common, const DataFlags& df, const DecodeFlags& dfl, const std::string& checkpoint,
             const std::string& split_name, const std::string& run_dir) {
  RunConfig rc = common.load();
  df.apply(rc);
  dfl.apply(rc);
  if (split_name != "holdout" && split_name != "all" && split_name != "train")
    throw std::invalid_argument("--split must be holdout, train or all");
  const Checkpoint ck = io([&] { return load_checkpoint(checkpoint); });
  auto examples = load_examples(rc, ck.vocab, {});
  std::vector<Example> data;
  if (split_name == "all") {
    data = std::move(examples);
  } else {
    Split s = split_holdout(std::move(examples), rc.at("data.holdout").get<double>(), split_seed(rc.seed()));
    data = split_name == "holdout" ? std::move(s.holdout) : std::move(s.train);
  }
  const EvalReport r = evaluate(data, ck.model, ck.vocab, rc.decode_config());
  if (!run_dir.empty()) {
    rc.echo(run_dir);
    write_file(fs::path(run_dir) / "eval.json", r.to_json() + "\n");
  }
  std::cout << r.to_json() << '\n';
  return 0;
}

struct BenchFlags {
  std::optional<std::string> axis, source, target;
  std::optional<int> fixed, from, to, samples;

  void add(CLI::App* app) {
    app->add_option("--axis", axis, "depth | qubits");
    app->add_option("--fixed", fixed, "qubits for a depth sweep, depth for a qubit sweep");
    app->add_option("--sweep-from", from);
    app->add_option("--sweep-to", to);
    app->add_option("--samples", samples);
    app->add_option("--from", source, "source gate set");
    app->add_option("--to", target, "target gate set");
  }
  void apply(RunConfig& rc) const {
    rc.set("bench.axis", axis);
    rc.set("bench.fixed", fixed);
    rc.set("bench.from", from);
    rc.set("bench.to", to);
    rc.set("bench.samples", samples);
    rc.set("bench.source", source);
    rc.set("bench.target", target);
  }
};

int cmd_bench(const Common& common, const BenchFlags& bf, const SkFlags& sf, bool sk_growth, const std::string& out,
              const std::string& run_dir) {
  RunConfig rc = common.load();
  bf.apply(rc);
  sf.apply(rc);
  std::ostringstream csv;
  json summary;
  if (sk_growth) {
    const SkGrowthReport r =
        measure_sk_growth(rc.at("bench.sk_thetas").get<std::vector<double>>(), make_sk(rc));
    write_sk_growth_csv(csv, r);
    summary = {{"kind", "sk_growth"}, {"c", r.c},       {"c_ci95", {r.c_low, r.c_high}}, {"a", r.a},
               {"fit_points", r.fit_points},           {"plateau", r.plateau}};
    if (r.plateau) std::cerr << "warning: some targets plateaued above the target distance\n";
  } else {
    const TokenSweep sweep = rc.token_sweep();
    const ScalingReport r = measure_tokens(sweep, Vocabulary{});
    write_scaling_csv(csv, sweep, r);
    summary = {{"kind", "tokens"},
               {"axis", to_string(sweep.axis)},
               {"slope", r.fit.slope},
               {"intercept", r.fit.intercept},
               {"r2", r.fit.r2},
               {"per_gate_slope", r.per_gate.slope},
               {"per_gate_r2", r.per_gate.r2},
               {"budget_L", r.budget.per_gate()}};
  }
  if (!run_dir.empty()) {
    rc.echo(run_dir);
    write_file(fs::path(run_dir) / (sk_growth ? "sk_growth.csv" : "scaling.csv"), csv.str());
    write_file(fs::path(run_dir) / "bench.json", summary.dump(2) + "\n");
  }
  if (out.empty() || out == "-")
    std::cout << csv.str();
  else
    write_file(out, csv.str());
  std::cerr << summary.dump() << '\n';
  return 0;
}

int cmd_inspect(const std::string& checkpoint, bool vocab, const std::string& dataset) {
  if (!checkpoint.empty()) {
    const Checkpoint ck = io([&] { return load_checkpoint(checkpoint); });
    json arrays = json::array();
    for (const auto& p : parameter_inventory(ck.model.config()))
      arrays.push_back({{"name", p.name}, {"shape", {p.rows, p.cols}}});
    std::cout << json{{"config", json::parse(ck.model.config().to_json())},
                      {"step", ck.step},
                      {"vocab_hash", ck.vocab.hash()},
                      {"vocab_size", ck.vocab.size()},
                      {"parameters", parameter_count(ck.model.config())},
                      {"arrays", arrays}}
                     .dump(2)
              << '\n';
  } else if (vocab) {
    const Vocabulary v;
    std::cout << json{{"size", v.size()}, {"hash", v.hash()}, {"tokens", v.tokens()}}.dump(2) << '\n';
  } else if (!dataset.empty()) {
    std::cout << read_file(manifest_path(dataset));
  } else {
    throw std::invalid_argument("inspect needs --checkpoint, --vocab or --dataset");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum circuit transpilation workbench"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kGeneratorVersion));

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config, "TOML or JSON run configuration");
    sub->add_option("--seed", common.seed, "global seed");
  };

  DataFlags df;
  DecodeFlags dfl;
  SkFlags sf;
  TrainFlags tf;
  BenchFlags bf;
  std::string out, file, checkpoint, report_path, run_dir, split_name = "holdout", dataset, data_path;
  bool as_json = false, oracle = false, sk_growth = false, vocab = false;
  std::optional<std::string> from, to;

  auto* gen = app.add_subcommand("gen-data", "generate an oracle-transpiled dataset");
  add_common(gen);
  df.add(gen);
  gen->add_option("-o,--out", out, "dataset JSONL path")->required();

  auto* tok = app.add_subcommand("tokenize", "print the token sequence of a QASM file");
  tok->add_option("file", file)->required();
  tok->add_flag("--json", as_json);

  auto* tr = app.add_subcommand("transpile", "translate a QASM file with the oracle or a checkpoint");
  add_common(tr);
  tr->add_option("file", file)->required();
  tr->add_flag("--oracle", oracle, "use the rule-based transpiler");
  tr->add_option("--checkpoint", checkpoint, "model checkpoint directory");
  tr->add_option("--from", from, "source gate set");
  tr->add_option("--to", to, "target gate set");
  tr->add_option("--report", report_path, "write the JSON report here instead of stderr");
  dfl.add(tr);

  auto* skc = app.add_subcommand("sk", "Solovay-Kitaev decomposition of a QASM file");
  add_common(skc);
  skc->add_option("file", file)->required();
  skc->add_option("--report", report_path, "write the JSON report here instead of stderr");
  sf.add(skc);

  auto* trn = app.add_subcommand("train", "train a transformer");
  add_common(trn);
  df.add(trn);
  tf.add(trn);
  trn->add_option("--data", data_path, "existing dataset JSONL");
  trn->add_option("--run-dir", run_dir, "output directory")->required();

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(ev);
  df.add(ev);
  dfl.add(ev);
  ev->add_option("--checkpoint", checkpoint)->required();
  ev->add_option("--data", data_path, "existing dataset JSONL");
  ev->add_option("--split", split_name, "holdout | train | all");
  ev->add_option("--run-dir", run_dir);

  auto* be = app.add_subcommand("bench", "token-count or SK growth scaling");
  add_common(be);
  bf.add(be);
  sf.add(be);
  be->add_flag("--sk", sk_growth, "measure SK sequence growth instead of token counts");
  be->add_option("-o,--out", out, "CSV path (default stdout)");
  be->add_option("--run-dir", run_dir);

  auto* ins = app.add_subcommand("inspect", "checkpoint, vocabulary or dataset metadata");
  ins->add_option("--checkpoint", checkpoint);
  ins->add_flag("--vocab", vocab);
  ins->add_option("--dataset", dataset);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitValidation;
  }
  if (!data_path.empty()) df.path = data_path;

  try {
    if (*gen) return cmd_gen_data(common, df, out);
    if (*tok) return cmd_tokenize(file, as_json);
    if (*tr) return cmd_transpile(common, file, oracle, checkpoint, from, to, dfl, report_path);
    if (*skc) return cmd_sk(common, file, sf, report_path);
    if (*trn) return cmd_train(common, df, tf, run_dir);
    if (*ev) return cmd_eval(common, df, dfl, checkpoint, split_name, run_dir);
    if (*be) return cmd_bench(common, bf, sf, sk_growth, out, run_dir);
    if (*ins) return cmd_inspect(checkpoint, vocab, dataset);
  } catch (const IoError& e) {
    std::cerr << json{{"error", "io"}, {"message", e.what()}}.dump() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << json{{"error", "io"}, {"message", e.what()}}.dump() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "validation"}, {"message", e.what()}}.dump() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}
