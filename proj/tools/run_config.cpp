#include "run_config.hpp"

#include <fstream>
#include <sstream>

#include "toml.hpp"

namespace qasmtx::cli {

using nlohmann::json;

namespace {

json defaults() {
  return json::parse(R"({
    "schema_version": 1,
    "seed": 0,
    "data": {"source": "eagle", "target": "ionq", "pairs": 1000, "qubits": 1, "min_depth": 1,
             "max_depth": 4, "measure": false, "path": "", "holdout": 0.1},
    "model": {"preset": "toy"},
    "loss": {"epsilon_smooth": 0.1, "alpha_max": 0.5, "ramp_start": 0.3, "beta": 1.0, "schedule": []},
    "optimizer": {"lr": 3e-4, "warmup": 4000, "beta1": 0.9, "beta2": 0.98, "eps": 1e-9, "clip_norm": 1.0},
    "train": {"steps": 1000, "batch_size": 16, "eval_every": 0, "eval_examples": 0, "checkpoint_every": 0,
              "log_every": 100},
    "decode": {"strategy": "greedy", "temperature": 1.0, "top_k": 1, "top_p": 0.9, "max_len": 0},
    "bench": {"axis": "depth", "fixed": 3, "from": 1, "to": 20, "samples": 30, "source": "eagle",
              "target": "ionq", "sk_thetas": [0.39269908169872414, 1.0, 2.5, 0.3]},
    "sk": {"basis": ["h", "t", "tdg"], "base_length": 12, "depth": 2, "epsilon": 0.1, "cache_dir": ""}
  })");
}

const char* const kModelKeys[] = {"d_model", "d_ff", "heads", "d_k", "n_layers_enc", "n_layers_dec",
                                  "context_window", "dropout"};

void merge(json& base, const json& over, const std::string& where) {
  for (auto it = over.begin(); it != over.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    bool optional_model_key = false;
    if (where == "model")
      for (const char* k : kModelKeys) optional_model_key = optional_model_key || it.key() == k;
    if (!base.contains(it.key()) && !optional_model_key) throw std::invalid_argument("unknown config key '" + key + "'");
    if (base.contains(it.key()) && base[it.key()].is_object()) {
      if (!it.value().is_object()) throw std::invalid_argument("config key '" + key + "' must be a table");
      merge(base[it.key()], it.value(), key);
    } else {
      base[it.key()] = it.value();
    }
  }
}

template <typename T>
T get(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config key '" + key + "' has the wrong type");
  }
}

toml::array to_toml_array(const json& j);

toml::table to_toml_table(const json& j) {
  toml::table t;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const json& v = it.value();
    if (v.is_object())
      t.insert(it.key(), to_toml_table(v));
    else if (v.is_array())
      t.insert(it.key(), to_toml_array(v));
    else if (v.is_boolean())
      t.insert(it.key(), v.get<bool>());
    else if (v.is_number_integer())
      t.insert(it.key(), v.get<std::int64_t>());
    else if (v.is_number())
      t.insert(it.key(), v.get<double>());
    else
      t.insert(it.key(), v.get<std::string>());
  }
  return t;
}

toml::array to_toml_array(const json& j) {
  toml::array a;
  for (const json& v : j) {
    if (v.is_array())
      a.push_back(to_toml_array(v));
    else if (v.is_boolean())
      a.push_back(v.get<bool>());
    else if (v.is_number_integer())
      a.push_back(v.get<std::int64_t>());
    else if (v.is_number())
      a.push_back(v.get<double>());
    else
      a.push_back(v.get<std::string>());
  }
  return a;
}

}  // namespace

RunConfig::RunConfig() : tree_(defaults()) {}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  json parsed;
  if (path.extension() == ".json") {
    try {
      parsed = json::parse(ss.str());
    } catch (const json::exception& e) {
      throw std::invalid_argument("malformed config " + path.string() + ": " + e.what());
    }
  } else {
    try {
      const toml::table t = toml::parse(ss.str(), path.string());
      std::ostringstream js;
      js << toml::json_formatter{t};
      parsed = json::parse(js.str());
    } catch (const toml::parse_error& e) {
      throw std::invalid_argument("malformed config " + path.string() + ": " + std::string(e.description()));
    }
  }
  RunConfig rc;
  merge(rc.tree_, parsed, "");
  if (rc.tree_.at("schema_version") != kConfigSchema) throw std::invalid_argument("unsupported config schema_version");
  return rc;
}

json& RunConfig::at(const std::string& dotted) {
  const auto dot = dotted.find('.');
  if (dot == std::string::npos) return tree_[dotted];
  return tree_[dotted.substr(0, dot)][dotted.substr(dot + 1)];
}

const json& RunConfig::at(const std::string& dotted) const {
  const auto dot = dotted.find('.');
  if (dot == std::string::npos) return tree_.at(dotted);
  return tree_.at(dotted.substr(0, dot)).at(dotted.substr(dot + 1));
}

std::uint64_t RunConfig::seed() const { return get<std::uint64_t>(at("seed"), "seed"); }

DatasetSpec RunConfig::dataset_spec() const {
  const json& d = tree_.at("data");
  DatasetSpec s;
  s.n_pairs = get<std::size_t>(d.at("pairs"), "data.pairs");
  s.num_qubits = get<int>(d.at("qubits"), "data.qubits");
  s.min_depth = get<int>(d.at("min_depth"), "data.min_depth");
  s.max_depth = get<int>(d.at("max_depth"), "data.max_depth");
  s.include_measure = get<bool>(d.at("measure"), "data.measure");
  s.seed = seed();
  s.context_window = model_config(1).context_window;
  return s;
}

ModelConfig RunConfig::model_config(int vocab_size) const {
  const json& m = tree_.at("model");
  const auto preset = get<std::string>(m.at("preset"), "model.preset");
  ModelConfig c;
  if (preset == "toy")
    c = ModelConfig::toy(vocab_size);
  else if (preset == "paper")
    c = ModelConfig::paper();
  else
    throw std::invalid_argument("unknown model preset '" + preset + "' (expected toy or paper)");
  c.vocab_size = vocab_size;
  auto opt = [&](const char* key, auto& field) {
    if (m.contains(key)) field = get<std::decay_t<decltype(field)>>(m.at(key), std::string("model.") + key);
  };
  opt("d_model", c.d_model);
  opt("d_ff", c.d_ff);
  opt("heads", c.heads);
  opt("d_k", c.d_k);
  opt("n_layers_enc", c.n_layers_enc);
  opt("n_layers_dec", c.n_layers_dec);
  opt("context_window", c.context_window);
  opt("dropout", c.dropout);
  c.validate();
  return c;
}

LossConfig RunConfig::loss_config() const {
  const json& l = tree_.at("loss");
  LossConfig lc;
  const json& sched = l.at("schedule");
  if (!sched.empty()) {
    lc.schedule.clear();
    for (const json& p : sched) {
      if (!p.is_array() || p.size() != 3) throw std::invalid_argument("loss.schedule entries must be [step, alpha, beta]");
      lc.schedule.push_back({get<long>(p[0], "loss.schedule"), get<double>(p[1], "loss.schedule"),
                             get<double>(p[2], "loss.schedule")});
    }
  } else {
    const long steps = get<long>(tree_.at("train").at("steps"), "train.steps");
    const double ramp = get<double>(l.at("ramp_start"), "loss.ramp_start");
    const double alpha = get<double>(l.at("alpha_max"), "loss.alpha_max");
    const double beta = get<double>(l.at("beta"), "loss.beta");
    if (!(ramp >= 0 && ramp <= 1)) throw std::invalid_argument("loss.ramp_start must be in [0, 1]");
    const long start = static_cast<long>(std::llround(ramp * static_cast<double>(steps)));
    lc.schedule = {{0, 0.0, beta}, {start, 0.0, beta}, {std::max(steps, start + 1), alpha, beta}};
    if (start == 0) lc.schedule.erase(lc.schedule.begin());
  }
  lc.epsilon_smooth = get<double>(l.at("epsilon_smooth"), "loss.epsilon_smooth");
  lc.validate();
  return lc;
}

OptimizerConfig RunConfig::optimizer_config() const {
  const json& o = tree_.at("optimizer");
  OptimizerConfig oc;
  oc.lr = get<double>(o.at("lr"), "optimizer.lr");
  oc.warmup = get<long>(o.at("warmup"), "optimizer.warmup");
  oc.beta1 = get<double>(o.at("beta1"), "optimizer.beta1");
  oc.beta2 = get<double>(o.at("beta2"), "optimizer.beta2");
  oc.eps = get<double>(o.at("eps"), "optimizer.eps");
  oc.clip_norm = get<double>(o.at("clip_norm"), "optimizer.clip_norm");
  oc.validate();
  return oc;
}

TrainConfig RunConfig::train_config() const {
  const json& t = tree_.at("train");
  TrainConfig tc;
  tc.steps = get<long>(t.at("steps"), "train.steps");
  tc.batch_size = get<int>(t.at("batch_size"), "train.batch_size");
  tc.eval_every = get<long>(t.at("eval_every"), "train.eval_every");
  tc.eval_examples = get<std::size_t>(t.at("eval_examples"), "train.eval_examples");
  tc.seed = batch_seed(seed());
  tc.validate();
  return tc;
}

DecodeConfig RunConfig::decode_config() const {
  const json& d = tree_.at("decode");
  DecodeConfig dc;
  dc.strategy = parse_strategy(get<std::string>(d.at("strategy"), "decode.strategy"));
  dc.temperature = get<double>(d.at("temperature"), "decode.temperature");
  dc.top_k = get<int>(d.at("top_k"), "decode.top_k");
  dc.top_p = get<double>(d.at("top_p"), "decode.top_p");
  dc.max_len = get<int>(d.at("max_len"), "decode.max_len");
  return dc;
}

TokenSweep RunConfig::token_sweep() const {
  const json& b = tree_.at("bench");
  TokenSweep s;
  s.axis = parse_axis(get<std::string>(b.at("axis"), "bench.axis"));
  s.fixed = get<int>(b.at("fixed"), "bench.fixed");
  s.from = get<int>(b.at("from"), "bench.from");
  s.to = get<int>(b.at("to"), "bench.to");
  s.samples = get<int>(b.at("samples"), "bench.samples");
  s.source = get<std::string>(b.at("source"), "bench.source");
  s.target = get<std::string>(b.at("target"), "bench.target");
  s.seed = seed();
  return s;
}

SkConfig RunConfig::sk_config() const {
  const json& k = tree_.at("sk");
  SkConfig c;
  c.basis = get<std::vector<std::string>>(k.at("basis"), "sk.basis");
  c.base_length = get<int>(k.at("base_length"), "sk.base_length");
  c.recursion_depth = get<int>(k.at("depth"), "sk.depth");
  c.epsilon = get<double>(k.at("epsilon"), "sk.epsilon");
  return c;
}

std::string RunConfig::to_toml() const {
  std::ostringstream ss;
  ss << to_toml_table(tree_) << '\n';
  return ss.str();
}

void RunConfig::echo(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream out(dir / "config.toml", std::ios::binary);
  out << to_toml();
  if (ec || !out) throw IoError("cannot write " + (dir / "config.toml").string());
}

std::uint64_t model_seed(std::uint64_t seed) { return splitmix64(seed ^ 0x6d6f64656cULL); }
std::uint64_t batch_seed(std::uint64_t seed) { return splitmix64(seed ^ 0x6261746368ULL); }
std::uint64_t split_seed(std::uint64_t seed) { return splitmix64(seed ^ 0x73706c6974ULL); }

}  // namespace qasmtx::cli
