#include "qasmtx/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace qasmtx {

ModelConfig ModelConfig::toy(int vocab_size) {
  ModelConfig c;
  c.vocab_size = vocab_size;
  return c;
}

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.d_model = 768;
  c.d_ff = 2048;
  c.heads = 8;
  c.d_k = 96;
  c.n_layers_enc = 6;
  c.n_layers_dec = 6;
  c.context_window = 768;
  c.vocab_size = 3;
  c.dropout = 0.1;
  return c;
}

void ModelConfig::validate() const {
  if (d_model <= 0 || d_ff <= 0 || heads <= 0 || d_k <= 0 || vocab_size <= 0)
    throw std::invalid_argument("model sizes must be positive");
  if (n_layers_enc < 0 || n_layers_dec < 0) throw std::invalid_argument("layer counts must be non-negative");
  if (d_model != heads * d_k) throw std::invalid_argument("d_model must equal heads * d_k");
  if (context_window < 8) throw std::invalid_argument("context_window must be at least 8");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must be in [0, 1)");
}

std::string ModelConfig::to_json() const {
  nlohmann::json j;
  j["d_model"] = d_model;
  j["d_ff"] = d_ff;
  j["heads"] = heads;
  j["d_k"] = d_k;
  j["n_layers_enc"] = n_layers_enc;
  j["n_layers_dec"] = n_layers_dec;
  j["context_window"] = context_window;
  j["vocab_size"] = vocab_size;
  j["dropout"] = dropout;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ModelConfig c;
  c.d_model = j.at("d_model");
  c.d_ff = j.at("d_ff");
  c.heads = j.at("heads");
  c.d_k = j.at("d_k");
  c.n_layers_enc = j.at("n_layers_enc");
  c.n_layers_dec = j.at("n_layers_dec");
  c.context_window = j.at("context_window");
  c.vocab_size = j.at("vocab_size");
  c.dropout = j.at("dropout");
  c.validate();
  return c;
}

std::vector<ParamSpec> parameter_inventory(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<ParamSpec> inv;
  std::size_t offset = 0;
  auto add = [&](const std::string& name, long r, long c) {
    inv.push_back({name, r, c, offset});
    offset += static_cast<std::size_t>(r * c);
  };
  const long d = cfg.d_model, f = cfg.d_ff, v = cfg.vocab_size;
  auto linear = [&](const std::string& p, long in, long out) {
    add(p + ".w", in, out);
    add(p + ".b", 1, out);
  };
  auto attention = [&](const std::string& p) {
    for (const char* m : {"q", "k", "v", "o"}) linear(p + "." + m, d, d);
  };
  auto norm = [&](const std::string& p) {
    add(p + ".g", 1, d);
    add(p + ".b", 1, d);
  };
  auto ff = [&](const std::string& p) {
    linear(p + ".in", d, f);
    linear(p + ".out", f, d);
  };
  add("embed", v, d);
  for (int l = 0; l < cfg.n_layers_enc; ++l) {
    const std::string p = "enc." + std::to_string(l);
    attention(p + ".attn");
    norm(p + ".ln1");
    ff(p + ".ff");
    norm(p + ".ln2");
  }
  norm("enc.ln");
  for (int l = 0; l < cfg.n_layers_dec; ++l) {
    const std::string p = "dec." + std::to_string(l);
    attention(p + ".self_attn");
    norm(p + ".ln1");
    attention(p + ".cross_attn");
    norm(p + ".ln2");
    ff(p + ".ff");
    norm(p + ".ln3");
  }
  norm("dec.ln");
  linear("out", d, v);
  return inv;
}

std::size_t parameter_count(const ModelConfig& cfg) {
  const auto inv = parameter_inventory(cfg);
  return inv.back().offset + inv.back().size();
}

namespace {

template <typename S>
class Binder {
 public:
  Binder(S* base, const std::vector<ParamSpec>& inv) : base_(base), inv_(inv) {}

  nn::MapMat<S> mat() {
    const ParamSpec& p = inv_.at(i_++);
    return nn::MapMat<S>(base_ + p.offset, p.rows, p.cols);
  }
  nn::MapRow<S> row() {
    const ParamSpec& p = inv_.at(i_++);
    return nn::MapRow<S>(base_ + p.offset, p.cols);
  }
  nn::LinearW<S> linear() { return {mat(), row()}; }
  nn::LayerNormW<S> norm() { return {row(), row()}; }
  nn::AttentionW<S> attention() { return {linear(), linear(), linear(), linear()}; }
  nn::FeedForwardW<S> ff() { return {linear(), linear()}; }

 private:
  S* base_;
  const std::vector<ParamSpec>& inv_;
  std::size_t i_ = 0;
};

}  // namespace

template <typename S>
WeightsView<S> bind_weights(S* base, const ModelConfig& cfg) {
  const auto inv = parameter_inventory(cfg);
  Binder<S> b(base, inv);
  auto embed = b.mat();
  std::vector<EncoderLayerW<S>> enc;
  for (int l = 0; l < cfg.n_layers_enc; ++l) enc.push_back({b.attention(), b.norm(), b.ff(), b.norm()});
  auto enc_ln = b.norm();
  std::vector<DecoderLayerW<S>> dec;
  for (int l = 0; l < cfg.n_layers_dec; ++l)
    dec.push_back({b.attention(), b.norm(), b.attention(), b.norm(), b.ff(), b.norm()});
  auto dec_ln = b.norm();
  auto out = b.linear();
  return {embed, std::move(enc), enc_ln, std::move(dec), dec_ln, out};
}

template WeightsView<float> bind_weights(float*, const ModelConfig&);
template WeightsView<double> bind_weights(double*, const ModelConfig&);

namespace {

template <typename S>
nn::Buffer<S> initial_params(const ModelConfig& cfg, std::uint64_t seed) {
  nn::Buffer<S> p(parameter_count(cfg));
  Rng rng(seed);
  for (const auto& spec : parameter_inventory(cfg)) {
    const bool is_gain = spec.name.size() > 2 && spec.name.ends_with(".g");
    const bool is_bias = spec.rows == 1 && !is_gain;
    double a = 0;
    if (spec.name == "embed")
      a = std::sqrt(3.0 / cfg.d_model);
    else if (!is_gain && !is_bias)
      a = std::sqrt(6.0 / static_cast<double>(spec.rows + spec.cols));
    for (std::size_t i = 0; i < spec.size(); ++i) {
      S& x = p[spec.offset + i];
      if (is_gain)
        x = S(1);
      else if (is_bias)
        x = S(0);
      else
        x = static_cast<S>(rng.uniform(-a, a));
    }
  }
  return p;
}

template <typename S>
void apply_dropout(nn::Mat<S>& x, nn::Mat<S>& mask, double rate, Rng* rng) {
  if (rng == nullptr || rate <= 0.0) {
    mask.resize(0, 0);
    return;
  }
  mask.resize(x.rows(), x.cols());
  const S keep = static_cast<S>(1.0 / (1.0 - rate));
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng->uniform() < rate ? S(0) : keep;
  x.array() *= mask.array();
}

template <typename S>
void undo_dropout(nn::Mat<S>& dx, const nn::Mat<S>& mask) {
  if (mask.size() != 0) dx.array() *= mask.array();
}

std::vector<char> key_mask(const std::vector<int>& src) {
  std::vector<char> valid(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) valid[i] = src[i] != 0;
  return valid;
}

}  // namespace

template <typename S>
Transformer<S>::Transformer(ModelConfig cfg, std::uint64_t seed)
    : cfg_(cfg),
      params_(initial_params<S>(cfg, seed)),
      w_(bind_weights(params_.data(), cfg_)),
      pe_(nn::positional_encoding<S>(cfg_.context_window, cfg_.d_model)) {}

template <typename S>
Transformer<S>::Transformer(const Transformer& other)
    : cfg_(other.cfg_), params_(other.params_), w_(bind_weights(params_.data(), cfg_)), pe_(other.pe_) {}

template <typename S>
Transformer<S>& Transformer<S>::operator=(const Transformer& other) {
  if (this != &other) {
    cfg_ = other.cfg_;
    params_ = other.params_;
    pe_ = other.pe_;
    w_ = bind_weights(params_.data(), cfg_);
  }
  return *this;
}

template <typename S>
template <typename T>
Transformer<T> Transformer<S>::cast() const {
  Transformer<T> out(cfg_, 0);
  for (std::size_t i = 0; i < params_.size(); ++i) out.params()[i] = static_cast<T>(params_[i]);
  return out;
}

template Transformer<double> Transformer<float>::cast<double>() const;
template Transformer<float> Transformer<double>::cast<float>() const;
template Transformer<float> Transformer<float>::cast<float>() const;
template Transformer<double> Transformer<double>::cast<double>() const;

template <typename S>
void Transformer<S>::check_ids(const std::vector<int>& ids) const {
  if (ids.empty()) throw std::invalid_argument("empty token sequence");
  if (static_cast<int>(ids.size()) > cfg_.context_window)
    throw std::invalid_argument("sequence of " + std::to_string(ids.size()) + " tokens exceeds the context window");
  for (int id : ids)
    if (id < 0 || id >= cfg_.vocab_size) throw std::invalid_argument("token id outside the model vocabulary");
}

template <typename S>
typename Transformer<S>::Mat Transformer<S>::embed(const std::vector<int>& ids) const {
  const S scale = std::sqrt(static_cast<S>(cfg_.d_model));
  Mat x(static_cast<Eigen::Index>(ids.size()), cfg_.d_model);
  for (std::size_t t = 0; t < ids.size(); ++t) x.row(t) = w_.embed.row(ids[t]) * scale + pe_.row(t);
  return x;
}

template <typename S>
typename Transformer<S>::Mat Transformer<S>::encoder(const std::vector<int>& src, const std::vector<char>& valid,
                                                     Cache* cache, Rng* dropout) const {
  Mat drop;
  Mat x = embed(src);
  apply_dropout(x, cache ? cache->drop_src : drop, cfg_.dropout, dropout);
  if (cache) cache->enc.resize(cfg_.n_layers_enc);
  for (int l = 0; l < cfg_.n_layers_enc; ++l) {
    const auto& lw = w_.enc[l];
    EncoderLayerCache* c = cache ? &cache->enc[l] : nullptr;
    Mat a = nn::attention(x, x, lw.attn, cfg_.heads, &valid, false, c ? &c->attn : nullptr);
    apply_dropout(a, c ? c->drop_a : drop, cfg_.dropout, dropout);
    const Mat x1 = nn::layer_norm<S>(x + a, lw.ln1, c ? &c->ln1 : nullptr);
    Mat f = nn::feed_forward(x1, lw.ff, c ? &c->ff : nullptr);
    apply_dropout(f, c ? c->drop_f : drop, cfg_.dropout, dropout);
    x = nn::layer_norm<S>(x1 + f, lw.ln2, c ? &c->ln2 : nullptr);
  }
  return nn::layer_norm(x, w_.enc_ln, cache ? &cache->enc_ln : nullptr);
}

template <typename S>
typename Transformer<S>::Mat Transformer<S>::encode(const std::vector<int>& src) const {
  check_ids(src);
  return encoder(src, key_mask(src), nullptr, nullptr);
}

template <typename S>
typename Transformer<S>::Mat Transformer<S>::forward(const std::vector<int>& src, const std::vector<int>& tgt_in,
                                                     Cache* cache, Rng* dropout) const {
  check_ids(src);
  check_ids(tgt_in);
  const std::vector<char> valid = key_mask(src);
  const Mat memory = encoder(src, valid, cache, dropout);
  Mat drop;
  Mat y = embed(tgt_in);
  apply_dropout(y, cache ? cache->drop_tgt : drop, cfg_.dropout, dropout);
  if (cache) cache->dec.resize(cfg_.n_layers_dec);
  for (int l = 0; l < cfg_.n_layers_dec; ++l) {
    const auto& lw = w_.dec[l];
    DecoderLayerCache* c = cache ? &cache->dec[l] : nullptr;
    Mat s = nn::attention(y, y, lw.self_attn, cfg_.heads, nullptr, true, c ? &c->self_attn : nullptr);
    apply_dropout(s, c ? c->drop_s : drop, cfg_.dropout, dropout);
    const Mat y1 = nn::layer_norm<S>(y + s, lw.ln1, c ? &c->ln1 : nullptr);
    Mat x = nn::attention(y1, memory, lw.cross_attn, cfg_.heads, &valid, false, c ? &c->cross_attn : nullptr);
    apply_dropout(x, c ? c->drop_c : drop, cfg_.dropout, dropout);
    const Mat y2 = nn::layer_norm<S>(y1 + x, lw.ln2, c ? &c->ln2 : nullptr);
    Mat f = nn::feed_forward(y2, lw.ff, c ? &c->ff : nullptr);
    apply_dropout(f, c ? c->drop_f : drop, cfg_.dropout, dropout);
    y = nn::layer_norm<S>(y2 + f, lw.ln3, c ? &c->ln3 : nullptr);
  }
  Mat z = nn::layer_norm(y, w_.dec_ln, cache ? &cache->dec_ln : nullptr);
  Mat logits = nn::linear(z, w_.out);
  if (cache) {
    cache->src = src;
    cache->tgt = tgt_in;
    cache->src_valid = valid;
    cache->memory = memory;
    cache->z = std::move(z);
  }
  return logits;
}

template <typename S>
void Transformer<S>::backward(const Cache& c, const Mat& dlogits, nn::Buffer<S>& grad) const {
  if (grad.size() != params_.size()) throw std::invalid_argument("gradient buffer size mismatch");
  WeightsView<S> g = bind_weights(grad.data(), cfg_);
  const S scale = std::sqrt(static_cast<S>(cfg_.d_model));

  const Mat dz = nn::linear_backward(c.z, dlogits, w_.out, g.out);
  Mat dy = nn::layer_norm_backward(dz, w_.dec_ln, g.dec_ln, c.dec_ln);
  Mat dmem = Mat::Zero(c.memory.rows(), c.memory.cols());
  Mat dq, dkv;
  for (int l = cfg_.n_layers_dec - 1; l >= 0; --l) {
    const auto& lw = w_.dec[l];
    auto& lg = g.dec[l];
    const auto& lc = c.dec[l];
    const Mat ds3 = nn::layer_norm_backward(dy, lw.ln3, lg.ln3, lc.ln3);
    Mat df = ds3;
    undo_dropout(df, lc.drop_f);
    const Mat dy2 = ds3 + nn::feed_forward_backward(df, lw.ff, lg.ff, lc.ff);
    const Mat ds2 = nn::layer_norm_backward(dy2, lw.ln2, lg.ln2, lc.ln2);
    Mat dc = ds2;
    undo_dropout(dc, lc.drop_c);
    nn::attention_backward(dc, lw.cross_attn, lg.cross_attn, cfg_.heads, lc.cross_attn, dq, dkv);
    const Mat dy1 = ds2 + dq;
    dmem += dkv;
    const Mat ds1 = nn::layer_norm_backward(dy1, lw.ln1, lg.ln1, lc.ln1);
    Mat dsa = ds1;
    undo_dropout(dsa, lc.drop_s);
    nn::attention_backward(dsa, lw.self_attn, lg.self_attn, cfg_.heads, lc.self_attn, dq, dkv);
    dy = ds1 + dq + dkv;
  }
  undo_dropout(dy, c.drop_tgt);
  for (std::size_t t = 0; t < c.tgt.size(); ++t) g.embed.row(c.tgt[t]) += scale * dy.row(t);

  Mat dx = nn::layer_norm_backward(dmem, w_.enc_ln, g.enc_ln, c.enc_ln);
  for (int l = cfg_.n_layers_enc - 1; l >= 0; --l) {
    const auto& lw = w_.enc[l];
    auto& lg = g.enc[l];
    const auto& lc = c.enc[l];
    const Mat ds2 = nn::layer_norm_backward(dx, lw.ln2, lg.ln2, lc.ln2);
    Mat df = ds2;
    undo_dropout(df, lc.drop_f);
    const Mat dx1 = ds2 + nn::feed_forward_backward(df, lw.ff, lg.ff, lc.ff);
    const Mat ds1 = nn::layer_norm_backward(dx1, lw.ln1, lg.ln1, lc.ln1);
    Mat da = ds1;
    undo_dropout(da, lc.drop_a);
    nn::attention_backward(da, lw.attn, lg.attn, cfg_.heads, lc.attn, dq, dkv);
    dx = ds1 + dq + dkv;
  }
  undo_dropout(dx, c.drop_src);
  for (std::size_t t = 0; t < c.src.size(); ++t) g.embed.row(c.src[t]) += scale * dx.row(t);
}

template <typename S>
typename Transformer<S>::DecodeState Transformer<S>::start(const std::vector<int>& src, int capacity) const {
  if (capacity < 1 || capacity > cfg_.context_window) throw std::invalid_argument("decode capacity outside the window");
  DecodeState st;
  st.src_valid = key_mask(src);
  st.memory = encode(src);
  st.capacity = capacity;
  for (const auto& lw : w_.dec) {
    st.cross_k.push_back(nn::linear(st.memory, lw.cross_attn.k));
    st.cross_v.push_back(nn::linear(st.memory, lw.cross_attn.v));
    st.self_k.emplace_back(capacity, cfg_.d_model);
    st.self_v.emplace_back(capacity, cfg_.d_model);
  }
  return st;
}

namespace {

// One query row against cached keys and values.
template <typename S>
nn::Mat<S> attend_row(const nn::Mat<S>& q, const nn::Mat<S>& k, const nn::Mat<S>& v, int heads,
                      const std::vector<char>* valid) {
  const Eigen::Index d = q.cols(), dk = d / heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(dk));
  nn::Mat<S> o(1, d);
  for (int h = 0; h < heads; ++h) {
    nn::Mat<S> s = (q.middleCols(h * dk, dk) * k.middleCols(h * dk, dk).transpose()) * scale;
    nn::masked_softmax(s, valid, false);
    o.middleCols(h * dk, dk).noalias() = s * v.middleCols(h * dk, dk);
  }
  return o;
}

}  // namespace

template <typename S>
typename Transformer<S>::Row Transformer<S>::step(DecodeState& st, int token) const {
  if (st.pos >= st.capacity) throw std::out_of_range("decode state is full");
  if (token < 0 || token >= cfg_.vocab_size) throw std::invalid_argument("token id outside the model vocabulary");
  const int pos = st.pos;
  Mat y = w_.embed.row(token) * std::sqrt(static_cast<S>(cfg_.d_model)) + pe_.row(pos);
  for (int l = 0; l < cfg_.n_layers_dec; ++l) {
    const auto& lw = w_.dec[l];
    const Mat q = nn::linear(y, lw.self_attn.q);
    st.self_k[l].row(pos) = nn::linear(y, lw.self_attn.k);
    st.self_v[l].row(pos) = nn::linear(y, lw.self_attn.v);
    const Mat k = st.self_k[l].topRows(pos + 1), v = st.self_v[l].topRows(pos + 1);
    const Mat s = nn::linear(attend_row(q, k, v, cfg_.heads, nullptr), lw.self_attn.o);
    const Mat y1 = nn::layer_norm<S>(y + s, lw.ln1);
    const Mat qc = nn::linear(y1, lw.cross_attn.q);
    const Mat x = nn::linear(attend_row(qc, st.cross_k[l], st.cross_v[l], cfg_.heads, &st.src_valid), lw.cross_attn.o);
    const Mat y2 = nn::layer_norm<S>(y1 + x, lw.ln2);
    y = nn::layer_norm<S>(y2 + nn::feed_forward(y2, lw.ff), lw.ln3);
  }
  ++st.pos;
  return nn::linear(nn::layer_norm(y, w_.dec_ln), w_.out);
}

template class Transformer<float>;
template class Transformer<double>;

void DecodeConfig::validate(int context_window) const {
  if (!(temperature > 0)) throw std::invalid_argument("temperature must be positive");
  if (top_k < 1) throw std::invalid_argument("top_k must be at least 1");
  if (!(top_p > 0 && top_p <= 1)) throw std::invalid_argument("top_p must be in (0, 1]");
  if (max_len < 0 || max_len > context_window) throw std::invalid_argument("max_len must be within the context window");
}

DecodeStrategy parse_strategy(const std::string& name) {
  if (name == "greedy") return DecodeStrategy::Greedy;
  if (name == "temperature") return DecodeStrategy::Temperature;
  if (name == "top_k") return DecodeStrategy::TopK;
  if (name == "top_p") return DecodeStrategy::TopP;
  throw std::invalid_argument("unknown decode strategy '" + name + "'");
}

std::string to_string(DecodeStrategy s) {
  switch (s) {
    case DecodeStrategy::Greedy: return "greedy";
    case DecodeStrategy::Temperature: return "temperature";
    case DecodeStrategy::TopK: return "top_k";
    case DecodeStrategy::TopP: return "top_p";
  }
  return "greedy";
}

std::vector<double> sampling_distribution(const std::vector<double>& logits, const DecodeConfig& dc) {
  const std::size_t n = logits.size();
  std::vector<double> p(n, 0.0);
  if (n == 0) return p;
  if (dc.strategy == DecodeStrategy::Greedy) {
    p[std::max_element(logits.begin(), logits.end()) - logits.begin()] = 1.0;
    return p;
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0;
  for (std::size_t i = 0; i < n; ++i) z += p[i] = std::exp((logits[i] - mx) / dc.temperature);
  for (auto& x : p) x /= z;
  if (dc.strategy == DecodeStrategy::Temperature) return p;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  std::size_t keep = n;
  if (dc.strategy == DecodeStrategy::TopK) {
    keep = std::min<std::size_t>(n, static_cast<std::size_t>(dc.top_k));
  } else {
    double cum = 0;
    for (keep = 0; keep < n;) {
      cum += p[order[keep++]];
      if (cum >= dc.top_p) break;
    }
  }
  std::vector<double> q(n, 0.0);
  double kept = 0;
  for (std::size_t i = 0; i < keep; ++i) kept += q[order[i]] = p[order[i]];
  for (auto& x : q) x /= kept;
  return q;
}

int sample_index(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0;
  int last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0) continue;
    last = static_cast<int>(i);
    cum += probs[i];
    if (u < cum) return last;
  }
  return last;
}

template <typename S>
std::vector<int> decode_sequence(const Transformer<S>& m, const std::vector<int>& src, const DecodeConfig& dc,
                                 int bos, int eos, Rng* rng) {
  dc.validate(m.config().context_window);
  if (dc.strategy != DecodeStrategy::Greedy && rng == nullptr)
    throw std::invalid_argument("sampling strategies need a random stream");
  const int max_len = dc.max_len > 0 ? dc.max_len : m.config().context_window;
  auto st = m.start(src, max_len);
  std::vector<int> out{bos};
  std::vector<double> logits(m.config().vocab_size);
  while (static_cast<int>(out.size()) < max_len) {
    const auto row = m.step(st, out.back());
    for (int i = 0; i < m.config().vocab_size; ++i) logits[i] = static_cast<double>(row(i));
    int next;
    if (dc.strategy == DecodeStrategy::Greedy)
      next = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    else
      next = sample_index(sampling_distribution(logits, dc), *rng);
    out.push_back(next);
    if (next == eos) break;
  }
  return out;
}

template std::vector<int> decode_sequence(const Transformer<float>&, const std::vector<int>&, const DecodeConfig&,
                                          int, int, Rng*);
template std::vector<int> decode_sequence(const Transformer<double>&, const std::vector<int>&, const DecodeConfig&,
                                          int, int, Rng*);

}  // namespace qasmtx
