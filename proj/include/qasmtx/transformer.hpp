#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qasmtx/nn.hpp"
#include "qasmtx/rng.hpp"

namespace qasmtx {

struct ModelConfig {
  int d_model = 64;
  int d_ff = 128;
  int heads = 4;
  int d_k = 16;
  int n_layers_enc = 2;
  int n_layers_dec = 2;
  int context_window = 256;
  int vocab_size = 0;
  double dropout = 0.0;

  static ModelConfig toy(int vocab_size);
  /// d_model 768, d_ff 2048, 8 heads, 6 + 6 layers, window 768. Vocabulary
  /// size 3 makes the inventory total 80,358,915.
  static ModelConfig paper();

  /// Throws std::invalid_argument when d_model != heads · d_k, the window is
  /// below 8, or a size is non-positive.
  void validate() const;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct ParamSpec {
  std::string name;
  long rows = 0;
  long cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

/// Named parameter tensors in storage order. Biases and LayerNorm vectors
/// are 1 × n.
std::vector<ParamSpec> parameter_inventory(const ModelConfig& cfg);
std::size_t parameter_count(const ModelConfig& cfg);

template <typename S>
struct EncoderLayerW {
  nn::AttentionW<S> attn;
  nn::LayerNormW<S> ln1;
  nn::FeedForwardW<S> ff;
  nn::LayerNormW<S> ln2;
};

template <typename S>
struct DecoderLayerW {
  nn::AttentionW<S> self_attn;
  nn::LayerNormW<S> ln1;
  nn::AttentionW<S> cross_attn;
  nn::LayerNormW<S> ln2;
  nn::FeedForwardW<S> ff;
  nn::LayerNormW<S> ln3;
};

/// Typed views over a flat parameter (or gradient) buffer.
template <typename S>
struct WeightsView {
  nn::MapMat<S> embed;
  std::vector<EncoderLayerW<S>> enc;
  nn::LayerNormW<S> enc_ln;
  std::vector<DecoderLayerW<S>> dec;
  nn::LayerNormW<S> dec_ln;
  nn::LinearW<S> out;
};

template <typename S>
WeightsView<S> bind_weights(S* base, const ModelConfig& cfg);

/// Post-LN encoder-decoder transformer over one shared token embedding.
/// Sequences are processed one at a time, so no padding is needed inside a
/// batch; <PAD> ids in the source are still masked as keys.
template <typename S>
class Transformer {
 public:
  using Mat = nn::Mat<S>;
  using Row = nn::RowVec<S>;

  struct EncoderLayerCache {
    nn::AttentionCache<S> attn;
    nn::LayerNormCache<S> ln1, ln2;
    nn::FeedForwardCache<S> ff;
    Mat drop_a, drop_f;
  };
  struct DecoderLayerCache {
    nn::AttentionCache<S> self_attn, cross_attn;
    nn::LayerNormCache<S> ln1, ln2, ln3;
    nn::FeedForwardCache<S> ff;
    Mat drop_s, drop_c, drop_f;
  };
  struct Cache {
    std::vector<int> src, tgt;
    std::vector<char> src_valid;
    Mat drop_src, drop_tgt;
    std::vector<EncoderLayerCache> enc;
    nn::LayerNormCache<S> enc_ln;
    Mat memory;
    std::vector<DecoderLayerCache> dec;
    nn::LayerNormCache<S> dec_ln;
    Mat z;
  };

  /// Incremental decoder state with cached keys and values.
  struct DecodeState {
    Mat memory;
    std::vector<char> src_valid;
    std::vector<Mat> self_k, self_v, cross_k, cross_v;
    int pos = 0;
    int capacity = 0;
  };

  /// Fan-based uniform initialization from `seed`.
  explicit Transformer(ModelConfig cfg, std::uint64_t seed = 0);
  Transformer(const Transformer& other);
  Transformer& operator=(const Transformer& other);

  const ModelConfig& config() const { return cfg_; }
  nn::Buffer<S>& params() { return params_; }
  const nn::Buffer<S>& params() const { return params_; }
  const WeightsView<S>& weights() const { return w_; }
  WeightsView<S>& weights() { return w_; }

  template <typename T>
  Transformer<T> cast() const;

  /// Logits for each position of `tgt_in` (rows) over the vocabulary.
  /// With a cache the activations needed by backward are kept; with a
  /// dropout stream, dropout is active.
  Mat forward(const std::vector<int>& src, const std::vector<int>& tgt_in, Cache* cache = nullptr,
              Rng* dropout = nullptr) const;

  /// Accumulates dL/dθ into `grad` given dL/dlogits.
  void backward(const Cache& cache, const Mat& dlogits, nn::Buffer<S>& grad) const;

  Mat encode(const std::vector<int>& src) const;

  DecodeState start(const std::vector<int>& src, int capacity) const;
  /// Feeds `token` at the next position and returns its logits row.
  Row step(DecodeState& state, int token) const;

 private:
  Mat embed(const std::vector<int>& ids) const;
  void check_ids(const std::vector<int>& ids) const;
  Mat encoder(const std::vector<int>& src, const std::vector<char>& valid, Cache* cache, Rng* dropout) const;

  ModelConfig cfg_;
  nn::Buffer<S> params_;
  WeightsView<S> w_;
  Mat pe_;
};

extern template class Transformer<float>;
extern template class Transformer<double>;

enum class DecodeStrategy { Greedy, Temperature, TopK, TopP };

struct DecodeConfig {
  DecodeStrategy strategy = DecodeStrategy::Greedy;
  double temperature = 1.0;
  int top_k = 1;
  double top_p = 0.9;
  /// 0 means the model's context window.
  int max_len = 0;

  /// Throws std::invalid_argument for T ≤ 0, K < 1, P outside (0, 1] or
  /// max_len beyond the window.
  void validate(int context_window) const;
};

DecodeStrategy parse_strategy(const std::string& name);
std::string to_string(DecodeStrategy s);

/// The distribution a strategy samples from; greedy is one-hot at the first
/// maximum.
std::vector<double> sampling_distribution(const std::vector<double>& logits, const DecodeConfig& dc);

int sample_index(const std::vector<double>& probs, Rng& rng);

/// Autoregressive generation from <BOS> until <EOS> or max_len tokens
/// (including <BOS>). Sampling strategies draw from `rng`.
template <typename S>
std::vector<int> decode_sequence(const Transformer<S>& m, const std::vector<int>& src, const DecodeConfig& dc,
                                 int bos, int eos, Rng* rng = nullptr);

}  // namespace qasmtx
