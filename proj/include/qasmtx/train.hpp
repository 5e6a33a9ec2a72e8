#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qasmtx/dataset.hpp"
#include "qasmtx/gates.hpp"
#include "qasmtx/tokenizer.hpp"
#include "qasmtx/transformer.hpp"

namespace qasmtx {

/// A tokenized training pair with the exact unitary of its reference target.
struct Example {
  std::vector<int> src;
  std::vector<int> tgt;
  int n_qubits = 0;
  UnitaryMatrix target_unitary;
};

Example make_example(const DatasetRecord& r, const Vocabulary& v);
std::vector<Example> make_examples(const std::vector<DatasetRecord>& records, const Vocabulary& v);

struct Split {
  std::vector<Example> train;
  std::vector<Example> holdout;
};

/// Seeded shuffle, then the last round(fraction · n) examples are held out.
Split split_holdout(std::vector<Example> examples, double fraction, std::uint64_t seed);

/// Mean cross-entropy over non-pad positions against targets smoothed to
/// 1 − ε on the true class and ε/(V−1) elsewhere. With `dlogits`, writes
/// scale · ∂loss/∂logits. Throws std::invalid_argument on a shape mismatch
/// or when every target is <PAD>.
template <typename S>
double smoothed_ce(const nn::Mat<S>& logits, const std::vector<int>& targets, double epsilon, int pad = 0,
                   nn::Mat<S>* dlogits = nullptr, double scale = 1.0);

/// Entropy of the smoothed target distribution, the minimum of smoothed_ce.
double smoothed_entropy(int vocab_size, double epsilon);

struct SchedulePoint {
  long step = 0;
  double alpha = 0.0;
  double beta = 1.0;
};

struct LossConfig {
  double epsilon_smooth = 0.1;
  /// Piecewise linear in step, held constant outside the breakpoints.
  std::vector<SchedulePoint> schedule{{0, 0.0, 1.0}};

  /// β = 1; α = 0 for the first 30% of `total_steps`, then a ramp to 0.5.
  static LossConfig standard(long total_steps);

  /// Throws std::invalid_argument for negative weights, α + β = 0, an empty
  /// or unsorted schedule, or ε outside [0, 1).
  void validate() const;
  SchedulePoint at(long step) const;
};

struct LossValue {
  double total = 0.0;
  double ce = 0.0;
  /// Absent when α = 0 and the fidelity term was not evaluated.
  std::optional<double> fidelity_loss;
  double alpha = 0.0;
  double beta = 1.0;
};

/// L = α L_F + β L_CE over a batch. L_CE is the token-weighted smoothed CE
/// under teacher forcing; L_F is the mean of 1 − F over greedy decodes.
/// With `grad`, accumulates ∂L_CE·β exactly plus α times a score-function
/// term (1 − F_i − b) · mean log p(decode_i), b the batch mean of 1 − F.
double fidelity_of(const std::vector<int>& ids, const Example& ex, const Vocabulary& v, bool* valid = nullptr);

LossValue composite_loss(const std::vector<const Example*>& batch, const Transformer<float>& m,
                         const Vocabulary& v, const LossConfig& lc, long step, nn::Buffer<float>* grad = nullptr);

struct OptimizerConfig {
  double lr = 3e-4;
  long warmup = 4000;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
  double clip_norm = 1.0;

  void validate() const;
  /// lr · min((s+1)/warmup, sqrt(warmup/(s+1))).
  double rate(long step) const;
};

class Adam {
 public:
  Adam(OptimizerConfig cfg, std::size_t n);
  /// Clips `grad` to the configured norm, applies one update, and returns the
  /// pre-clip gradient norm.
  double step(nn::Buffer<float>& params, nn::Buffer<float>& grad);
  long steps() const { return t_; }

 private:
  OptimizerConfig cfg_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

struct EvalReport {
  std::size_t examples = 0;
  std::size_t valid = 0;
  double grammar_accuracy = 0.0;
  /// Invalid outputs count as fidelity 0.
  double mean_fidelity = 0.0;
  /// Over grammatically valid outputs only; 0 when none are valid.
  double mean_fidelity_valid = 0.0;
  /// exp(ce).
  double perplexity = 1.0;
  /// Unsmoothed teacher-forced cross-entropy.
  double ce = 0.0;
  double fidelity_loss = 0.0;
  double total = 0.0;

  std::string to_json() const;
};

/// `alpha` and `beta` only weight the reported total.
EvalReport evaluate(const std::vector<Example>& data, const Transformer<float>& m, const Vocabulary& v,
                    const DecodeConfig& dc = {}, double alpha = 0.0, double beta = 1.0);

struct TraceRow {
  long step = 0;
  double total = 0.0;
  double ce = 0.0;
  std::optional<double> fidelity_loss;
  double lr = 0.0;
  double alpha = 0.0;
  double beta = 1.0;
};

std::string trace_csv_header();
std::string trace_csv_row(const TraceRow& r);

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(long step, const std::string& what) : std::runtime_error(what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

struct TrainConfig {
  long steps = 1000;
  int batch_size = 16;
  std::uint64_t seed = 0;
  long eval_every = 0;
  /// Caps the held-out examples used by periodic evaluation; 0 means all.
  std::size_t eval_examples = 0;
  /// Greedy decodes for L_F stop after 2·|target| + 16 tokens.
  bool cap_fidelity_decode = true;

  void validate() const;
};

struct TrainHooks {
  std::function<void(const TraceRow&)> on_step;
  std::function<void(long, const EvalReport&)> on_eval;
  /// Ends training after an evaluation when it returns true.
  std::function<bool(long, const EvalReport&)> stop;
  /// Called every `checkpoint_every` steps when set.
  std::function<void(long, const Transformer<float>&)> on_checkpoint;
  long checkpoint_every = 0;
};

struct TrainResult {
  std::vector<TraceRow> trace;
  long steps_run = 0;
  std::vector<std::pair<long, EvalReport>> evals;
};

/// Batches are drawn from a per-epoch seeded permutation of `train`.
/// Throws DivergenceError when the loss or gradient norm is non-finite.
TrainResult train(Transformer<float>& m, const std::vector<Example>& train_set,
                  const std::vector<Example>& eval_set, const Vocabulary& v, const LossConfig& lc,
                  const OptimizerConfig& oc, const TrainConfig& tc, const TrainHooks& hooks = {});

}  // namespace qasmtx
