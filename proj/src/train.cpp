#include "qasmtx/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "json.hpp"

#include "qasmtx/qasm.hpp"
#include "qasmtx/unitary.hpp"

namespace qasmtx {

Example make_example(const DatasetRecord& r, const Vocabulary& v) {
  const Circuit src = parse(r.source_qasm);
  const Circuit tgt = parse(r.target_qasm);
  Example ex;
  ex.src = encode(src, v).ids;
  ex.tgt = encode(tgt, v).ids;
  ex.n_qubits = tgt.num_qubits;
  ex.target_unitary = circuit_unitary(tgt);
  return ex;
}

std::vector<Example> make_examples(const std::vector<DatasetRecord>& records, const Vocabulary& v) {
  std::vector<Example> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(make_example(r, v));
  return out;
}

namespace {

template <typename T>
void shuffle(std::vector<T>& xs, Rng& rng) {
  for (std::size_t i = xs.size(); i > 1; --i) std::swap(xs[i - 1], xs[rng.index(i)]);
}

}  // namespace

Split split_holdout(std::vector<Example> examples, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0 && fraction < 1)) throw std::invalid_argument("holdout fraction must be in [0, 1)");
  Rng rng(seed);
  shuffle(examples, rng);
  const auto n_hold = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(examples.size())));
  Split s;
  const auto cut = examples.begin() + static_cast<std::ptrdiff_t>(examples.size() - n_hold);
  s.train.assign(std::make_move_iterator(examples.begin()), std::make_move_iterator(cut));
  s.holdout.assign(std::make_move_iterator(cut), std::make_move_iterator(examples.end()));
  return s;
}

template <typename S>
double smoothed_ce(const nn::Mat<S>& logits, const std::vector<int>& targets, double epsilon, int pad,
                   nn::Mat<S>* dlogits, double scale) {
  const Eigen::Index V = logits.cols();
  if (logits.rows() != static_cast<Eigen::Index>(targets.size()))
    throw std::invalid_argument("logits rows do not match the target count");
  if (V < 2) throw std::invalid_argument("smoothing needs at least two classes");
  if (!(epsilon >= 0 && epsilon < 1)) throw std::invalid_argument("epsilon must be in [0, 1)");
  const double off = epsilon / static_cast<double>(V - 1);
  const double on = 1.0 - epsilon;
  long count = 0;
  for (int t : targets) {
    if (t < 0 || t >= V) throw std::invalid_argument("target id outside the vocabulary");
    count += t != pad;
  }
  if (count == 0) throw std::invalid_argument("no non-pad targets");
  if (dlogits) dlogits->setZero(logits.rows(), V);
  double total = 0;
  Eigen::VectorXd lp(V);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int c = targets[i];
    if (c == pad) continue;
    const Eigen::VectorXd row = logits.row(i).transpose().template cast<double>();
    const double mx = row.maxCoeff();
    lp = row.array() - mx;
    lp.array() -= std::log(lp.array().exp().sum());
    total -= (on - off) * lp(c) + off * lp.sum();
    if (dlogits) {
      Eigen::VectorXd g = lp.array().exp() - off;
      g(c) -= on - off;
      dlogits->row(i) = (g * (scale / static_cast<double>(count))).transpose().template cast<S>();
    }
  }
  return total / static_cast<double>(count);
}

template double smoothed_ce(const nn::Mat<float>&, const std::vector<int>&, double, int, nn::Mat<float>*, double);
template double smoothed_ce(const nn::Mat<double>&, const std::vector<int>&, double, int, nn::Mat<double>*, double);

double smoothed_entropy(int vocab_size, double epsilon) {
  if (vocab_size < 2) throw std::invalid_argument("smoothing needs at least two classes");
  auto xlogx = [](double x) { return x > 0 ? x * std::log(x) : 0.0; };
  const double off = epsilon / (vocab_size - 1);
  return -(xlogx(1.0 - epsilon) + (vocab_size - 1) * xlogx(off));
}

LossConfig LossConfig::standard(long total_steps) {
  LossConfig lc;
  const long ramp = static_cast<long>(std::llround(0.3 * static_cast<double>(total_steps)));
  lc.schedule = {{0, 0.0, 1.0}, {ramp, 0.0, 1.0}, {std::max(total_steps, ramp + 1), 0.5, 1.0}};
  return lc;
}

void LossConfig::validate() const {
  if (!(epsilon_smooth >= 0 && epsilon_smooth < 1)) throw std::invalid_argument("epsilon_smooth must be in [0, 1)");
  if (schedule.empty()) throw std::invalid_argument("loss schedule is empty");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const auto& p = schedule[i];
    if (!(p.alpha >= 0 && p.beta >= 0)) throw std::invalid_argument("loss weights must be non-negative");
    if (!(p.alpha + p.beta > 0)) throw std::invalid_argument("alpha + beta must be positive");
    if (i > 0 && p.step <= schedule[i - 1].step) throw std::invalid_argument("schedule steps must increase");
  }
}

SchedulePoint LossConfig::at(long step) const {
  if (schedule.empty()) throw std::invalid_argument("loss schedule is empty");
  if (step <= schedule.front().step) return {step, schedule.front().alpha, schedule.front().beta};
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    const auto& a = schedule[i - 1];
    const auto& b = schedule[i];
    if (step <= b.step) {
      const double t = static_cast<double>(step - a.step) / static_cast<double>(b.step - a.step);
      return {step, a.alpha + t * (b.alpha - a.alpha), a.beta + t * (b.beta - a.beta)};
    }
  }
  return {step, schedule.back().alpha, schedule.back().beta};
}

double fidelity_of(const std::vector<int>& ids, const Example& ex, const Vocabulary& v, bool* valid) {
  if (valid) *valid = false;
  Circuit c;
  try {
    c = decode(ids, v);
    validate(c);
  } catch (const std::exception&) {
    return 0.0;
  }
  if (valid) *valid = true;
  if (c.num_qubits != ex.n_qubits) return 0.0;
  return fidelity(ex.target_unitary, circuit_unitary(c)).fidelity;
}

namespace {

std::vector<int> shifted_in(const std::vector<int>& ids) { return {ids.begin(), ids.end() - 1}; }
std::vector<int> shifted_out(const std::vector<int>& ids) { return {ids.begin() + 1, ids.end()}; }

long target_count(const std::vector<int>& ids, int pad) {
  return std::count_if(ids.begin() + 1, ids.end(), [&](int t) { return t != pad; });
}

}  // namespace

LossValue composite_loss(const std::vector<const Example*>& batch, const Transformer<float>& m,
                         const Vocabulary& v, const LossConfig& lc, long step, nn::Buffer<float>* grad) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const SchedulePoint w = lc.at(step);
  LossValue out;
  out.alpha = w.alpha;
  out.beta = w.beta;

  long tokens = 0;
  for (const Example* ex : batch) tokens += target_count(ex->tgt, v.pad());
  Transformer<float>::Cache cache;
  nn::Mat<float> dl;
  for (const Example* ex : batch) {
    const double share = static_cast<double>(target_count(ex->tgt, v.pad())) / static_cast<double>(tokens);
    const auto logits = m.forward(ex->src, shifted_in(ex->tgt), grad ? &cache : nullptr);
    out.ce += share * smoothed_ce(logits, shifted_out(ex->tgt), lc.epsilon_smooth, v.pad(), grad ? &dl : nullptr,
                                  w.beta * share);
    if (grad && w.beta > 0) m.backward(cache, dl, *grad);
  }
  out.total = w.beta * out.ce;
  if (w.alpha <= 0) return out;

  const std::size_t B = batch.size();
  std::vector<std::vector<int>> decoded(B);
  std::vector<double> loss(B);
  for (std::size_t i = 0; i < B; ++i) {
    DecodeConfig dc;
    dc.max_len = std::min<int>(m.config().context_window, 2 * static_cast<int>(batch[i]->tgt.size()) + 16);
    decoded[i] = decode_sequence(m, batch[i]->src, dc, v.bos(), v.eos());
    loss[i] = 1.0 - fidelity_of(decoded[i], *batch[i], v);
  }
  const double lf = std::accumulate(loss.begin(), loss.end(), 0.0) / static_cast<double>(B);
  out.fidelity_loss = lf;
  out.total += w.alpha * lf;
  if (!grad) return out;

  for (std::size_t i = 0; i < B; ++i) {
    const double adv = (loss[i] - lf) / static_cast<double>(B);
    if (adv == 0.0 || decoded[i].size() < 2) continue;
    const auto logits = m.forward(batch[i]->src, shifted_in(decoded[i]), &cache);
    const std::vector<int> y = shifted_out(decoded[i]);
    // ∂(adv · mean log p(y)) / ∂logits, scaled by α.
    smoothed_ce(logits, y, 0.0, -1, &dl, -w.alpha * adv);
    m.backward(cache, dl, *grad);
  }
  return out;
}

void OptimizerConfig::validate() const {
  if (!(lr > 0)) throw std::invalid_argument("learning rate must be positive");
  if (warmup < 1) throw std::invalid_argument("warmup must be at least 1 step");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw std::invalid_argument("Adam betas must be in [0, 1)");
  if (!(eps > 0)) throw std::invalid_argument("Adam eps must be positive");
  if (!(clip_norm >= 0)) throw std::invalid_argument("clip_norm must be non-negative");
}

double OptimizerConfig::rate(long step) const {
  const double s = static_cast<double>(step + 1);
  const double w = static_cast<double>(warmup);
  return lr * std::min(s / w, std::sqrt(w / s));
}

Adam::Adam(OptimizerConfig cfg, std::size_t n) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) { cfg_.validate(); }

double Adam::step(nn::Buffer<float>& params, nn::Buffer<float>& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw std::invalid_argument("optimizer size mismatch");
  double sq = 0;
  for (float g : grad) sq += static_cast<double>(g) * g;
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) return norm;
  const double clip = cfg_.clip_norm > 0 && norm > cfg_.clip_norm ? cfg_.clip_norm / norm : 1.0;
  const double lr = cfg_.rate(t_);
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i] * clip;
    m_[i] = cfg_.beta1 * m_[i] + (1 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1 - cfg_.beta2) * g * g;
    params[i] -= static_cast<float>(lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.eps));
  }
  return norm;
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["examples"] = examples;
  j["valid"] = valid;
  j["grammar_accuracy"] = grammar_accuracy;
  j["mean_fidelity"] = mean_fidelity;
  j["mean_fidelity_valid"] = mean_fidelity_valid;
  j["perplexity"] = perplexity;
  j["L_CE"] = ce;
  j["L_F"] = fidelity_loss;
  j["L"] = total;
  return j.dump(2);
}

EvalReport evaluate(const std::vector<Example>& data, const Transformer<float>& m, const Vocabulary& v,
                    const DecodeConfig& dc, double alpha, double beta) {
  EvalReport r;
  r.examples = data.size();
  if (data.empty()) return r;
  double ce_sum = 0, fid = 0, fid_valid = 0;
  long tokens = 0;
  for (const Example& ex : data) {
    const long n = target_count(ex.tgt, v.pad());
    ce_sum += static_cast<double>(n) * smoothed_ce(m.forward(ex.src, shifted_in(ex.tgt)), shifted_out(ex.tgt), 0.0, v.pad());
    tokens += n;
    Rng rng(0);
    bool ok = false;
    const double f = fidelity_of(decode_sequence(m, ex.src, dc, v.bos(), v.eos(), &rng), ex, v, &ok);
    if (ok) {
      ++r.valid;
      fid_valid += f;
    }
    fid += f;
  }
  const double n = static_cast<double>(data.size());
  r.grammar_accuracy = static_cast<double>(r.valid) / n;
  r.mean_fidelity = fid / n;
  r.mean_fidelity_valid = r.valid ? fid_valid / static_cast<double>(r.valid) : 0.0;
  r.ce = ce_sum / static_cast<double>(tokens);
  r.perplexity = std::exp(r.ce);
  r.fidelity_loss = 1.0 - r.mean_fidelity;
  r.total = alpha * r.fidelity_loss + beta * r.ce;
  return r;
}

std::string trace_csv_header() { return "step,L,L_CE,L_F,lr,alpha,beta"; }

std::string trace_csv_row(const TraceRow& r) {
  char buf[256];
  char lf[40] = "";
  if (r.fidelity_loss) std::snprintf(lf, sizeof lf, "%.9g", *r.fidelity_loss);
  std::snprintf(buf, sizeof buf, "%ld,%.9g,%.9g,%s,%.9g,%.9g,%.9g", r.step, r.total, r.ce, lf, r.lr, r.alpha, r.beta);
  return buf;
}

void TrainConfig::validate() const {
  if (steps < 0) throw std::invalid_argument("steps must be non-negative");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (eval_every < 0) throw std::invalid_argument("eval_every must be non-negative");
}

TrainResult train(Transformer<float>& m, const std::vector<Example>& train_set,
                  const std::vector<Example>& eval_set, const Vocabulary& v, const LossConfig& lc,
                  const OptimizerConfig& oc, const TrainConfig& tc, const TrainHooks& hooks) {
  tc.validate();
  lc.validate();
  oc.validate();
  if (train_set.empty()) throw std::invalid_argument("training set is empty");
  if (m.config().vocab_size != v.size()) throw std::invalid_argument("model and vocabulary sizes differ");
  for (const Example& ex : train_set)
    if (static_cast<int>(std::max(ex.src.size(), ex.tgt.size())) > m.config().context_window)
      throw std::invalid_argument("training example exceeds the context window");

  std::vector<Example> eval_subset(
      eval_set.begin(),
      eval_set.begin() + static_cast<std::ptrdiff_t>(tc.eval_examples ? std::min(tc.eval_examples, eval_set.size())
                                                                      : eval_set.size()));
  TrainResult result;
  Adam adam(oc, m.params().size());
  nn::Buffer<float> grad(m.params().size());
  std::vector<std::size_t> order(train_set.size());
  std::size_t cursor = order.size();
  long epoch = 0;
  std::vector<const Example*> batch;
  for (long step = 0; step < tc.steps; ++step) {
    batch.clear();
    while (static_cast<int>(batch.size()) < tc.batch_size && batch.size() < train_set.size()) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), 0);
        Rng rng(splitmix64(tc.seed ^ static_cast<std::uint64_t>(epoch++)));
        shuffle(order, rng);
        cursor = 0;
      }
      batch.push_back(&train_set[order[cursor++]]);
    }
    std::fill(grad.begin(), grad.end(), 0.0f);
    const LossValue lv = composite_loss(batch, m, v, lc, step, &grad);
    if (!std::isfinite(lv.total)) throw DivergenceError(step, "loss became non-finite at step " + std::to_string(step));
    TraceRow row{step, lv.total, lv.ce, lv.fidelity_loss, oc.rate(step), lv.alpha, lv.beta};
    if (!std::isfinite(adam.step(m.params(), grad)))
      throw DivergenceError(step, "gradient became non-finite at step " + std::to_string(step));
    result.trace.push_back(row);
    if (hooks.on_step) hooks.on_step(row);
    if (tc.eval_every > 0 && (step + 1) % tc.eval_every == 0 && !eval_subset.empty()) {
      const SchedulePoint w = lc.at(step);
      result.evals.emplace_back(step + 1, evaluate(eval_subset, m, v, {}, w.alpha, w.beta));
      if (hooks.on_eval) hooks.on_eval(step + 1, result.evals.back().second);
    }
    result.steps_run = step + 1;
    if (hooks.on_checkpoint && hooks.checkpoint_every > 0 && (step + 1) % hooks.checkpoint_every == 0)
      hooks.on_checkpoint(step + 1, m);
    if (hooks.stop && !result.evals.empty() && result.evals.back().first == step + 1 &&
        hooks.stop(step + 1, result.evals.back().second))
      break;
  }
  return result;
}

}  // namespace qasmtx
