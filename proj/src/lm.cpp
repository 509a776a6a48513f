#include "denselm/lm.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "denselm/optim.h"
#include "denselm/rng.h"

namespace denselm {

LmHead::LmHead(const std::string& prefix, int in_dim, int proj_dim, int vocab_size,
               Rng& rng)
    : w_proj(prefix + ".w_proj", Tensor::glorot(in_dim, proj_dim, rng)),
      b_proj(prefix + ".b_proj", Tensor(1, proj_dim)),
      w_out(prefix + ".w_out", Tensor::glorot(proj_dim, vocab_size, rng)),
      b_out(prefix + ".b_out", Tensor(1, vocab_size)),
      proj_dim(proj_dim) {}

std::vector<Param*> LmHead::params() { return {&w_proj, &b_proj, &w_out, &b_out}; }

LmModel::LmModel(LmDirection dir, Vocab v, int embed_dim, int hidden_dim,
                 int num_layers, int proj_dim, Rng& rng)
    : direction(dir),
      vocab(std::move(v)),
      embedding("embedding", Tensor::glorot(vocab.size(), embed_dim, rng)),
      stack("stack", embed_dim, hidden_dim, num_layers, rng),
      head("head", embed_dim + num_layers * hidden_dim, proj_dim, vocab.size(), rng),
      init_seed(rng.seed()) {}

std::vector<Param*> LmModel::params() {
  std::vector<Param*> ps = {&embedding};
  for (Param* p : stack.params()) ps.push_back(p);
  for (Param* p : head.params()) ps.push_back(p);
  return ps;
}

NodeId lm_window_loss(Graph& g, LmModel& model, const std::vector<int>& inputs,
                      const std::vector<int>& targets, int batch, StackState& state,
                      const StackRun::Options& opts) {
  if (inputs.empty() || inputs.size() != targets.size() ||
      inputs.size() % static_cast<size_t>(batch) != 0) {
    throw std::invalid_argument("lm_window_loss: bad window sizes");
  }
  const int steps = static_cast<int>(inputs.size()) / batch;

  StackRun run(g, model.stack, opts);
  run.reset(state);
  NodeId w_proj = opts.trainable ? g.param(model.head.w_proj) : g.constant(model.head.w_proj.value);
  NodeId b_proj = opts.trainable ? g.param(model.head.b_proj) : g.constant(model.head.b_proj.value);
  NodeId w_out = opts.trainable ? g.param(model.head.w_out) : g.constant(model.head.w_out.value);
  NodeId b_out = opts.trainable ? g.param(model.head.b_out) : g.constant(model.head.b_out.value);

  NodeId total = -1;
  for (int t = 0; t < steps; ++t) {
    std::vector<int> in_ids(inputs.begin() + static_cast<long>(t) * batch,
                            inputs.begin() + static_cast<long>(t + 1) * batch);
    std::vector<int> out_ids(targets.begin() + static_cast<long>(t) * batch,
                             targets.begin() + static_cast<long>(t + 1) * batch);
    for (int id : in_ids) {
      if (id < 0 || id >= model.vocab.size()) {
        throw std::invalid_argument("lm_window_loss: token id " + std::to_string(id) +
                                    " outside vocab");
      }
    }
    NodeId x = g.embed_rows(model.embedding, in_ids);
    if (!opts.trainable) {
      // frozen model: detach the lookup so the table never accumulates
      x = g.constant(g.value(x));
    }
    auto st = run.step(x);
    NodeId hstar = g.relu(g.add_rowvec(g.matmul(st.h_concat, w_proj), b_proj));
    NodeId logits = g.add_rowvec(g.matmul(hstar, w_out), b_out);
    NodeId ce = g.softmax_xent_sum(logits, out_ids);
    total = (total < 0) ? ce : g.add(total, ce);
  }
  state = run.detach_state();
  return g.scale(total, 1.0 / static_cast<double>(steps * batch));
}

namespace {

// Splits a stream into `batch` equal segments; segment b supplies
// inputs [BOS, s_0, .., s_{n-2}] and targets [s_0, .., s_{n-1}].
struct BatchedStream {
  std::vector<std::vector<int>> seg_inputs, seg_targets;
  int steps_total = 0;

  BatchedStream(const std::vector<int>& stream, int batch, int bos) {
    const long seg_len = static_cast<long>(stream.size()) / batch;
    if (seg_len < 1) throw std::invalid_argument("stream shorter than batch count");
    for (int b = 0; b < batch; ++b) {
      std::vector<int> in, out;
      in.push_back(bos);
      for (long i = 0; i < seg_len; ++i) {
        int tok = stream[static_cast<size_t>(b * seg_len + i)];
        out.push_back(tok);
        if (i + 1 < seg_len) in.push_back(tok);
      }
      seg_inputs.push_back(std::move(in));
      seg_targets.push_back(std::move(out));
    }
    steps_total = static_cast<int>(seg_len);
  }

  // Step-major window [begin, end) across all segments.
  void window(int begin, int end, std::vector<int>* inputs, std::vector<int>* targets) const {
    inputs->clear();
    targets->clear();
    for (int t = begin; t < end; ++t) {
      for (const auto& seg : seg_inputs) inputs->push_back(seg[static_cast<size_t>(t)]);
    }
    for (int t = begin; t < end; ++t) {
      for (const auto& seg : seg_targets) targets->push_back(seg[static_cast<size_t>(t)]);
    }
  }
};

double eval_mean_nll(LmModel& model, const std::vector<int>& stream, int unroll) {
  if (stream.empty()) throw std::invalid_argument("perplexity: empty stream");
  BatchedStream bs(stream, 1, model.vocab.bos);
  StackState state = StackState::zeros(model.stack, 1);
  StackRun::Options opts;
  opts.trainable = false;
  double total = 0.0;
  long count = 0;
  std::vector<int> in, out;
  for (int t = 0; t < bs.steps_total; t += unroll) {
    int end = std::min(bs.steps_total, t + unroll);
    bs.window(t, end, &in, &out);
    Graph g;
    NodeId loss = lm_window_loss(g, model, in, out, 1, state, opts);
    total += g.value(loss).data[0] * static_cast<double>(end - t);
    count += end - t;
  }
  return total / static_cast<double>(count);
}

}  // namespace

LmTrainResult train_lm(LmModel& model, const std::vector<int>& train_stream,
                       const std::vector<int>& dev_stream, const LmConfig& cfg,
                       const std::function<void(const LmModel&, const LmEpochLog&)>& on_epoch) {
  BatchedStream bs(train_stream, cfg.batch, model.vocab.bos);
  auto params = model.params();
  Adam opt(params, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  Rng drop_rng = Rng(cfg.seed).split("lm.layer_dropout");

  LmTrainResult result;
  std::vector<Tensor> best;
  std::vector<int> in, out;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    StackState state = StackState::zeros(model.stack, cfg.batch);
    double epoch_nll = 0.0;
    long epoch_tokens = 0;
    for (int t = 0; t < bs.steps_total; t += cfg.unroll) {
      int end = std::min(bs.steps_total, t + cfg.unroll);
      bs.window(t, end, &in, &out);
      auto dropped = layerwise_dropout_mask(model.stack.num_layers(), cfg.layer_dropout,
                                            drop_rng);
      StackRun::Options opts;
      opts.trainable = true;
      opts.dropped = &dropped;
      Graph g;
      NodeId loss = lm_window_loss(g, model, in, out, cfg.batch, state, opts);
      double loss_v = g.value(loss).data[0];
      if (!std::isfinite(loss_v)) {
        throw std::runtime_error("train_lm diverged: non-finite loss at epoch " +
                                 std::to_string(epoch) + " step " + std::to_string(t));
      }
      epoch_nll += loss_v * static_cast<double>((end - t) * cfg.batch);
      epoch_tokens += static_cast<long>(end - t) * cfg.batch;
      for (Param* p : params) p->zero_grad();
      g.backward(loss);
      clip_global_norm(params, cfg.clip);
      opt.step();
    }
    LmEpochLog log{epoch, epoch_nll / static_cast<double>(epoch_tokens),
                   std::exp(eval_mean_nll(model, dev_stream, cfg.unroll))};
    result.log.push_back(log);
    if (result.best_epoch < 0 || log.dev_ppl < result.best_dev_ppl) {
      result.best_epoch = epoch;
      result.best_dev_ppl = log.dev_ppl;
      best.clear();
      for (Param* p : params) best.push_back(p->value);
    }
    if (on_epoch) on_epoch(model, log);
  }
  // leave the model at its best-dev weights
  for (size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
  return result;
}

double perplexity(LmModel& model, const std::vector<int>& stream) {
  return std::exp(eval_mean_nll(model, stream, 20));
}

std::vector<int> lm_stream(const Vocab& vocab,
                           const std::vector<std::vector<std::string>>& sentences,
                           LmDirection direction) {
  std::vector<int> stream;
  for (const auto& s : sentences) {
    for (const auto& t : s) stream.push_back(vocab.encode(t));
    stream.push_back(vocab.eos);
  }
  if (direction == LmDirection::kBackward) {
    std::reverse(stream.begin(), stream.end());
  }
  return stream;
}

}  // namespace denselm
