#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "denselm/lstm.h"
#include "denselm/vocab.h"

namespace denselm {

enum class LmDirection { kForward, kBackward };

// Projection + softmax head over the dense concat h_t:
// h*_t = ReLU(W_proj h_t + b_proj), logits = W_out h*_t + b_out.
struct LmHead {
  Param w_proj, b_proj, w_out, b_out;
  int proj_dim = 0;

  LmHead() = default;
  LmHead(const std::string& prefix, int in_dim, int proj_dim, int vocab_size, Rng& rng);
  std::vector<Param*> params();
};

struct LmModel {
  LmDirection direction = LmDirection::kForward;
  Vocab vocab;
  Param embedding;  // |V| x embed_dim
  DenseStack stack;
  LmHead head;
  uint64_t init_seed = 0;

  LmModel() = default;
  LmModel(LmDirection dir, Vocab vocab, int embed_dim, int hidden_dim, int num_layers,
          int proj_dim, Rng& rng);

  std::vector<Param*> params();
  int embed_dim() const { return embedding.value.cols; }
};

// Mean negative log-likelihood per token over one unroll window.
// inputs/targets are step-major: step t's batch ids at [t*batch, (t+1)*batch).
// The recurrent state advances in place (detached across windows).
NodeId lm_window_loss(Graph& g, LmModel& model, const std::vector<int>& inputs,
                      const std::vector<int>& targets, int batch, StackState& state,
                      const StackRun::Options& opts);

struct LmConfig {
  int unroll = 20;
  int batch = 128;
  double lr = 0.001;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip = 5.0;
  double layer_dropout = 0.5;
  int epochs = 10;
  uint64_t seed = 42;
};

struct LmEpochLog {
  int epoch;
  double train_nll;
  double dev_ppl;
};

struct LmTrainResult {
  std::vector<LmEpochLog> log;
  int best_epoch = -1;
  double best_dev_ppl = 0.0;
};

// Token id streams; the model's direction decides nothing here — callers
// reverse the stream for backward models (see lm_stream).
// on_epoch, when set, runs after each epoch (checkpoint series hook).
LmTrainResult train_lm(LmModel& model, const std::vector<int>& train_stream,
                       const std::vector<int>& dev_stream, const LmConfig& cfg,
                       const std::function<void(const LmModel&, const LmEpochLog&)>&
                           on_epoch = nullptr);

// exp(mean token NLL) with layer-wise dropout disabled and the model's
// current mask applied. Throws on an empty stream.
double perplexity(LmModel& model, const std::vector<int>& stream);

// Token id stream for LM training/eval: each sentence's ids followed by EOS;
// reversed for backward models.
std::vector<int> lm_stream(const Vocab& vocab,
                           const std::vector<std::vector<std::string>>& sentences,
                           LmDirection direction);

// Single reported number for a coupled pair of LMs.
inline double averaged_perplexity(double fwd_ppl, double bwd_ppl) {
  return 0.5 * (fwd_ppl + bwd_ppl);
}

}  // namespace denselm
