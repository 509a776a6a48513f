#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "denselm/crf.h"
#include "denselm/embedder.h"
#include "denselm/sentence.h"
#include "denselm/vocab.h"

namespace denselm {

std::vector<uint32_t> utf8_decode(const std::string& s);

// All characters seen in training plus an unknown char; case preserved.
struct CharVocab {
  std::vector<uint32_t> id_to_char;  // id 0 is the unknown char
  std::unordered_map<uint32_t, int> char_to_id;

  int size() const { return static_cast<int>(id_to_char.size()); }
  int encode(uint32_t cp) const;
  static CharVocab build(const std::vector<TaggedSentence>& train);
};

struct LabelSet {
  std::vector<std::string> names;
  std::unordered_map<std::string, int> ids;

  int size() const { return static_cast<int>(names.size()); }
  int id(const std::string& name) const;
  static LabelSet build(const std::vector<TaggedSentence>& train);
};

struct TaggerDims {
  int char_embed = 30;
  int char_hidden = 150;  // per direction
  int word_embed = 100;
  int word_hidden = 150;  // per direction
};

// Sequence labeler: context-aware char BiLSTM over the sentence's character
// stream (read at each word's trailing space), word embeddings, optional
// contextualized representations, word BiLSTM, first-order CRF.
struct TaggerModel {
  TaggerDims dims;
  CharVocab char_vocab;
  Vocab word_vocab;
  LabelSet labels;
  bool use_lm = false;

  Param char_embed;                 // |C| x char_embed
  LstmLayer char_fwd, char_bwd;     // over the char stream
  Param w_char_proj, b_char_proj;   // (2*char_hidden) -> word_embed, linear
  Param word_embed;                 // |V_task| x word_embed, fine-tuned
  LstmLayer word_fwd, word_bwd;     // over v_t
  Param w_emit;                     // (2*word_hidden) -> |Y|
  Param trans;                      // (|Y|+2) x (|Y|+2) transition biases

  TaggerModel() = default;
  TaggerModel(TaggerDims dims, CharVocab cv, Vocab wv, LabelSet ls, bool use_lm,
              Rng& rng);

  // v_t = [c*_t; r_t; w_t], or [c*_t; w_t] without contextualized features.
  int v_dim() const { return (use_lm ? 3 : 2) * dims.word_embed; }
  // embedder supplies W_cr/b_cr (tagger-side) when use_lm.
  std::vector<Param*> params(ContextEmbedder* emb);
  // Replaces word embedding rows whose token appears in the vector file
  // (one token per line, token then floats).
  void load_pretrained_words(const std::string& path);
};

struct TaggerGraphOpts {
  bool train = false;  // dropout on v_t and u_t
  double dropout = 0.5;
  Rng* dropout_rng = nullptr;
  // exactly one of these when use_lm:
  const Tensor* lm_feats = nullptr;                    // cached T x feature_dim
  const std::vector<NodeId>* lm_feat_nodes = nullptr;  // in-graph (pruning)
  ContextEmbedder* embedder = nullptr;                 // required when use_lm
};

struct TaggerGraphOut {
  std::vector<NodeId> emissions;  // 1 x |Y| per token
  NodeId trans_node;
};

TaggerGraphOut tagger_emissions(Graph& g, TaggerModel& m, const TaggedSentence& s,
                                const TaggerGraphOpts& opts);
NodeId tagger_loss(Graph& g, TaggerModel& m, const TaggedSentence& s,
                   const TaggerGraphOpts& opts);

// c*_t per word (T x word_embed), eval mode.
Tensor char_features(TaggerModel& m, const TaggedSentence& s);
// Emission matrix T x |Y| in eval mode (lm_feats required when use_lm).
Tensor tagger_emission_matrix(TaggerModel& m, const TaggedSentence& s,
                              ContextEmbedder* emb, const Tensor* lm_feats);
// Viterbi labels for one sentence.
std::vector<std::string> predict_labels(TaggerModel& m, ContextEmbedder* emb,
                                        const TaggedSentence& s,
                                        const Tensor* lm_feats = nullptr);
// Micro-F1 over a dataset; per-sentence features taken from cache when given.
F1Score evaluate_tagger(TaggerModel& m, ContextEmbedder* emb,
                        const std::vector<TaggedSentence>& data,
                        const std::vector<Tensor>* feat_cache = nullptr);

struct TaggerTrainConfig {
  int epochs = 50;
  int batch = 10;
  double momentum = 0.9;
  double eta0 = 0.015;
  double rho = 0.05;
  double dropout = 0.5;
  double clip = 5.0;
  int patience = 10;
  uint64_t seed = 42;
};

struct TaggerEpochLog {
  int epoch;
  double train_loss;
  double dev_f1;
};

struct TaggerTrainResult {
  std::vector<TaggerEpochLog> log;
  int best_epoch = -1;
  double best_dev_f1 = 0.0;
};

// SGD with momentum, eta_t = eta0 / (1 + rho * epoch), early stopping on dev
// F1. Leaves the model (and W_cr) at the best-dev weights. LM weights are
// never updated; LM features are cached up front.
TaggerTrainResult train_tagger(TaggerModel& m, ContextEmbedder* emb,
                               const std::vector<TaggedSentence>& train,
                               const std::vector<TaggedSentence>& dev,
                               const TaggerTrainConfig& cfg,
                               const std::function<void(const TaggerEpochLog&)>&
                                   on_epoch = nullptr);

inline double tagger_lr(double eta0, double rho, int epoch) {
  return eta0 / (1.0 + rho * epoch);
}

}  // namespace denselm
