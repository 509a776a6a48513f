#include "denselm/tagger.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "denselm/optim.h"
#include "denselm/rng.h"

namespace denselm {

std::vector<uint32_t> utf8_decode(const std::string& s) {
  std::vector<uint32_t> cps;
  size_t i = 0;
  while (i < s.size()) {
    uint8_t b = static_cast<uint8_t>(s[i]);
    uint32_t cp = 0;
    int extra = 0;
    if (b < 0x80) {
      cp = b;
    } else if ((b >> 5) == 0x6) {
      cp = b & 0x1f;
      extra = 1;
    } else if ((b >> 4) == 0xe) {
      cp = b & 0x0f;
      extra = 2;
    } else if ((b >> 3) == 0x1e) {
      cp = b & 0x07;
      extra = 3;
    } else {
      cp = 0xfffd;  // invalid byte
    }
    ++i;
    for (int k = 0; k < extra && i < s.size(); ++k, ++i) {
      cp = (cp << 6) | (static_cast<uint8_t>(s[i]) & 0x3f);
    }
    cps.push_back(cp);
  }
  return cps;
}

int CharVocab::encode(uint32_t cp) const {
  auto it = char_to_id.find(cp);
  return it == char_to_id.end() ? 0 : it->second;
}

CharVocab CharVocab::build(const std::vector<TaggedSentence>& train) {
  CharVocab v;
  v.id_to_char.push_back(0xfffd);  // unknown char
  v.char_to_id[0xfffd] = 0;
  std::vector<uint32_t> seen;
  for (const auto& s : train) {
    for (const auto& w : s.words) {
      for (uint32_t cp : utf8_decode(w)) seen.push_back(cp);
    }
  }
  seen.push_back(' ');
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  for (uint32_t cp : seen) {
    if (v.char_to_id.count(cp)) continue;
    v.char_to_id[cp] = v.size();
    v.id_to_char.push_back(cp);
  }
  return v;
}

int LabelSet::id(const std::string& name) const {
  auto it = ids.find(name);
  if (it == ids.end()) throw std::invalid_argument("unknown label: " + name);
  return it->second;
}

LabelSet LabelSet::build(const std::vector<TaggedSentence>& train) {
  LabelSet ls;
  std::vector<std::string> names;
  for (const auto& s : train) {
    for (const auto& l : s.labels) names.push_back(l);
  }
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  ls.names = std::move(names);
  for (int i = 0; i < ls.size(); ++i) ls.ids[ls.names[static_cast<size_t>(i)]] = i;
  return ls;
}

TaggerModel::TaggerModel(TaggerDims d, CharVocab cv, Vocab wv, LabelSet ls,
                         bool with_lm, Rng& rng)
    : dims(d),
      char_vocab(std::move(cv)),
      word_vocab(std::move(wv)),
      labels(std::move(ls)),
      use_lm(with_lm),
      char_embed("char_embed", Tensor::glorot(char_vocab.size(), d.char_embed, rng)),
      char_fwd("char_fwd", d.char_embed, d.char_hidden, rng),
      char_bwd("char_bwd", d.char_embed, d.char_hidden, rng),
      w_char_proj("w_char_proj", Tensor::glorot(2 * d.char_hidden, d.word_embed, rng)),
      b_char_proj("b_char_proj", Tensor(1, d.word_embed)),
      word_embed("word_embed", Tensor::glorot(word_vocab.size(), d.word_embed, rng)),
      word_fwd("word_fwd", v_dim(), d.word_hidden, rng),
      word_bwd("word_bwd", v_dim(), d.word_hidden, rng),
      w_emit("w_emit", Tensor::glorot(2 * d.word_hidden, labels.size(), rng)),
      trans("trans", Tensor(labels.size() + 2, labels.size() + 2)) {}

std::vector<Param*> TaggerModel::params(ContextEmbedder* emb) {
  std::vector<Param*> ps = {&char_embed, &char_fwd.w, &char_fwd.b,
                            &char_bwd.w, &char_bwd.b, &w_char_proj, &b_char_proj,
                            &word_embed, &word_fwd.w, &word_fwd.b,
                            &word_bwd.w, &word_bwd.b, &w_emit, &trans};
  if (use_lm) {
    if (!emb) throw std::invalid_argument("tagger params: embedder required in LM mode");
    ps.push_back(&emb->w_cr);
    ps.push_back(&emb->b_cr);
  }
  return ps;
}

void TaggerModel::load_pretrained_words(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vector file: " + path);
  std::string line;
  long loaded = 0;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tok;
    if (!(ss >> tok)) continue;
    auto it = word_vocab.token_to_id.find(tok);
    if (it == word_vocab.token_to_id.end()) continue;
    for (int c = 0; c < dims.word_embed; ++c) {
      double v;
      if (!(ss >> v)) {
        throw std::runtime_error("vector file row for '" + tok + "' shorter than " +
                                 std::to_string(dims.word_embed));
      }
      word_embed.value.at(it->second, c) = v;
    }
    ++loaded;
  }
  if (loaded == 0) throw std::runtime_error("no vocabulary tokens found in " + path);
}

namespace {

struct BiLstmBind {
  NodeId fw, fb, bw, bb;
};

BiLstmBind bind_bilstm(Graph& g, LstmLayer& fwd, LstmLayer& bwd) {
  return {g.param(fwd.w), g.param(fwd.b), g.param(bwd.w), g.param(bwd.b)};
}

// Runs a BiLSTM over per-step input nodes; returns per-step [fwd_h; bwd_h].
std::vector<NodeId> bilstm_nodes(Graph& g, const BiLstmBind& bind, int hidden,
                                 const std::vector<NodeId>& xs) {
  const int n = static_cast<int>(xs.size());
  std::vector<NodeId> fw(static_cast<size_t>(n)), bw(static_cast<size_t>(n));
  NodeId h = g.constant(Tensor(1, hidden));
  NodeId c = g.constant(Tensor(1, hidden));
  for (int t = 0; t < n; ++t) {
    auto out = lstm_step(g, hidden, bind.fw, bind.fb, xs[static_cast<size_t>(t)], h, c);
    h = out.h;
    c = out.c;
    fw[static_cast<size_t>(t)] = out.h;
  }
  h = g.constant(Tensor(1, hidden));
  c = g.constant(Tensor(1, hidden));
  for (int t = n - 1; t >= 0; --t) {
    auto out = lstm_step(g, hidden, bind.bw, bind.bb, xs[static_cast<size_t>(t)], h, c);
    h = out.h;
    c = out.c;
    bw[static_cast<size_t>(t)] = out.h;
  }
  std::vector<NodeId> joined(static_cast<size_t>(n));
  for (int t = 0; t < n; ++t) {
    joined[static_cast<size_t>(t)] =
        g.concat_cols({fw[static_cast<size_t>(t)], bw[static_cast<size_t>(t)]});
  }
  return joined;
}

// Inverted dropout mask as a constant node.
NodeId dropout_node(Graph& g, NodeId x, double p, Rng& rng) {
  const Tensor& xv = g.value(x);
  Tensor mask(xv.rows, xv.cols);
  double keep = 1.0 - p;
  for (auto& v : mask.data) v = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
  return g.mul(x, g.constant(std::move(mask)));
}

// c*_t nodes: char BiLSTM over the sentence's char stream, read at each
// word's trailing space, then a linear projection to word_embed dims.
std::vector<NodeId> char_star_nodes(Graph& g, TaggerModel& m, const TaggedSentence& s) {
  std::vector<int> stream;
  std::vector<int> space_pos;
  for (const auto& w : s.words) {
    for (uint32_t cp : utf8_decode(w)) stream.push_back(m.char_vocab.encode(cp));
    space_pos.push_back(static_cast<int>(stream.size()));
    stream.push_back(m.char_vocab.encode(' '));
  }
  auto bind = bind_bilstm(g, m.char_fwd, m.char_bwd);
  std::vector<NodeId> xs;
  for (size_t i = 0; i < stream.size(); ++i) {
    xs.push_back(g.embed_rows(m.char_embed, {stream[i]}));
  }
  auto ch = bilstm_nodes(g, bind, m.dims.char_hidden, xs);
  NodeId wp = g.param(m.w_char_proj);
  NodeId bp = g.param(m.b_char_proj);
  std::vector<NodeId> out;
  for (int t = 0; t < static_cast<int>(s.words.size()); ++t) {
    NodeId c_t = ch[static_cast<size_t>(space_pos[static_cast<size_t>(t)])];
    out.push_back(g.add_rowvec(g.matmul(c_t, wp), bp));
  }
  return out;
}

}  // namespace

TaggerGraphOut tagger_emissions(Graph& g, TaggerModel& m, const TaggedSentence& s,
                                const TaggerGraphOpts& opts) {
  if (s.words.empty()) throw std::invalid_argument("tagger: empty sentence");
  if (opts.train && !opts.dropout_rng) {
    throw std::invalid_argument("tagger: dropout rng required in train mode");
  }
  const int T = static_cast<int>(s.words.size());

  auto cstar = char_star_nodes(g, m, s);

  std::vector<NodeId> r_nodes;
  if (m.use_lm) {
    if (!opts.embedder) throw std::invalid_argument("tagger: embedder required");
    NodeId w_cr = g.param(opts.embedder->w_cr);
    NodeId b_cr = g.param(opts.embedder->b_cr);
    for (int t = 0; t < T; ++t) {
      NodeId feat;
      if (opts.lm_feat_nodes) {
        feat = (*opts.lm_feat_nodes)[static_cast<size_t>(t)];
      } else if (opts.lm_feats) {
        Tensor row(1, opts.lm_feats->cols);
        for (int c = 0; c < opts.lm_feats->cols; ++c) row.at(0, c) = opts.lm_feats->at(t, c);
        feat = g.constant(std::move(row));
      } else {
        throw std::invalid_argument("tagger: LM features missing");
      }
      r_nodes.push_back(g.relu(g.add_rowvec(g.matmul(feat, w_cr), b_cr)));
    }
  }

  std::vector<NodeId> vs;
  for (int t = 0; t < T; ++t) {
    int wid = m.word_vocab.encode(s.words[static_cast<size_t>(t)]);
    NodeId w_t = g.embed_rows(m.word_embed, {wid});
    NodeId v = m.use_lm
                   ? g.concat_cols({cstar[static_cast<size_t>(t)],
                                    r_nodes[static_cast<size_t>(t)], w_t})
                   : g.concat_cols({cstar[static_cast<size_t>(t)], w_t});
    if (opts.train && opts.dropout > 0.0) v = dropout_node(g, v, opts.dropout, *opts.dropout_rng);
    vs.push_back(v);
  }

  auto bind = bind_bilstm(g, m.word_fwd, m.word_bwd);
  auto us = bilstm_nodes(g, bind, m.dims.word_hidden, vs);

  NodeId w_emit = g.param(m.w_emit);
  TaggerGraphOut out;
  for (int t = 0; t < T; ++t) {
    NodeId u = us[static_cast<size_t>(t)];
    if (opts.train && opts.dropout > 0.0) u = dropout_node(g, u, opts.dropout, *opts.dropout_rng);
    out.emissions.push_back(g.matmul(u, w_emit));
  }
  out.trans_node = g.param(m.trans);
  return out;
}

NodeId tagger_loss(Graph& g, TaggerModel& m, const TaggedSentence& s,
                   const TaggerGraphOpts& opts) {
  auto out = tagger_emissions(g, m, s, opts);
  std::vector<int> gold;
  for (const auto& l : s.labels) gold.push_back(m.labels.id(l));
  return g.crf_nll(out.emissions, out.trans_node, gold);
}

Tensor char_features(TaggerModel& m, const TaggedSentence& s) {
  if (s.words.empty()) throw std::invalid_argument("char_features: empty sentence");
  Graph g;
  auto nodes = char_star_nodes(g, m, s);
  Tensor out(static_cast<int>(nodes.size()), m.dims.word_embed);
  for (size_t t = 0; t < nodes.size(); ++t) {
    for (int c = 0; c < m.dims.word_embed; ++c) {
      out.at(static_cast<int>(t), c) = g.value(nodes[t]).at(0, c);
    }
  }
  return out;
}

Tensor tagger_emission_matrix(TaggerModel& m, const TaggedSentence& s,
                              ContextEmbedder* emb, const Tensor* lm_feats) {
  Graph g;
  TaggerGraphOpts opts;
  opts.embedder = emb;
  opts.lm_feats = lm_feats;
  Tensor feats;
  if (m.use_lm && !lm_feats) {
    feats = emb->lm_feature_rows(s.words);
    opts.lm_feats = &feats;
  }
  auto out = tagger_emissions(g, m, s, opts);
  Tensor e(static_cast<int>(out.emissions.size()), m.labels.size());
  for (size_t t = 0; t < out.emissions.size(); ++t) {
    for (int y = 0; y < m.labels.size(); ++y) {
      e.at(static_cast<int>(t), y) = g.value(out.emissions[t]).at(0, y);
    }
  }
  return e;
}

std::vector<std::string> predict_labels(TaggerModel& m, ContextEmbedder* emb,
                                        const TaggedSentence& s, const Tensor* lm_feats) {
  Tensor e = tagger_emission_matrix(m, s, emb, lm_feats);
  auto path = viterbi_decode(e, m.trans.value);
  std::vector<std::string> out;
  for (int y : path) out.push_back(m.labels.names[static_cast<size_t>(y)]);
  return out;
}

F1Score evaluate_tagger(TaggerModel& m, ContextEmbedder* emb,
                        const std::vector<TaggedSentence>& data,
                        const std::vector<Tensor>* feat_cache) {
  std::vector<std::vector<std::string>> preds;
  for (size_t i = 0; i < data.size(); ++i) {
    const Tensor* feats = feat_cache ? &(*feat_cache)[i] : nullptr;
    preds.push_back(predict_labels(m, emb, data[i], feats));
  }
  return micro_f1(data, preds);
}

TaggerTrainResult train_tagger(TaggerModel& m, ContextEmbedder* emb,
                               const std::vector<TaggedSentence>& train,
                               const std::vector<TaggedSentence>& dev,
                               const TaggerTrainConfig& cfg,
                               const std::function<void(const TaggerEpochLog&)>& on_epoch) {
  if (train.empty()) throw std::invalid_argument("train_tagger: empty training set");
  auto params = m.params(emb);
  SgdMomentum opt(params, cfg.momentum);
  Rng rng(cfg.seed);
  Rng order_rng = rng.split("tagger.order");
  Rng drop_rng = rng.split("tagger.dropout");

  // LM weights are frozen, so features are a pure function of the inputs.
  std::vector<Tensor> train_feats, dev_feats;
  if (m.use_lm) {
    for (const auto& s : train) train_feats.push_back(emb->lm_feature_rows(s.words));
    for (const auto& s : dev) dev_feats.push_back(emb->lm_feature_rows(s.words));
  }

  TaggerTrainResult result;
  std::vector<Tensor> best;
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double lr = tagger_lr(cfg.eta0, cfg.rho, epoch);
    double epoch_loss = 0.0;
    for (size_t b = 0; b < order.size(); b += static_cast<size_t>(cfg.batch)) {
      size_t end = std::min(order.size(), b + static_cast<size_t>(cfg.batch));
      for (Param* p : params) p->zero_grad();
      for (size_t k = b; k < end; ++k) {
        const TaggedSentence& s = train[order[k]];
        TaggerGraphOpts opts;
        opts.train = true;
        opts.dropout = cfg.dropout;
        opts.dropout_rng = &drop_rng;
        opts.embedder = emb;
        if (m.use_lm) opts.lm_feats = &train_feats[order[k]];
        Graph g;
        NodeId loss = g.scale(tagger_loss(g, m, s, opts),
                              1.0 / static_cast<double>(end - b));
        double v = g.value(loss).data[0];
        if (!std::isfinite(v)) {
          throw std::runtime_error("train_tagger diverged at epoch " +
                                   std::to_string(epoch));
        }
        epoch_loss += v * static_cast<double>(end - b);
        g.backward(loss);
      }
      clip_global_norm(params, cfg.clip);
      opt.step(lr);
    }

    F1Score f1 = evaluate_tagger(m, emb, dev, m.use_lm ? &dev_feats : nullptr);
    TaggerEpochLog log{epoch, epoch_loss / static_cast<double>(train.size()), f1.f1};
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
    if (result.best_epoch < 0 || f1.f1 > result.best_dev_f1) {
      result.best_epoch = epoch;
      result.best_dev_f1 = f1.f1;
      best.clear();
      for (Param* p : params) best.push_back(p->value);
    }
    if (epoch - result.best_epoch >= cfg.patience) break;
  }
  for (size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
  return result;
}

}  // namespace denselm
