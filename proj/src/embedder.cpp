#include "denselm/embedder.h"

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include "denselm/rng.h"

namespace denselm {

namespace {

// h_concat nodes for each word, direction handled by stream order.
std::vector<NodeId> stack_outputs(Graph& g, const LmModel& m, const std::vector<int>& ids,
                                  const std::vector<NodeId>* z_nodes) {
  StackRun::Options opts;
  opts.trainable = false;
  opts.z_nodes = z_nodes;
  StackRun run(g, m.stack, opts);
  run.reset(StackState::zeros(m.stack, 1));
  // consume BOS first; outputs are kept after each real token
  std::vector<NodeId> outs;
  std::vector<int> stream;
  stream.push_back(m.vocab.bos);
  for (int id : ids) stream.push_back(id);
  for (size_t i = 0; i < stream.size(); ++i) {
    Tensor xrow(1, m.embed_dim());
    for (int c = 0; c < m.embed_dim(); ++c) {
      xrow.at(0, c) = m.embedding.value.at(stream[i], c);
    }
    auto st = run.step(g.constant(std::move(xrow)));
    if (i > 0) outs.push_back(st.h_concat);
  }
  return outs;
}

}  // namespace

ContextEmbedder::ContextEmbedder(LmModel fwd_model, LmModel bwd_model, int r_dim_in,
                                 Rng& rng)
    : fwd(std::move(fwd_model)), bwd(std::move(bwd_model)), r_dim(r_dim_in) {
  if (fwd.vocab.hash() != bwd.vocab.hash()) {
    throw std::invalid_argument("embedder: forward/backward LM vocab mismatch");
  }
  w_cr = Param("w_cr", Tensor::glorot(feature_dim(), r_dim, rng));
  b_cr = Param("b_cr", Tensor(1, r_dim));
}

std::vector<NodeId> lm_feature_nodes(Graph& g, const LmModel& fwd, const LmModel& bwd,
                                     const std::vector<std::string>& words,
                                     const std::vector<NodeId>* z_fwd,
                                     const std::vector<NodeId>* z_bwd) {
  if (words.empty()) throw std::invalid_argument("lm features: empty sentence");
  const int T = static_cast<int>(words.size());
  std::vector<int> ids_f, ids_b;
  for (const auto& w : words) ids_f.push_back(fwd.vocab.encode(w));
  for (int t = T - 1; t >= 0; --t) ids_b.push_back(bwd.vocab.encode(words[static_cast<size_t>(t)]));

  auto outs_f = stack_outputs(g, fwd, ids_f, z_fwd);
  auto outs_b = stack_outputs(g, bwd, ids_b, z_bwd);
  std::vector<NodeId> rows;
  for (int t = 0; t < T; ++t) {
    // backward output for token t sits at reversed position T-1-t
    rows.push_back(g.concat_cols(
        {outs_f[static_cast<size_t>(t)], outs_b[static_cast<size_t>(T - 1 - t)]}));
  }
  return rows;
}

Tensor ContextEmbedder::lm_feature_rows(const std::vector<std::string>& words) const {
  Graph g;
  auto rows = lm_feature_nodes(g, fwd, bwd, words);
  Tensor out(static_cast<int>(words.size()), feature_dim());
  for (size_t t = 0; t < rows.size(); ++t) {
    const Tensor& r = g.value(rows[t]);
    for (int c = 0; c < feature_dim(); ++c) out.at(static_cast<int>(t), c) = r.at(0, c);
  }
  return out;
}

Tensor ContextEmbedder::embed_sequence(const std::vector<std::string>& words) const {
  Tensor feats = lm_feature_rows(words);
  Graph g;
  NodeId r = g.relu(g.add_rowvec(g.matmul(g.constant(std::move(feats)),
                                          g.constant(w_cr.value)),
                                 g.constant(b_cr.value)));
  return g.value(r);
}

LmModel delete_pruned_layers(const LmModel& m, const LayerMask& z, DeletionPlan* plan) {
  const int L = m.stack.num_layers();
  if (static_cast<int>(z.z.size()) != L) {
    throw std::invalid_argument("delete_pruned_layers: mask length != layer count");
  }
  if (!z.is_binary()) {
    throw std::invalid_argument("delete_pruned_layers: mask not binary; round first");
  }
  const int E = m.stack.embed_dim;
  const int H = m.stack.hidden_dim;

  DeletionPlan local;
  for (int c = 0; c < E; ++c) local.kept_concat_cols.push_back(c);
  for (int l = 0; l < L; ++l) {
    if (z.z[static_cast<size_t>(l)] == 1.0) {
      local.surviving.push_back(l);
      for (int k = 0; k < H; ++k) local.kept_concat_cols.push_back(E + l * H + k);
    }
  }

  LmModel out;
  out.direction = m.direction;
  out.vocab = m.vocab;
  out.embedding = m.embedding;
  out.init_seed = m.init_seed;
  out.stack.embed_dim = E;
  out.stack.hidden_dim = H;
  out.stack.layer_dropout_p = m.stack.layer_dropout_p;

  for (size_t k = 0; k < local.surviving.size(); ++k) {
    int l = local.surviving[k];
    const LstmLayer& old = m.stack.layers[static_cast<size_t>(l)];
    int new_in = E + static_cast<int>(k) * H;
    LstmLayer nl = LstmLayer::zeros(old.w.name.substr(0, old.w.name.size() - 2), new_in, H);
    nl.b.value = old.b.value;
    // rows kept from the old weight matrix: embedding slice, surviving
    // predecessors' output slices, then the recurrent hidden rows.
    std::vector<int> kept_rows;
    for (int c = 0; c < E; ++c) kept_rows.push_back(c);
    for (size_t j = 0; j < k; ++j) {
      int pj = local.surviving[j];
      for (int kk = 0; kk < H; ++kk) kept_rows.push_back(E + pj * H + kk);
    }
    for (int kk = 0; kk < H; ++kk) kept_rows.push_back(old.input_dim + kk);
    for (size_t r = 0; r < kept_rows.size(); ++r) {
      for (int c = 0; c < 4 * H; ++c) {
        nl.w.value.at(static_cast<int>(r), c) = old.w.value.at(kept_rows[r], c);
      }
    }
    out.stack.layers.push_back(std::move(nl));
    out.stack.layer_manifest.push_back(m.stack.layer_manifest[static_cast<size_t>(l)]);
  }
  out.stack.mask = LayerMask::ones(static_cast<int>(local.surviving.size()));

  // projection head drops the same h_concat columns
  out.head.proj_dim = m.head.proj_dim;
  out.head.w_proj = Param(m.head.w_proj.name,
                          Tensor(static_cast<int>(local.kept_concat_cols.size()),
                                 m.head.w_proj.value.cols));
  for (size_t r = 0; r < local.kept_concat_cols.size(); ++r) {
    for (int c = 0; c < m.head.w_proj.value.cols; ++c) {
      out.head.w_proj.value.at(static_cast<int>(r), c) =
          m.head.w_proj.value.at(local.kept_concat_cols[r], c);
    }
  }
  out.head.b_proj = m.head.b_proj;
  out.head.w_out = m.head.w_out;
  out.head.b_out = m.head.b_out;

  if (plan) *plan = local;
  return out;
}

ContextEmbedder compress_embedder(const ContextEmbedder& e, const LayerMask& z_fwd,
                                  const LayerMask& z_bwd) {
  DeletionPlan pf, pb;
  ContextEmbedder out;
  out.fwd = delete_pruned_layers(e.fwd, z_fwd, &pf);
  out.bwd = delete_pruned_layers(e.bwd, z_bwd, &pb);
  out.r_dim = e.r_dim;
  out.b_cr = e.b_cr;

  std::vector<int> kept_rows = pf.kept_concat_cols;
  int offset = e.fwd.stack.output_dim();
  for (int c : pb.kept_concat_cols) kept_rows.push_back(offset + c);
  out.w_cr = Param(e.w_cr.name, Tensor(static_cast<int>(kept_rows.size()), e.r_dim));
  for (size_t r = 0; r < kept_rows.size(); ++r) {
    for (int c = 0; c < e.r_dim; ++c) {
      out.w_cr.value.at(static_cast<int>(r), c) = e.w_cr.value.at(kept_rows[r], c);
    }
  }
  return out;
}

uint64_t lm_weight_checksum(const LmModel& m) {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const Tensor& t) {
    for (double v : t.data) {
      uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      for (int k = 0; k < 8; ++k) {
        h ^= (bits >> (8 * k)) & 0xffU;
        h *= 0x100000001b3ULL;
      }
    }
  };
  mix(m.embedding.value);
  for (const auto& l : m.stack.layers) {
    mix(l.w.value);
    mix(l.b.value);
  }
  mix(m.head.w_proj.value);
  mix(m.head.b_proj.value);
  mix(m.head.w_out.value);
  mix(m.head.b_out.value);
  return h;
}

}  // namespace denselm
