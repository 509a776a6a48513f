#pragma once

#include <string>
#include <vector>

#include "denselm/lm.h"

namespace denselm {

// Frozen coupled LMs producing contextualized token features. The LM weights
// never bind as trainable graph params; W_cr/b_cr are tagger-side and do.
struct ContextEmbedder {
  LmModel fwd;
  LmModel bwd;
  Param w_cr;  // (dim(h_t) + dim(h^r_t)) x r_dim
  Param b_cr;  // 1 x r_dim
  int r_dim = 0;

  ContextEmbedder() = default;
  ContextEmbedder(LmModel fwd_model, LmModel bwd_model, int r_dim, Rng& rng);

  int feature_dim() const { return fwd.stack.output_dim() + bwd.stack.output_dim(); }
  // [h_t, h^r_t] per token (T x feature_dim), computed with each stack's
  // current mask and no dropout. Position t sees forward context x_1..x_t
  // and backward context x_t..x_T.
  Tensor lm_feature_rows(const std::vector<std::string>& words) const;
  // r_t = ReLU(W_cr [h_t, h^r_t] + b_cr) per token (T x r_dim).
  Tensor embed_sequence(const std::vector<std::string>& words) const;
};

// In-graph LM features, one 1 x feature_dim node per token. Weights enter as
// constants; per-layer z nodes (when given) override the stacks' masks so
// pruning can differentiate with respect to z.
std::vector<NodeId> lm_feature_nodes(Graph& g, const LmModel& fwd, const LmModel& bwd,
                                     const std::vector<std::string>& words,
                                     const std::vector<NodeId>* z_fwd = nullptr,
                                     const std::vector<NodeId>* z_bwd = nullptr);

struct DeletionPlan {
  std::vector<int> surviving;         // positions of kept layers in the old stack
  std::vector<int> kept_concat_cols;  // surviving columns of the old h_concat
};

// Removes layers with z == 0 and drops the matching input columns from every
// surviving layer and the projection head. Forward outputs match the masked
// model exactly. z must be exactly binary; round first.
LmModel delete_pruned_layers(const LmModel& m, const LayerMask& z,
                             DeletionPlan* plan = nullptr);

// Deletes in both directions and column-compresses W_cr.
ContextEmbedder compress_embedder(const ContextEmbedder& e, const LayerMask& z_fwd,
                                  const LayerMask& z_bwd);

// FNV-1a over all LM parameter bytes; prune() must leave it unchanged.
uint64_t lm_weight_checksum(const LmModel& m);

}  // namespace denselm
