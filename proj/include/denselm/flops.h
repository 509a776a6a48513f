#pragma once

#include <string>
#include <vector>

namespace denselm {

struct LmModel;
struct ContextEmbedder;
struct TaggerModel;

// Multiply-add counts per word-level input. Conventions: an LSTM layer step
// costs 4*h*(d_in + h + 1) MACs, a linear map d -> k costs k*(d + 1),
// char-path items are weighted by chars_per_word, embedding lookups cost 0.
double lstm_step_macs(int input_dim, int hidden_dim);
double linear_macs(int in_dim, int out_dim);

struct FlopsItem {
  std::string name;
  double macs;
};

struct FlopsReport {
  std::vector<FlopsItem> items;
  double total() const;
  std::string pretty() const;  // per-layer breakdown + total
};

// Per-layer cost of one dense stack (input widths reflect any deletion).
FlopsReport stack_flops(const LmModel& m, const std::string& prefix);

// Full inference cost per word for the embedder + tagger path. The LM
// projection/softmax head is excluded unless include_lm_head is set (it is
// not evaluated when producing contextualized features).
FlopsReport estimate_flops(const ContextEmbedder* emb, const TaggerModel* tagger,
                           double chars_per_word, bool include_lm_head = false);

}  // namespace denselm
