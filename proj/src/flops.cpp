#include "denselm/flops.h"

#include <sstream>

#include "denselm/embedder.h"
#include "denselm/tagger.h"

namespace denselm {

double lstm_step_macs(int input_dim, int hidden_dim) {
  return 4.0 * hidden_dim * (input_dim + hidden_dim + 1);
}

double linear_macs(int in_dim, int out_dim) {
  return static_cast<double>(out_dim) * (in_dim + 1);
}

double FlopsReport::total() const {
  double t = 0.0;
  for (const auto& it : items) t += it.macs;
  return t;
}

std::string FlopsReport::pretty() const {
  std::ostringstream ss;
  for (const auto& it : items) {
    ss << "  " << it.name << ": " << static_cast<long long>(it.macs) << "\n";
  }
  ss << "total MACs/word: " << static_cast<long long>(total()) << "\n";
  return ss.str();
}

FlopsReport stack_flops(const LmModel& m, const std::string& prefix) {
  FlopsReport r;
  for (int l = 0; l < m.stack.num_layers(); ++l) {
    const auto& layer = m.stack.layers[static_cast<size_t>(l)];
    r.items.push_back({prefix + ".layer" +
                           std::to_string(m.stack.layer_manifest[static_cast<size_t>(l)]),
                       lstm_step_macs(layer.input_dim, layer.hidden_dim)});
  }
  return r;
}

FlopsReport estimate_flops(const ContextEmbedder* emb, const TaggerModel* tagger,
                           double chars_per_word, bool include_lm_head) {
  FlopsReport r;
  if (emb) {
    for (auto& it : stack_flops(emb->fwd, "lm_fwd").items) r.items.push_back(it);
    for (auto& it : stack_flops(emb->bwd, "lm_bwd").items) r.items.push_back(it);
    if (include_lm_head) {
      r.items.push_back({"lm_fwd.head",
                         linear_macs(emb->fwd.stack.output_dim(), emb->fwd.head.proj_dim)});
      r.items.push_back({"lm_bwd.head",
                         linear_macs(emb->bwd.stack.output_dim(), emb->bwd.head.proj_dim)});
    }
    r.items.push_back({"w_cr", linear_macs(emb->feature_dim(), emb->r_dim)});
  }
  if (tagger) {
    const auto& d = tagger->dims;
    r.items.push_back({"char_bilstm",
                       chars_per_word * 2.0 * lstm_step_macs(d.char_embed, d.char_hidden)});
    r.items.push_back({"char_proj", linear_macs(2 * d.char_hidden, d.word_embed)});
    r.items.push_back({"word_bilstm",
                       2.0 * lstm_step_macs(tagger->v_dim(), d.word_hidden)});
    r.items.push_back({"emission", linear_macs(2 * d.word_hidden, tagger->labels.size())});
  }
  return r;
}

}  // namespace denselm
