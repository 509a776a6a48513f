#include "denselm/lstm.h"

#include <cmath>
#include <stdexcept>

#include "denselm/rng.h"

namespace denselm {

int LayerMask::l0() const {
  int n = 0;
  for (double v : z) n += (v > 0.0) ? 1 : 0;
  return n;
}

bool LayerMask::is_binary() const {
  for (double v : z) {
    if (v != 0.0 && v != 1.0) return false;
  }
  return true;
}

double LayerMask::binariness_gap() const {
  double gap = 0.0;
  for (double v : z) gap = std::max(gap, std::min(v, 1.0 - v));
  return gap;
}

LstmLayer::LstmLayer(const std::string& name, int input_dim, int hidden_dim, Rng& rng)
    : input_dim(input_dim),
      hidden_dim(hidden_dim),
      w(name + ".w", Tensor::glorot(input_dim + hidden_dim, 4 * hidden_dim, rng)),
      b(name + ".b", Tensor(1, 4 * hidden_dim)) {
  for (int k = 0; k < hidden_dim; ++k) b.value.at(0, hidden_dim + k) = 1.0;
}

LstmLayer LstmLayer::zeros(const std::string& name, int input_dim, int hidden_dim) {
  LstmLayer l;
  l.input_dim = input_dim;
  l.hidden_dim = hidden_dim;
  l.w = Param(name + ".w", Tensor(input_dim + hidden_dim, 4 * hidden_dim));
  l.b = Param(name + ".b", Tensor(1, 4 * hidden_dim));
  return l;
}

LstmStepOut lstm_step(Graph& g, int hidden_dim, NodeId w_node, NodeId b_node,
                      NodeId x, NodeId h_prev, NodeId c_prev) {
  NodeId xin = g.concat_cols({x, h_prev});
  NodeId pre = g.add_rowvec(g.matmul(xin, w_node), b_node);
  NodeId gi = g.sigmoid(g.slice_cols(pre, 0, hidden_dim));
  NodeId gf = g.sigmoid(g.slice_cols(pre, hidden_dim, 2 * hidden_dim));
  NodeId gg = g.tanh(g.slice_cols(pre, 2 * hidden_dim, 3 * hidden_dim));
  NodeId go = g.sigmoid(g.slice_cols(pre, 3 * hidden_dim, 4 * hidden_dim));
  NodeId c = g.add(g.mul(gf, c_prev), g.mul(gi, gg));
  NodeId h = g.mul(go, g.tanh(c));
  return {h, c};
}

DenseStack::DenseStack(const std::string& prefix, int embed_dim, int hidden_dim,
                       int num_layers, Rng& rng)
    : embed_dim(embed_dim), hidden_dim(hidden_dim) {
  for (int l = 0; l < num_layers; ++l) {
    int in = embed_dim + l * hidden_dim;
    layers.emplace_back(prefix + ".l" + std::to_string(l), in, hidden_dim, rng);
    layer_manifest.push_back(l);
  }
  mask = LayerMask::ones(num_layers);
}

std::vector<Param*> DenseStack::params() {
  std::vector<Param*> ps;
  for (auto& l : layers) {
    ps.push_back(&l.w);
    ps.push_back(&l.b);
  }
  return ps;
}

std::vector<uint8_t> layerwise_dropout_mask(int num_layers, double p, Rng& rng) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("layer dropout p out of [0,1]");
  std::vector<uint8_t> dropped(static_cast<size_t>(num_layers), 0);
  for (auto& d : dropped) d = rng.bernoulli(p) ? 1 : 0;
  return dropped;
}

StackState StackState::zeros(const DenseStack& stack, int batch) {
  StackState s;
  for (int l = 0; l < stack.num_layers(); ++l) {
    s.h.emplace_back(batch, stack.hidden_dim);
    s.c.emplace_back(batch, stack.hidden_dim);
  }
  return s;
}

StackRun::StackRun(Graph& g, const DenseStack& stack, const Options& opts)
    : g_(g), stack_(stack), opts_(opts) {
  if (opts_.dropped && static_cast<int>(opts_.dropped->size()) != stack.num_layers()) {
    throw std::invalid_argument("layer dropout mask length != num layers");
  }
  if (opts_.z_nodes && static_cast<int>(opts_.z_nodes->size()) != stack.num_layers()) {
    throw std::invalid_argument("z node count != num layers");
  }
  for (const auto& l : stack.layers) {
    // Non-trainable binding keeps LM weights structurally frozen: constants
    // pass gradients through but never accumulate them.
    w_nodes_.push_back(opts_.trainable ? g.param(const_cast<Param&>(l.w))
                                       : g.constant(l.w.value));
    b_nodes_.push_back(opts_.trainable ? g.param(const_cast<Param&>(l.b))
                                       : g.constant(l.b.value));
  }
}

void StackRun::reset(const StackState& state) {
  if (static_cast<int>(state.h.size()) != stack_.num_layers()) {
    throw std::invalid_argument("stack state layer count mismatch");
  }
  h_.clear();
  c_.clear();
  batch_ = stack_.num_layers() > 0 ? state.h[0].rows : 0;
  for (int l = 0; l < stack_.num_layers(); ++l) {
    h_.push_back(g_.constant(state.h[static_cast<size_t>(l)]));
    c_.push_back(g_.constant(state.c[static_cast<size_t>(l)]));
  }
}

StackRun::Step StackRun::step(NodeId x) {
  const int L = stack_.num_layers();
  // node storage may reallocate on push; keep plain ints, not references
  const int x_rows = g_.value(x).rows;
  const int x_cols = g_.value(x).cols;
  if (x_cols != stack_.embed_dim) {
    throw std::invalid_argument("stack input dim " + std::to_string(x_rows) + "x" +
                                std::to_string(x_cols) + " != embed dim " +
                                std::to_string(stack_.embed_dim));
  }
  if (L > 0 && h_.empty()) throw std::logic_error("StackRun::reset not called");

  Step out;
  std::vector<NodeId> feed;  // cross-layer inputs (dropout applies here only)
  NodeId zero = -1;
  for (int l = 0; l < L; ++l) {
    std::vector<NodeId> parts;
    parts.push_back(x);
    for (int j = 0; j < l; ++j) parts.push_back(feed[static_cast<size_t>(j)]);
    NodeId xin = parts.size() == 1 ? x : g_.concat_cols(parts);
    auto hc = lstm_step(g_, stack_.hidden_dim, w_nodes_[static_cast<size_t>(l)],
                        b_nodes_[static_cast<size_t>(l)], xin, h_[static_cast<size_t>(l)],
                        c_[static_cast<size_t>(l)]);
    h_[static_cast<size_t>(l)] = hc.h;
    c_[static_cast<size_t>(l)] = hc.c;
    NodeId masked = opts_.z_nodes
                        ? g_.scalar_mul(hc.h, (*opts_.z_nodes)[static_cast<size_t>(l)])
                        : g_.scale(hc.h, stack_.mask.z[static_cast<size_t>(l)]);
    out.layer_out.push_back(masked);
    bool drop = opts_.dropped && (*opts_.dropped)[static_cast<size_t>(l)];
    if (drop) {
      if (zero < 0) zero = g_.constant(Tensor(x_rows, stack_.hidden_dim));
      feed.push_back(zero);
    } else {
      feed.push_back(masked);
    }
  }
  std::vector<NodeId> concat_parts;
  concat_parts.push_back(x);
  for (NodeId m : out.layer_out) concat_parts.push_back(m);
  out.h_concat = concat_parts.size() == 1 ? x : g_.concat_cols(concat_parts);
  return out;
}

StackState StackRun::detach_state() const {
  StackState s;
  for (int l = 0; l < stack_.num_layers(); ++l) {
    s.h.push_back(g_.value(h_[static_cast<size_t>(l)]));
    s.c.push_back(g_.value(c_[static_cast<size_t>(l)]));
  }
  return s;
}

}  // namespace denselm
