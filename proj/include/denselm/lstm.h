#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "denselm/graph.h"

namespace denselm {

class Rng;

// Per-layer selection weights z in [0,1]^L. All ones during model training;
// updated only by pruning.
struct LayerMask {
  std::vector<double> z;

  static LayerMask ones(int num_layers) {
    LayerMask m;
    m.z.assign(static_cast<size_t>(num_layers), 1.0);
    return m;
  }
  // ||z||_0 counting strictly positive components.
  int l0() const;
  bool is_binary() const;  // every component exactly 0 or 1
  // Largest distance of any component from {0,1}.
  double binariness_gap() const;
};

// Vanilla LSTM cell. Weight columns hold the gate blocks in the order
// (input, forget, cell, output); rows are [dense input | previous hidden].
struct LstmLayer {
  int input_dim = 0;
  int hidden_dim = 0;
  Param w;  // (input_dim + hidden_dim) x 4*hidden_dim
  Param b;  // 1 x 4*hidden_dim, forget block initialized to 1

  LstmLayer() = default;
  // Glorot-uniform weights, forget-gate bias 1, other biases 0.
  LstmLayer(const std::string& name, int input_dim, int hidden_dim, Rng& rng);
  // All-zero weights and biases.
  static LstmLayer zeros(const std::string& name, int input_dim, int hidden_dim);
};

// One LSTM step inside a graph. w_node/b_node are the layer's bound nodes.
struct LstmStepOut {
  NodeId h;
  NodeId c;
};
LstmStepOut lstm_step(Graph& g, int hidden_dim, NodeId w_node, NodeId b_node,
                      NodeId x, NodeId h_prev, NodeId c_prev);

// Densely connected stack: layer l (1-based) consumes
// [x_t, out_1, ..., out_{l-1}] where out_j = z_j * h_j. The concatenated
// output h_t = [x_t, out_1, ..., out_L].
struct DenseStack {
  int embed_dim = 0;
  int hidden_dim = 0;
  std::vector<LstmLayer> layers;
  LayerMask mask;
  double layer_dropout_p = 0.0;
  // Original layer indices surviving in this stack (identity unless pruned).
  std::vector<int> layer_manifest;

  DenseStack() = default;
  DenseStack(const std::string& prefix, int embed_dim, int hidden_dim,
             int num_layers, Rng& rng);

  int num_layers() const { return static_cast<int>(layers.size()); }
  int output_dim() const { return embed_dim + num_layers() * hidden_dim; }
  std::vector<Param*> params();
};

// One per-batch layer-wise dropout draw: true = layer dropped from the
// recurrent pathway this batch (its output still reaches the LM head).
std::vector<uint8_t> layerwise_dropout_mask(int num_layers, double p, Rng& rng);

// Detached recurrent state carried between unroll windows.
struct StackState {
  std::vector<Tensor> h;  // per layer, batch x hidden
  std::vector<Tensor> c;

  static StackState zeros(const DenseStack& stack, int batch);
};

// Binds a DenseStack into one Graph and advances it step by step.
class StackRun {
 public:
  struct Options {
    bool trainable = true;  // false: weights enter the graph as constants
    // Layer-wise dropout flags for this batch (train mode only).
    const std::vector<uint8_t>* dropped = nullptr;
    // Per-layer 1x1 nodes overriding mask.z (pruning mode).
    const std::vector<NodeId>* z_nodes = nullptr;
  };

  StackRun(Graph& g, const DenseStack& stack, const Options& opts);

  void reset(const StackState& state);

  struct Step {
    NodeId h_concat;                // batch x output_dim
    std::vector<NodeId> layer_out;  // masked per-layer outputs, batch x hidden
  };
  // x: batch x embed_dim. Advances the internal recurrent state.
  Step step(NodeId x);

  StackState detach_state() const;

 private:
  Graph& g_;
  const DenseStack& stack_;
  Options opts_;
  std::vector<NodeId> w_nodes_, b_nodes_;
  std::vector<NodeId> h_, c_;  // current state nodes
  int batch_ = 0;
};

}  // namespace denselm
