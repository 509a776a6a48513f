#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "denselm/tensor.h"

namespace denselm {

// Trainable leaf. Owned outside any graph; gradients accumulate additively
// into `grad` until the caller zeroes them.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;

  Param() = default;
  Param(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows, value.cols) {}

  void zero_grad() { grad.fill(0.0); }
};

using NodeId = int32_t;

// Reverse-mode tape over dense 2-D tensors. Nodes are recorded in creation
// order, which is a topological order by construction; backward() walks the
// tape in exact reverse. Single-threaded per instance.
class Graph {
 public:
  enum class Op : uint8_t {
    kConstant,
    kParam,
    kMatmul,
    kAdd,
    kAddRowVec,
    kMul,
    kSigmoid,
    kTanh,
    kRelu,
    kConcatCols,
    kSliceCols,
    kSoftmaxXentSum,
    kScale,
    kScalarMul,
    kSum,
    kCrfNll,
    kEmbedRows,
  };

  // Leaves.
  NodeId constant(Tensor v);
  NodeId param(Param& p);

  // Ops. Shape mismatches throw std::invalid_argument naming the op.
  NodeId matmul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  // bias is 1 x cols, added to every row of a. The only broadcast supported.
  NodeId add_rowvec(NodeId a, NodeId bias);
  NodeId mul(NodeId a, NodeId b);
  NodeId sigmoid(NodeId x);
  NodeId tanh(NodeId x);
  NodeId relu(NodeId x);
  NodeId concat_cols(const std::vector<NodeId>& xs);
  NodeId slice_cols(NodeId x, int begin, int end);
  // Sum over rows of -log softmax(logits)[r, labels[r]]; output 1x1.
  NodeId softmax_xent_sum(NodeId logits, std::vector<int> labels);
  NodeId scale(NodeId x, double s);
  // s is 1x1; gradient flows to both operands.
  NodeId scalar_mul(NodeId x, NodeId s);
  NodeId sum(NodeId x);
  // Negative log-likelihood of a first-order CRF with virtual start/stop
  // states. emissions[t] is 1 x num_labels; transitions is
  // (num_labels + 2) x (num_labels + 2) with start row = num_labels and
  // stop column = num_labels + 1. Partition via the log-space forward
  // algorithm; backward produces (marginals - gold indicators).
  NodeId crf_nll(const std::vector<NodeId>& emissions, NodeId transitions,
                 std::vector<int> labels);
  // Gathers table rows by id into a len(ids) x cols output. Backward
  // scatter-adds into the table's grad rows (tables are large; a one-hot
  // matmul would be quadratic in vocab size).
  NodeId embed_rows(Param& table, std::vector<int> ids);

  const Tensor& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].value; }
  const Tensor& grad(NodeId id) const { return nodes_[static_cast<size_t>(id)].grad; }

  // loss must be 1x1. Accumulates into bound Param grads.
  void backward(NodeId loss);

  // Throws if any node value in the graph is non-finite.
  void assert_finite() const;

  size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Op op;
    Tensor value;
    Tensor grad;
    std::vector<NodeId> inputs;
    Param* bound = nullptr;
    std::vector<int> ints;   // labels / concat offsets / slice bounds
    double scalar = 0.0;     // scale factor
    Tensor aux;              // cached softmax probs / CRF alphas (+ logZ)
  };

  NodeId push(Node n);
  Node& at(NodeId id) { return nodes_[static_cast<size_t>(id)]; }
  const Node& at(NodeId id) const { return nodes_[static_cast<size_t>(id)]; }
  void backward_node(Node& n);

  std::vector<Node> nodes_;
};

// Max over parameters of |analytic - numeric| / max(1e-8, |analytic| + |numeric|),
// central differences with step eps. `build` must be deterministic (fix any
// dropout masks). A NaN in either route reports as +inf.
double grad_check(const std::function<NodeId(Graph&)>& build,
                  std::span<Param* const> params, double eps = 1e-5);

double global_grad_norm(std::span<Param* const> params);
// Scales all grads so the global norm is at most max_norm.
void clip_global_norm(std::span<Param* const> params, double max_norm);

}  // namespace denselm
