#include "denselm/graph.h"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace denselm {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<EMat>;
using CMap = Eigen::Map<const EMat>;

CMap as_eigen(const Tensor& t) { return CMap(t.data.data(), t.rows, t.cols); }
Map as_eigen(Tensor& t) { return Map(t.data.data(), t.rows, t.cols); }

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " +
                              a.shape_str() + " and " + b.shape_str());
}

double logsumexp(const double* v, int n) {
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) mx = std::max(mx, v[i]);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(v[i] - mx);
  return mx + std::log(s);
}

}  // namespace

NodeId Graph::push(Node n) {
  n.grad = Tensor(n.value.rows, n.value.cols);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::constant(Tensor v) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(v);
  return push(std::move(n));
}

NodeId Graph::param(Param& p) {
  Node n;
  n.op = Op::kParam;
  n.value = p.value;
  n.bound = &p;
  return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Tensor& av = at(a).value;
  const Tensor& bv = at(b).value;
  if (av.cols != bv.rows) shape_error("matmul", av, bv);
  Node n;
  n.op = Op::kMatmul;
  n.inputs = {a, b};
  n.value = Tensor(av.rows, bv.cols);
  as_eigen(n.value) = as_eigen(av) * as_eigen(bv);
  return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
  const Tensor& av = at(a).value;
  const Tensor& bv = at(b).value;
  if (!av.same_shape(bv)) shape_error("add", av, bv);
  Node n;
  n.op = Op::kAdd;
  n.inputs = {a, b};
  n.value = Tensor(av.rows, av.cols);
  as_eigen(n.value) = as_eigen(av) + as_eigen(bv);
  return push(std::move(n));
}

NodeId Graph::add_rowvec(NodeId a, NodeId bias) {
  const Tensor& av = at(a).value;
  const Tensor& bv = at(bias).value;
  if (bv.rows != 1 || bv.cols != av.cols) shape_error("add_rowvec", av, bv);
  Node n;
  n.op = Op::kAddRowVec;
  n.inputs = {a, bias};
  n.value = Tensor(av.rows, av.cols);
  as_eigen(n.value) = as_eigen(av).rowwise() + as_eigen(bv).row(0);
  return push(std::move(n));
}

NodeId Graph::mul(NodeId a, NodeId b) {
  const Tensor& av = at(a).value;
  const Tensor& bv = at(b).value;
  if (!av.same_shape(bv)) shape_error("mul", av, bv);
  Node n;
  n.op = Op::kMul;
  n.inputs = {a, b};
  n.value = Tensor(av.rows, av.cols);
  as_eigen(n.value) = as_eigen(av).cwiseProduct(as_eigen(bv));
  return push(std::move(n));
}

NodeId Graph::sigmoid(NodeId x) {
  const Tensor& xv = at(x).value;
  Node n;
  n.op = Op::kSigmoid;
  n.inputs = {x};
  n.value = Tensor(xv.rows, xv.cols);
  for (int i = 0; i < xv.size(); ++i) {
    n.value.data[i] = 1.0 / (1.0 + std::exp(-xv.data[i]));
  }
  return push(std::move(n));
}

NodeId Graph::tanh(NodeId x) {
  const Tensor& xv = at(x).value;
  Node n;
  n.op = Op::kTanh;
  n.inputs = {x};
  n.value = Tensor(xv.rows, xv.cols);
  for (int i = 0; i < xv.size(); ++i) n.value.data[i] = std::tanh(xv.data[i]);
  return push(std::move(n));
}

NodeId Graph::relu(NodeId x) {
  const Tensor& xv = at(x).value;
  Node n;
  n.op = Op::kRelu;
  n.inputs = {x};
  n.value = Tensor(xv.rows, xv.cols);
  for (int i = 0; i < xv.size(); ++i) n.value.data[i] = std::max(0.0, xv.data[i]);
  return push(std::move(n));
}

NodeId Graph::concat_cols(const std::vector<NodeId>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_cols: no inputs");
  int rows = at(xs[0]).value.rows;
  int cols = 0;
  for (NodeId x : xs) {
    if (at(x).value.rows != rows) {
      shape_error("concat_cols", at(xs[0]).value, at(x).value);
    }
    cols += at(x).value.cols;
  }
  Node n;
  n.op = Op::kConcatCols;
  n.inputs = xs;
  n.value = Tensor(rows, cols);
  int off = 0;
  for (NodeId x : xs) {
    const Tensor& xv = at(x).value;
    n.ints.push_back(off);
    as_eigen(n.value).middleCols(off, xv.cols) = as_eigen(xv);
    off += xv.cols;
  }
  return push(std::move(n));
}

NodeId Graph::slice_cols(NodeId x, int begin, int end) {
  const Tensor& xv = at(x).value;
  if (begin < 0 || end > xv.cols || begin >= end) {
    throw std::invalid_argument("slice_cols: bad range [" + std::to_string(begin) +
                                ", " + std::to_string(end) + ") for " + xv.shape_str());
  }
  Node n;
  n.op = Op::kSliceCols;
  n.inputs = {x};
  n.ints = {begin, end};
  n.value = Tensor(xv.rows, end - begin);
  as_eigen(n.value) = as_eigen(xv).middleCols(begin, end - begin);
  return push(std::move(n));
}

NodeId Graph::softmax_xent_sum(NodeId logits, std::vector<int> labels) {
  const Tensor& lv = at(logits).value;
  if (static_cast<int>(labels.size()) != lv.rows) {
    throw std::invalid_argument("softmax_xent_sum: " + std::to_string(labels.size()) +
                                " labels for " + lv.shape_str() + " logits");
  }
  for (int l : labels) {
    if (l < 0 || l >= lv.cols) {
      throw std::invalid_argument("softmax_xent_sum: label " + std::to_string(l) +
                                  " out of range [0, " + std::to_string(lv.cols) + ")");
    }
  }
  Node n;
  n.op = Op::kSoftmaxXentSum;
  n.inputs = {logits};
  n.ints = std::move(labels);
  n.aux = softmax_rows(lv);
  n.value = Tensor(1, 1);
  double total = 0.0;
  for (int r = 0; r < lv.rows; ++r) {
    total -= std::log(n.aux.at(r, n.ints[static_cast<size_t>(r)]));
  }
  n.value.data[0] = total;
  return push(std::move(n));
}

NodeId Graph::scale(NodeId x, double s) {
  const Tensor& xv = at(x).value;
  Node n;
  n.op = Op::kScale;
  n.inputs = {x};
  n.scalar = s;
  n.value = Tensor(xv.rows, xv.cols);
  as_eigen(n.value) = as_eigen(xv) * s;
  return push(std::move(n));
}

NodeId Graph::scalar_mul(NodeId x, NodeId s) {
  const Tensor& xv = at(x).value;
  const Tensor& sv = at(s).value;
  if (sv.rows != 1 || sv.cols != 1) shape_error("scalar_mul", xv, sv);
  Node n;
  n.op = Op::kScalarMul;
  n.inputs = {x, s};
  n.value = Tensor(xv.rows, xv.cols);
  as_eigen(n.value) = as_eigen(xv) * sv.data[0];
  return push(std::move(n));
}

NodeId Graph::sum(NodeId x) {
  const Tensor& xv = at(x).value;
  Node n;
  n.op = Op::kSum;
  n.inputs = {x};
  n.value = Tensor::scalar(as_eigen(xv).sum());
  return push(std::move(n));
}

NodeId Graph::crf_nll(const std::vector<NodeId>& emissions, NodeId transitions,
                      std::vector<int> labels) {
  if (emissions.empty()) throw std::invalid_argument("crf_nll: empty sequence");
  const int T = static_cast<int>(emissions.size());
  const int Y = at(emissions[0]).value.cols;
  const Tensor& tr = at(transitions).value;
  if (tr.rows != Y + 2 || tr.cols != Y + 2) shape_error("crf_nll", at(emissions[0]).value, tr);
  if (static_cast<int>(labels.size()) != T) {
    throw std::invalid_argument("crf_nll: label count != sequence length");
  }
  for (NodeId e : emissions) {
    if (at(e).value.rows != 1 || at(e).value.cols != Y) {
      shape_error("crf_nll", at(emissions[0]).value, at(e).value);
    }
  }
  for (int l : labels) {
    if (l < 0 || l >= Y) {
      throw std::invalid_argument("crf_nll: label " + std::to_string(l) +
                                  " out of range [0, " + std::to_string(Y) + ")");
    }
  }
  const int kStart = Y;
  const int kStop = Y + 1;

  Node n;
  n.op = Op::kCrfNll;
  n.inputs = emissions;
  n.inputs.push_back(transitions);
  n.ints = std::move(labels);

  // Log-space forward pass; alphas cached for the backward pass.
  Tensor alpha(T, Y);
  for (int y = 0; y < Y; ++y) {
    alpha.at(0, y) = tr.at(kStart, y) + at(emissions[0]).value.data[static_cast<size_t>(y)];
  }
  std::vector<double> buf(static_cast<size_t>(Y));
  for (int t = 1; t < T; ++t) {
    const Tensor& et = at(emissions[static_cast<size_t>(t)]).value;
    for (int y = 0; y < Y; ++y) {
      for (int p = 0; p < Y; ++p) buf[static_cast<size_t>(p)] = alpha.at(t - 1, p) + tr.at(p, y);
      alpha.at(t, y) = logsumexp(buf.data(), Y) + et.data[static_cast<size_t>(y)];
    }
  }
  for (int y = 0; y < Y; ++y) buf[static_cast<size_t>(y)] = alpha.at(T - 1, y) + tr.at(y, kStop);
  double log_z = logsumexp(buf.data(), Y);

  double gold = tr.at(kStart, n.ints[0]);
  for (int t = 0; t < T; ++t) {
    gold += at(emissions[static_cast<size_t>(t)]).value.data[static_cast<size_t>(n.ints[static_cast<size_t>(t)])];
    if (t > 0) gold += tr.at(n.ints[static_cast<size_t>(t - 1)], n.ints[static_cast<size_t>(t)]);
  }
  gold += tr.at(n.ints[static_cast<size_t>(T - 1)], kStop);

  n.aux = std::move(alpha);
  n.scalar = log_z;
  n.value = Tensor::scalar(log_z - gold);
  return push(std::move(n));
}

NodeId Graph::embed_rows(Param& table, std::vector<int> ids) {
  for (int id : ids) {
    if (id < 0 || id >= table.value.rows) {
      throw std::invalid_argument("embed_rows: id " + std::to_string(id) +
                                  " out of range for table " + table.value.shape_str());
    }
  }
  Node n;
  n.op = Op::kEmbedRows;
  n.bound = &table;
  n.ints = std::move(ids);
  n.value = Tensor(static_cast<int>(n.ints.size()), table.value.cols);
  for (size_t r = 0; r < n.ints.size(); ++r) {
    for (int c = 0; c < table.value.cols; ++c) {
      n.value.at(static_cast<int>(r), c) = table.value.at(n.ints[r], c);
    }
  }
  return push(std::move(n));
}

void Graph::backward(NodeId loss) {
  Node& ln = at(loss);
  if (ln.value.rows != 1 || ln.value.cols != 1) {
    throw std::invalid_argument("backward: loss must be 1x1, got " + ln.value.shape_str());
  }
  ln.grad.data[0] = 1.0;
  for (NodeId id = loss; id >= 0; --id) backward_node(at(id));
}

void Graph::backward_node(Node& n) {
  switch (n.op) {
    case Op::kConstant:
      break;
    case Op::kParam:
      as_eigen(n.bound->grad) += as_eigen(n.grad);
      break;
    case Op::kMatmul: {
      Node& a = at(n.inputs[0]);
      Node& b = at(n.inputs[1]);
      as_eigen(a.grad) += as_eigen(n.grad) * as_eigen(b.value).transpose();
      as_eigen(b.grad) += as_eigen(a.value).transpose() * as_eigen(n.grad);
      break;
    }
    case Op::kAdd:
      as_eigen(at(n.inputs[0]).grad) += as_eigen(n.grad);
      as_eigen(at(n.inputs[1]).grad) += as_eigen(n.grad);
      break;
    case Op::kAddRowVec:
      as_eigen(at(n.inputs[0]).grad) += as_eigen(n.grad);
      as_eigen(at(n.inputs[1]).grad).row(0) += as_eigen(n.grad).colwise().sum();
      break;
    case Op::kMul: {
      Node& a = at(n.inputs[0]);
      Node& b = at(n.inputs[1]);
      as_eigen(a.grad) += as_eigen(n.grad).cwiseProduct(as_eigen(b.value));
      as_eigen(b.grad) += as_eigen(n.grad).cwiseProduct(as_eigen(a.value));
      break;
    }
    case Op::kSigmoid: {
      Node& x = at(n.inputs[0]);
      for (int i = 0; i < n.value.size(); ++i) {
        double y = n.value.data[i];
        x.grad.data[i] += n.grad.data[i] * y * (1.0 - y);
      }
      break;
    }
    case Op::kTanh: {
      Node& x = at(n.inputs[0]);
      for (int i = 0; i < n.value.size(); ++i) {
        double y = n.value.data[i];
        x.grad.data[i] += n.grad.data[i] * (1.0 - y * y);
      }
      break;
    }
    case Op::kRelu: {
      Node& x = at(n.inputs[0]);
      for (int i = 0; i < n.value.size(); ++i) {
        if (n.value.data[i] > 0.0) x.grad.data[i] += n.grad.data[i];
      }
      break;
    }
    case Op::kConcatCols:
      for (size_t k = 0; k < n.inputs.size(); ++k) {
        Node& x = at(n.inputs[k]);
        as_eigen(x.grad) += as_eigen(n.grad).middleCols(n.ints[k], x.value.cols);
      }
      break;
    case Op::kSliceCols: {
      Node& x = at(n.inputs[0]);
      as_eigen(x.grad).middleCols(n.ints[0], n.ints[1] - n.ints[0]) += as_eigen(n.grad);
      break;
    }
    case Op::kSoftmaxXentSum: {
      Node& x = at(n.inputs[0]);
      double g = n.grad.data[0];
      for (int r = 0; r < n.aux.rows; ++r) {
        for (int c = 0; c < n.aux.cols; ++c) {
          double ind = (c == n.ints[static_cast<size_t>(r)]) ? 1.0 : 0.0;
          x.grad.at(r, c) += g * (n.aux.at(r, c) - ind);
        }
      }
      break;
    }
    case Op::kScale:
      as_eigen(at(n.inputs[0]).grad) += as_eigen(n.grad) * n.scalar;
      break;
    case Op::kScalarMul: {
      Node& x = at(n.inputs[0]);
      Node& s = at(n.inputs[1]);
      as_eigen(x.grad) += as_eigen(n.grad) * s.value.data[0];
      s.grad.data[0] += as_eigen(n.grad).cwiseProduct(as_eigen(x.value)).sum();
      break;
    }
    case Op::kSum: {
      Node& x = at(n.inputs[0]);
      as_eigen(x.grad).array() += n.grad.data[0];
      break;
    }
    case Op::kCrfNll: {
      const int T = static_cast<int>(n.ints.size());
      const int Y = n.aux.cols;
      const int kStart = Y;
      const int kStop = Y + 1;
      Node& trn = at(n.inputs[static_cast<size_t>(T)]);
      const Tensor& tr = trn.value;
      const Tensor& alpha = n.aux;
      const double log_z = n.scalar;
      const double g = n.grad.data[0];

      // Betas recomputed here; alphas were cached by the forward pass.
      Tensor beta(T, Y);
      for (int y = 0; y < Y; ++y) beta.at(T - 1, y) = tr.at(y, kStop);
      std::vector<double> buf(static_cast<size_t>(Y));
      for (int t = T - 2; t >= 0; --t) {
        const Tensor& en = at(n.inputs[static_cast<size_t>(t + 1)]).value;
        for (int y = 0; y < Y; ++y) {
          for (int q = 0; q < Y; ++q) {
            buf[static_cast<size_t>(q)] = tr.at(y, q) + en.data[static_cast<size_t>(q)] + beta.at(t + 1, q);
          }
          beta.at(t, y) = logsumexp(buf.data(), Y);
        }
      }

      // Emission grads: unary marginals minus gold indicators.
      for (int t = 0; t < T; ++t) {
        Node& en = at(n.inputs[static_cast<size_t>(t)]);
        for (int y = 0; y < Y; ++y) {
          double m = std::exp(alpha.at(t, y) + beta.at(t, y) - log_z);
          double ind = (y == n.ints[static_cast<size_t>(t)]) ? 1.0 : 0.0;
          en.grad.data[static_cast<size_t>(y)] += g * (m - ind);
        }
      }
      // Start / stop rows.
      for (int y = 0; y < Y; ++y) {
        double m1 = std::exp(alpha.at(0, y) + beta.at(0, y) - log_z);
        trn.grad.at(kStart, y) += g * (m1 - ((y == n.ints[0]) ? 1.0 : 0.0));
        double mT = std::exp(alpha.at(T - 1, y) + beta.at(T - 1, y) - log_z);
        trn.grad.at(y, kStop) += g * (mT - ((y == n.ints[static_cast<size_t>(T - 1)]) ? 1.0 : 0.0));
      }
      // Interior transitions: pairwise marginals minus gold counts.
      for (int t = 0; t + 1 < T; ++t) {
        const Tensor& en = at(n.inputs[static_cast<size_t>(t + 1)]).value;
        for (int a = 0; a < Y; ++a) {
          for (int b = 0; b < Y; ++b) {
            double q = std::exp(alpha.at(t, a) + tr.at(a, b) +
                                en.data[static_cast<size_t>(b)] + beta.at(t + 1, b) - log_z);
            double ind = (a == n.ints[static_cast<size_t>(t)] &&
                          b == n.ints[static_cast<size_t>(t + 1)])
                             ? 1.0
                             : 0.0;
            trn.grad.at(a, b) += g * (q - ind);
          }
        }
      }
      break;
    }
    case Op::kEmbedRows: {
      for (size_t r = 0; r < n.ints.size(); ++r) {
        for (int c = 0; c < n.value.cols; ++c) {
          n.bound->grad.at(n.ints[r], c) += n.grad.at(static_cast<int>(r), c);
        }
      }
      break;
    }
  }
}

void Graph::assert_finite() const {
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].value.all_finite()) {
      throw std::runtime_error("non-finite value at graph node " + std::to_string(i));
    }
  }
}

double grad_check(const std::function<NodeId(Graph&)>& build,
                  std::span<Param* const> params, double eps) {
  for (Param* p : params) p->zero_grad();
  Graph g;
  NodeId loss = build(g);
  g.backward(loss);

  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Param* p : params) analytic.push_back(p->grad);

  double max_err = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Param* p = params[pi];
    for (int i = 0; i < p->value.size(); ++i) {
      double orig = p->value.data[static_cast<size_t>(i)];
      p->value.data[static_cast<size_t>(i)] = orig + eps;
      Graph gp;
      double fp = gp.value(build(gp)).data[0];
      p->value.data[static_cast<size_t>(i)] = orig - eps;
      Graph gm;
      double fm = gm.value(build(gm)).data[0];
      p->value.data[static_cast<size_t>(i)] = orig;

      double numeric = (fp - fm) / (2.0 * eps);
      double a = analytic[pi].data[static_cast<size_t>(i)];
      if (!std::isfinite(a) || !std::isfinite(numeric)) {
        return std::numeric_limits<double>::infinity();
      }
      double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

double global_grad_norm(std::span<Param* const> params) {
  double sq = 0.0;
  for (const Param* p : params) {
    for (double v : p->grad.data) sq += v * v;
  }
  return std::sqrt(sq);
}

void clip_global_norm(std::span<Param* const> params, double max_norm) {
  double norm = global_grad_norm(params);
  if (norm <= max_norm || norm == 0.0) return;
  double s = max_norm / norm;
  for (Param* p : params) {
    for (double& v : p->grad.data) v *= s;
  }
}

}  // namespace denselm
