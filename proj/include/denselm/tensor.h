#pragma once

#include <initializer_list>
#include <string>
#include <vector>

namespace denselm {

class Rng;

// Dense 2-D float64 array, row-major. Plain value type; gradients and graph
// bookkeeping live in Graph / Param.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}
  Tensor(int r, int c, std::initializer_list<double> values);

  static Tensor zeros(int r, int c) { return Tensor(r, c); }
  static Tensor full(int r, int c, double v);
  static Tensor row(std::initializer_list<double> values);
  static Tensor scalar(double v);
  // Uniform in [-a, a] with fan-based a = sqrt(6 / (fan_in + fan_out)).
  static Tensor glorot(int r, int c, Rng& rng);
  static Tensor uniform(int r, int c, double lo, double hi, Rng& rng);

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  int size() const { return rows * cols; }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
  bool all_finite() const;
  void fill(double v);

  std::string shape_str() const;
};

// Throws std::runtime_error naming `what` if any entry is NaN or +-Inf.
void check_finite(const Tensor& t, const std::string& what);

// Stable row-wise softmax (plain helper, not a graph op).
Tensor softmax_rows(const Tensor& logits);

}  // namespace denselm
