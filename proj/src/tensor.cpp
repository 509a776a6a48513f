#include "denselm/tensor.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "denselm/rng.h"

namespace denselm {

Tensor::Tensor(int r, int c, std::initializer_list<double> values)
    : rows(r), cols(c), data(values) {
  if (static_cast<int>(data.size()) != r * c) {
    throw std::invalid_argument("Tensor init list size does not match shape");
  }
}

Tensor Tensor::full(int r, int c, double v) {
  Tensor t(r, c);
  t.fill(v);
  return t;
}

Tensor Tensor::row(std::initializer_list<double> values) {
  Tensor t;
  t.rows = 1;
  t.cols = static_cast<int>(values.size());
  t.data.assign(values);
  return t;
}

Tensor Tensor::scalar(double v) {
  Tensor t(1, 1);
  t.data[0] = v;
  return t;
}

Tensor Tensor::glorot(int r, int c, Rng& rng) {
  double a = std::sqrt(6.0 / (r + c));
  return uniform(r, c, -a, a, rng);
}

Tensor Tensor::uniform(int r, int c, double lo, double hi, Rng& rng) {
  Tensor t(r, c);
  for (auto& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

bool Tensor::all_finite() const {
  return std::all_of(data.begin(), data.end(),
                     [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

std::string Tensor::shape_str() const {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

void check_finite(const Tensor& t, const std::string& what) {
  if (!t.all_finite()) {
    throw std::runtime_error("non-finite values in " + what);
  }
}

Tensor softmax_rows(const Tensor& logits) {
  Tensor out(logits.rows, logits.cols);
  for (int r = 0; r < logits.rows; ++r) {
    double mx = -HUGE_VAL;
    for (int c = 0; c < logits.cols; ++c) mx = std::max(mx, logits.at(r, c));
    double sum = 0.0;
    for (int c = 0; c < logits.cols; ++c) {
      double e = std::exp(logits.at(r, c) - mx);
      out.at(r, c) = e;
      sum += e;
    }
    for (int c = 0; c < logits.cols; ++c) out.at(r, c) /= sum;
  }
  return out;
}

}  // namespace denselm
