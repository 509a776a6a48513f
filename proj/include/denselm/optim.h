#pragma once

#include <span>
#include <vector>

#include "denselm/graph.h"

namespace denselm {

// Adam with the usual bias correction. Parameter order is fixed at
// construction; step() consumes the accumulated grads (caller zeroes after).
class Adam {
 public:
  explicit Adam(std::vector<Param*> params, double lr = 0.001, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  void step();
  std::span<Param* const> params() const { return params_; }

 private:
  std::vector<Param*> params_;
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<Tensor> m_, v_;
};

// SGD with momentum; learning rate is supplied per step so callers own the
// schedule.
class SgdMomentum {
 public:
  explicit SgdMomentum(std::vector<Param*> params, double momentum = 0.9);

  void step(double lr);
  std::span<Param* const> params() const { return params_; }

 private:
  std::vector<Param*> params_;
  double momentum_;
  std::vector<Tensor> buf_;
};

}  // namespace denselm
