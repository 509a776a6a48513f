#include "denselm/optim.h"

#include <cmath>

namespace denselm {

Adam::Adam(std::vector<Param*> params, double lr, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (Param* p : params_) {
    m_.emplace_back(p->value.rows, p->value.cols);
    v_.emplace_back(p->value.rows, p->value.cols);
  }
}

void Adam::step() {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, t_);
  double bc2 = 1.0 - std::pow(beta2_, t_);
  for (size_t i = 0; i < params_.size(); ++i) {
    Param* p = params_[i];
    for (int k = 0; k < p->value.size(); ++k) {
      double g = p->grad.data[static_cast<size_t>(k)];
      double& m = m_[i].data[static_cast<size_t>(k)];
      double& v = v_[i].data[static_cast<size_t>(k)];
      m = beta1_ * m + (1.0 - beta1_) * g;
      v = beta2_ * v + (1.0 - beta2_) * g * g;
      double mhat = m / bc1;
      double vhat = v / bc2;
      p->value.data[static_cast<size_t>(k)] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

SgdMomentum::SgdMomentum(std::vector<Param*> params, double momentum)
    : params_(std::move(params)), momentum_(momentum) {
  for (Param* p : params_) buf_.emplace_back(p->value.rows, p->value.cols);
}

void SgdMomentum::step(double lr) {
  for (size_t i = 0; i < params_.size(); ++i) {
    Param* p = params_[i];
    for (int k = 0; k < p->value.size(); ++k) {
      double& b = buf_[i].data[static_cast<size_t>(k)];
      b = momentum_ * b + p->grad.data[static_cast<size_t>(k)];
      p->value.data[static_cast<size_t>(k)] -= lr * b;
    }
  }
}

}  // namespace denselm
