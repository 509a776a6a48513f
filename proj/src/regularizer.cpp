#include "denselm/regularizer.h"

#include <algorithm>
#include <stdexcept>

namespace denselm {

namespace {

void check_box(std::span<const double> z) {
  for (double v : z) {
    if (v < 0.0 || v > 1.0) {
      throw std::invalid_argument("regularizer: z component outside [0,1]");
    }
  }
}

double l1(std::span<const double> z) {
  double s = 0.0;
  for (double v : z) s += v;  // z >= 0, so |z|_1 = sum
  return s;
}

double binary_term(std::span<const double> z) {
  double s = 0.0;
  for (double v : z) s += v * (1.0 - v);
  return s;
}

}  // namespace

int l0_norm(std::span<const double> z) {
  int n = 0;
  for (double v : z) n += (v > 0.0) ? 1 : 0;
  return n;
}

double penalty(const RegularizerSpec& spec, std::span<const double> z) {
  check_box(z);
  bool gate = l0_norm(z) > spec.lambda1;
  switch (spec.kind) {
    case RegKind::kR0:
      return static_cast<double>(l0_norm(z));
    case RegKind::kR1:
      return l1(z);
    case RegKind::kR2:
      return gate ? l1(z) : 0.0;
    case RegKind::kR3:
      return (gate ? l1(z) : 0.0) + binary_term(z);
  }
  return 0.0;
}

std::vector<double> penalty_grad(const RegularizerSpec& spec, std::span<const double> z) {
  check_box(z);
  bool gate = l0_norm(z) > spec.lambda1;
  std::vector<double> g(z.size(), 0.0);
  for (size_t i = 0; i < z.size(); ++i) {
    double l1g = (z[i] > 0.0) ? 1.0 : 0.0;
    switch (spec.kind) {
      case RegKind::kR0:
        g[i] = 0.0;  // piecewise constant; reported, never optimized
        break;
      case RegKind::kR1:
        g[i] = l1g;
        break;
      case RegKind::kR2:
        g[i] = gate ? l1g : 0.0;
        break;
      case RegKind::kR3:
        g[i] = (gate ? l1g : 0.0) + (1.0 - 2.0 * z[i]);
        break;
    }
  }
  return g;
}

void project_box(std::span<double> z) {
  for (double& v : z) v = std::clamp(v, 0.0, 1.0);
}

}  // namespace denselm
