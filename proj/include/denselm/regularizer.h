#pragma once

#include <span>
#include <vector>

namespace denselm {

// Sparsity-inducing penalties over the relaxed selection vector z in [0,1]^L.
//   R0 = ||z||_0                                  (reporting only)
//   R1 = |z|_1
//   R2 = delta(||z||_0 > lambda1) * |z|_1         (margin-gated L1)
//   R3 = R2 + |z (1 - z)|_1                       (plus binary-encouraging)
// ||z||_0 counts strictly positive components; the box projection produces
// exact zeros, which keeps the count well-defined.
enum class RegKind { kR0, kR1, kR2, kR3 };

struct RegularizerSpec {
  RegKind kind = RegKind::kR3;
  double lambda0 = 0.05;  // risk weight
  int lambda1 = 2;        // sparsity margin (target active-layer count)
};

int l0_norm(std::span<const double> z);

// Penalty value (without the lambda0 weight). Throws if z leaves [0,1]^L.
double penalty(const RegularizerSpec& spec, std::span<const double> z);

// Subgradient with the indicator treated as a gate evaluated on the current
// z. L1 term contributes 1 on strictly positive components; the binary term
// contributes 1 - 2 z_i.
std::vector<double> penalty_grad(const RegularizerSpec& spec, std::span<const double> z);

// Clamp into [0,1]^L (idempotent).
void project_box(std::span<double> z);

}  // namespace denselm
