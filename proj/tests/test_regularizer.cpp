#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "denselm/regularizer.h"
#include "denselm/rng.h"

using namespace denselm;

namespace {

RegularizerSpec spec(RegKind k, int lambda1 = 2) {
  RegularizerSpec s;
  s.kind = k;
  s.lambda0 = 1.0;
  s.lambda1 = lambda1;
  return s;
}

// central differences on interior points, away from the l0 discontinuity
double fd_grad(const RegularizerSpec& s, std::vector<double> z, size_t i,
               double eps = 1e-7) {
  z[i] += eps;
  double fp = penalty(s, z);
  z[i] -= 2 * eps;
  double fm = penalty(s, z);
  return (fp - fm) / (2 * eps);
}

}  // namespace

TEST_CASE("closed-form values") {
  CHECK(penalty(spec(RegKind::kR1), std::vector<double>{0.5, 0.5, 0.0}) == 1.0);
  CHECK(penalty(spec(RegKind::kR2), std::vector<double>{1.0, 1.0, 0.0}) == 0.0);
  CHECK(penalty(spec(RegKind::kR2), std::vector<double>{1.0, 1.0, 1.0}) == 3.0);
  CHECK(penalty(spec(RegKind::kR3), std::vector<double>{1.0, 0.5, 0.0}) == 0.25);
  CHECK(penalty(spec(RegKind::kR0), std::vector<double>{0.2, 0.0, 1.0}) == 2.0);
}

TEST_CASE("R3 vanishes exactly on binary sparse z") {
  CHECK(penalty(spec(RegKind::kR3), std::vector<double>{1.0, 1.0, 0.0}) == 0.0);
  CHECK(penalty(spec(RegKind::kR3), std::vector<double>{0.0, 0.0, 0.0}) == 0.0);
  CHECK(penalty(spec(RegKind::kR3), std::vector<double>{1.0, 0.0, 1.0}) == 0.0);
  // binary but not sparse: the margin gate stays on
  CHECK(penalty(spec(RegKind::kR3), std::vector<double>{1.0, 1.0, 1.0}) == 3.0);
}

TEST_CASE("R2 is zero on the whole satisfying-sparsity set") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    int L = 3 + rng.uniform_int(6);
    int lambda1 = rng.uniform_int(L + 1);
    std::vector<double> z(static_cast<size_t>(L), 0.0);
    // at most lambda1 strictly positive components
    for (int k = 0; k < lambda1; ++k) {
      if (rng.bernoulli(0.7)) z[static_cast<size_t>(rng.uniform_int(L))] = rng.uniform();
    }
    CHECK(penalty(spec(RegKind::kR2, lambda1), z) == 0.0);
  }
}

TEST_CASE("subgradient formulas at stated points") {
  // gate inactive, z=0.5: the binary penalty's stationary ridge
  auto g = penalty_grad(spec(RegKind::kR3, 2), std::vector<double>{0.5, 0.0, 0.0});
  CHECK(g[0] == 0.0);
  // gate active at z_i=1: 1 + (1 - 2) = 0, pushed neither way
  auto g2 = penalty_grad(spec(RegKind::kR3, 2), std::vector<double>{1.0, 1.0, 1.0});
  CHECK(g2[0] == 0.0);
  // R1 is all ones on positive components
  auto g3 = penalty_grad(spec(RegKind::kR1), std::vector<double>{0.3, 0.0, 0.8});
  CHECK(g3 == std::vector<double>{1.0, 0.0, 1.0});
}

TEST_CASE("values exact and gradients within 1e-6 on 1000 random z") {
  Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    int L = 2 + rng.uniform_int(7);
    int lambda1 = rng.uniform_int(L);
    std::vector<double> z;
    for (int l = 0; l < L; ++l) z.push_back(0.05 + 0.9 * rng.uniform());  // interior
    RegKind kind = static_cast<RegKind>(1 + rng.uniform_int(3));
    RegularizerSpec s = spec(kind, lambda1);

    // closed-form value
    double l1 = 0.0, bin = 0.0;
    int l0 = 0;
    for (double v : z) {
      l1 += v;
      bin += v * (1 - v);
      l0 += v > 0 ? 1 : 0;
    }
    bool gate = l0 > lambda1;
    double expect = kind == RegKind::kR1 ? l1
                    : kind == RegKind::kR2
                        ? (gate ? l1 : 0.0)
                        : (gate ? l1 : 0.0) + bin;
    CHECK(penalty(s, z) == expect);

    // subgradient vs finite differences (interior points keep the l0 count
    // constant under the eps probe)
    auto g = penalty_grad(s, z);
    for (size_t i = 0; i < z.size(); ++i) {
      CHECK(std::abs(g[i] - fd_grad(s, z, i)) < 1e-6);
    }
  }
}

TEST_CASE("out-of-box z is a contract error") {
  CHECK_THROWS_AS(penalty(spec(RegKind::kR1), std::vector<double>{1.2}),
                  std::invalid_argument);
  CHECK_THROWS_AS(penalty_grad(spec(RegKind::kR3), std::vector<double>{-0.1}),
                  std::invalid_argument);
}

TEST_CASE("projection clamps and is idempotent") {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v;
    for (int i = 0; i < 6; ++i) v.push_back(rng.uniform(-2.0, 3.0));
    project_box(v);
    for (double x : v) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
    auto once = v;
    project_box(v);
    CHECK(v == once);
  }
  std::vector<double> edge = {-0.5, 1.5, 0.25};
  project_box(edge);
  CHECK(edge == std::vector<double>{0.0, 1.0, 0.25});
}

TEST_CASE("l0 counts strictly positive components") {
  CHECK(l0_norm(std::vector<double>{0.0, 1e-12, 1.0}) == 2);
  CHECK(l0_norm(std::vector<double>{0.0, 0.0}) == 0);
}
