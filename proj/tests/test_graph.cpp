#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "denselm/graph.h"
#include "denselm/optim.h"
#include "denselm/rng.h"
#include "support/testutil.h"

using namespace denselm;
using testutil::random_tensor;

TEST_CASE("relu, sigmoid, tanh forward values") {
  Graph g;
  NodeId x = g.constant(Tensor::row({-1.0, 0.0, 2.0}));
  CHECK(g.value(g.relu(x)).data == std::vector<double>{0.0, 0.0, 2.0});
  NodeId z = g.constant(Tensor::scalar(0.0));
  CHECK(g.value(g.sigmoid(z)).data[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.value(g.tanh(z)).data[0] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("concat puts first input's entries first") {
  Graph g;
  NodeId a = g.constant(Tensor::row({1.0, 2.0}));
  NodeId b = g.constant(Tensor::row({3.0, 4.0, 5.0}));
  const Tensor& v = g.value(g.concat_cols({a, b}));
  CHECK(v.rows == 1);
  CHECK(v.cols == 5);
  CHECK(v.data == std::vector<double>{1.0, 2.0, 3.0, 4.0, 5.0});
}

TEST_CASE("shape mismatch names the op and shapes") {
  Graph g;
  NodeId a = g.constant(Tensor(2, 3));
  NodeId b = g.constant(Tensor(2, 3));
  CHECK_THROWS_WITH_AS(g.matmul(a, b), doctest::Contains("matmul"), std::invalid_argument);
  NodeId c = g.constant(Tensor(2, 4));
  CHECK_THROWS_AS(g.add(a, c), std::invalid_argument);
  CHECK_THROWS_AS(g.add_rowvec(a, c), std::invalid_argument);
}

TEST_CASE("backward of sum gives ones") {
  Graph g;
  Param x("x", Tensor::row({3.0, -1.0, 7.0}));
  NodeId loss = g.sum(g.param(x));
  x.zero_grad();
  g.backward(loss);
  CHECK(x.grad.data == std::vector<double>{1.0, 1.0, 1.0});
}

TEST_CASE("backward of sum(sigmoid(x)) at zero gives 0.25") {
  Graph g;
  Param x("x", Tensor(1, 3));
  NodeId loss = g.sum(g.sigmoid(g.param(x)));
  x.zero_grad();
  g.backward(loss);
  for (double v : x.grad.data) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("non-scalar loss is a contract error") {
  Graph g;
  Param x("x", Tensor(2, 2));
  NodeId y = g.relu(g.param(x));
  CHECK_THROWS_AS(g.backward(y), std::invalid_argument);
}

TEST_CASE("leaf not influencing loss keeps zero grad") {
  Graph g;
  Param x("x", Tensor::row({1.0, 2.0}));
  Param unused("unused", Tensor::row({5.0}));
  NodeId loss = g.sum(g.param(x));
  g.param(unused);  // present in the graph, not connected to loss
  x.zero_grad();
  unused.zero_grad();
  g.backward(loss);
  CHECK(unused.grad.data[0] == 0.0);
}

TEST_CASE("identity grad check is near-exact") {
  Param x("x", Tensor::row({0.3, -0.7, 1.1}));
  Param* ps[] = {&x};
  double err = grad_check([&](Graph& g) { return g.sum(g.param(x)); }, ps);
  CHECK(err < 1e-10);
}

TEST_CASE("every op kind matches finite differences on 20 random instances") {
  Rng rng(1234);
  for (int trial = 0; trial < 20; ++trial) {
    Param a("a", random_tensor(3, 4, rng));
    Param b("b", random_tensor(4, 5, rng));
    Param c("c", random_tensor(3, 5, rng));
    Param bias("bias", random_tensor(1, 5, rng));
    Param s("s", random_tensor(1, 1, rng));
    std::vector<int> labels;
    for (int r = 0; r < 3; ++r) labels.push_back(rng.uniform_int(5));
    Tensor mask(3, 5);
    for (auto& v : mask.data) v = rng.bernoulli(0.5) ? 1.0 : 0.0;

    Param* ps[] = {&a, &b, &c, &bias, &s};
    auto build = [&](Graph& g) {
      NodeId an = g.param(a);
      NodeId bn = g.param(b);
      NodeId cn = g.param(c);
      NodeId mm = g.matmul(an, bn);                      // matmul
      NodeId withbias = g.add_rowvec(mm, g.param(bias)); // bias broadcast
      NodeId act = g.tanh(withbias);                     // tanh
      NodeId gate = g.sigmoid(cn);                       // sigmoid
      NodeId prod = g.mul(act, gate);                    // elementwise mul
      NodeId masked = g.mul(prod, g.constant(mask));     // dropout-by-mask
      NodeId rl = g.relu(g.add(masked, cn));             // relu + add
      NodeId cat = g.concat_cols({rl, act});             // concat
      NodeId sl = g.slice_cols(cat, 2, 8);               // slice
      NodeId sc = g.scalar_mul(g.scale(sl, 0.7), g.param(s));  // scale + scalar node
      NodeId ce = g.softmax_xent_sum(g.slice_cols(sc, 0, 5), labels);
      return g.add(ce, g.scale(g.sum(sc), 0.1));
    };
    double err = grad_check(build, ps);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("embed_rows gathers and scatters") {
  Rng rng(77);
  Param table("table", random_tensor(6, 3, rng));
  Param* ps[] = {&table};
  auto build = [&](Graph& g) {
    NodeId x = g.embed_rows(table, {1, 4, 1});
    return g.sum(g.tanh(x));
  };
  double err = grad_check(build, ps);
  CHECK(err < 1e-4);

  // duplicate ids accumulate both rows' grads
  Graph g;
  table.zero_grad();
  NodeId loss = g.sum(g.embed_rows(table, {2, 2}));
  g.backward(loss);
  CHECK(table.grad.at(2, 0) == 2.0);
  CHECK(table.grad.at(3, 0) == 0.0);
}

TEST_CASE("two identical forward passes are bit-identical") {
  auto run = [](uint64_t seed) {
    Rng rng(seed);
    Param a("a", random_tensor(4, 4, rng));
    Param b("b", random_tensor(4, 4, rng));
    Graph g;
    NodeId y = g.tanh(g.matmul(g.param(a), g.param(b)));
    return g.value(y);
  };
  Tensor t1 = run(99);
  Tensor t2 = run(99);
  CHECK(testutil::bit_identical(t1, t2));
}

TEST_CASE("random 2-layer MLP gradient vs central finite differences") {
  Rng rng(2024);
  for (int trial = 0; trial < 5; ++trial) {
    Param w1("w1", random_tensor(6, 8, rng));
    Param b1("b1", random_tensor(1, 8, rng, 0.1));
    Param w2("w2", random_tensor(8, 4, rng));
    Param b2("b2", random_tensor(1, 4, rng, 0.1));
    Tensor input = random_tensor(3, 6, rng);
    std::vector<int> labels = {rng.uniform_int(4), rng.uniform_int(4), rng.uniform_int(4)};
    Param* ps[] = {&w1, &b1, &w2, &b2};
    auto build = [&](Graph& g) {
      NodeId h = g.tanh(g.add_rowvec(g.matmul(g.constant(input), g.param(w1)), g.param(b1)));
      NodeId logits = g.add_rowvec(g.matmul(h, g.param(w2)), g.param(b2));
      return g.softmax_xent_sum(logits, labels);
    };
    CHECK(grad_check(build, ps) < 1e-4);
  }
}

TEST_CASE("gradient clipping caps the global norm") {
  Param a("a", Tensor::row({1.0, 2.0}));
  a.grad = Tensor::row({30.0, 40.0});
  Param* ps[] = {&a};
  CHECK(global_grad_norm(ps) == doctest::Approx(50.0));
  clip_global_norm(ps, 5.0);
  CHECK(global_grad_norm(ps) == doctest::Approx(5.0).epsilon(1e-12));
  // already small: untouched
  clip_global_norm(ps, 5.0);
  CHECK(global_grad_norm(ps) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("finite checker flags NaN") {
  Graph g;
  Tensor bad(1, 2);
  bad.data[1] = std::nan("");
  g.constant(bad);
  CHECK_THROWS_AS(g.assert_finite(), std::runtime_error);
}

TEST_CASE("adam reduces a quadratic") {
  Param x("x", Tensor::row({5.0, -3.0}));
  Adam opt({&x}, 0.05);
  for (int i = 0; i < 500; ++i) {
    x.zero_grad();
    Graph g;
    NodeId xn = g.param(x);
    NodeId loss = g.sum(g.mul(xn, xn));
    g.backward(loss);
    opt.step();
  }
  CHECK(std::abs(x.value.data[0]) < 1e-2);
  CHECK(std::abs(x.value.data[1]) < 1e-2);
}
