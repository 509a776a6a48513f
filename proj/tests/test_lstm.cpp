#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "denselm/lstm.h"
#include "denselm/rng.h"
#include "support/testutil.h"

using namespace denselm;
using testutil::random_tensor;

namespace {

// Runs one step of a whole stack on plain tensors and returns h_concat.
Tensor run_stack_step(const DenseStack& stack, const Tensor& x,
                      const StackRun::Options& opts, StackState* state = nullptr) {
  Graph g;
  StackRun run(g, stack, opts);
  StackState s = state ? *state : StackState::zeros(stack, x.rows);
  run.reset(s);
  auto step = run.step(g.constant(x));
  if (state) *state = run.detach_state();
  return g.value(step.h_concat);
}

}  // namespace

TEST_CASE("zero weights and state give zero h and c") {
  auto layer = LstmLayer::zeros("l", 3, 2);
  Graph g;
  NodeId x = g.constant(Tensor::row({0.7, -2.0, 5.0}));
  NodeId h0 = g.constant(Tensor(1, 2));
  NodeId c0 = g.constant(Tensor(1, 2));
  auto out = lstm_step(g, 2, g.param(layer.w), g.param(layer.b), x, h0, c0);
  for (double v : g.value(out.h).data) CHECK(v == 0.0);
  for (double v : g.value(out.c).data) CHECK(v == 0.0);
}

TEST_CASE("hidden_dim=1 cell matches scalar hand evaluation") {
  auto layer = LstmLayer::zeros("l", 1, 1);
  // rows: [x, h_prev]; cols: (i, f, g, o)
  layer.w.value = Tensor(2, 4, {0.5, -0.3, 0.8, 0.2,
                                0.1, 0.4, -0.6, 0.9});
  layer.b.value = Tensor(1, 4, {0.05, -0.1, 0.2, 0.3});
  double x = 1.0, hp = 0.0, cp = 0.0;

  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  double gi = sig(0.5 * x + 0.1 * hp + 0.05);
  double gf = sig(-0.3 * x + 0.4 * hp - 0.1);
  double gg = std::tanh(0.8 * x - 0.6 * hp + 0.2);
  double go = sig(0.2 * x + 0.9 * hp + 0.3);
  double c_expect = gf * cp + gi * gg;
  double h_expect = go * std::tanh(c_expect);

  Graph g;
  auto out = lstm_step(g, 1, g.param(layer.w), g.param(layer.b),
                       g.constant(Tensor::row({x})), g.constant(Tensor::row({hp})),
                       g.constant(Tensor::row({cp})));
  CHECK(g.value(out.h).data[0] == doctest::Approx(h_expect).epsilon(1e-14));
  CHECK(g.value(out.c).data[0] == doctest::Approx(c_expect).epsilon(1e-14));
}

TEST_CASE("single LSTM cell step passes finite differences on all params") {
  Rng rng(5);
  LstmLayer layer("l", 3, 4, rng);
  Tensor x = random_tensor(2, 3, rng);
  Tensor h0 = random_tensor(2, 4, rng, 0.5);
  Tensor c0 = random_tensor(2, 4, rng, 0.5);
  Param* ps[] = {&layer.w, &layer.b};
  auto build = [&](Graph& g) {
    auto out = lstm_step(g, 4, g.param(layer.w), g.param(layer.b), g.constant(x),
                         g.constant(h0), g.constant(c0));
    return g.sum(g.mul(out.h, out.h));
  };
  CHECK(grad_check(build, ps) < 1e-4);
}

TEST_CASE("empty stack passes the input through") {
  DenseStack stack;
  stack.embed_dim = 4;
  stack.hidden_dim = 3;
  Tensor x = Tensor::row({1.0, 2.0, 3.0, 4.0});
  Tensor h = run_stack_step(stack, x, {});
  CHECK(testutil::bit_identical(h, x));
}

TEST_CASE("dense concat has embed_dim + L*hidden dims") {
  DenseStack stack;
  stack.embed_dim = 300;
  stack.hidden_dim = 300;
  for (int l = 0; l < 3; ++l) {
    stack.layers.push_back(LstmLayer::zeros("l" + std::to_string(l), 300 + l * 300, 300));
    stack.layer_manifest.push_back(l);
  }
  stack.mask = LayerMask::ones(3);
  CHECK(stack.layers[2].input_dim == 300 + 2 * 300);
  Tensor h = run_stack_step(stack, Tensor(1, 300), {});
  CHECK(h.cols == 1200);
}

TEST_CASE("mask zero yields an exactly zero slice and zero downstream input") {
  Rng rng(11);
  DenseStack stack("s", 5, 4, 3, rng);
  stack.mask.z = {1.0, 0.0, 1.0};
  Tensor x = random_tensor(1, 5, rng);
  Tensor h = run_stack_step(stack, x, {});
  // slice of layer 2 (cols 5+4 .. 5+8) is exactly zero
  for (int cidx = 9; cidx < 13; ++cidx) CHECK(h.at(0, cidx) == 0.0);

  // identical (to 1e-12) to physically replacing layer 2's output with zeros:
  // zeroing its outgoing weights forces h_2 = 0 at zero state
  DenseStack zeroed = stack;
  zeroed.mask.z = {1.0, 1.0, 1.0};
  zeroed.layers[1].w.value.fill(0.0);
  zeroed.layers[1].b.value.fill(0.0);
  Tensor h2 = run_stack_step(zeroed, x, {});
  CHECK(testutil::max_abs_diff(h, h2) < 1e-12);
}

TEST_CASE("detachability: masking any subset starves no remaining layer") {
  Rng rng(12);
  DenseStack stack("s", 4, 3, 4, rng);
  Tensor x = random_tensor(1, 4, rng);
  for (int subset = 0; subset < 16; ++subset) {
    DenseStack s2 = stack;
    for (int l = 0; l < 4; ++l) s2.mask.z[static_cast<size_t>(l)] = (subset >> l) & 1 ? 0.0 : 1.0;
    Graph g;
    StackRun run(g, s2, {});
    run.reset(StackState::zeros(s2, 1));
    auto step = run.step(g.constant(x));
    for (int l = 0; l < 4; ++l) {
      if (s2.mask.z[static_cast<size_t>(l)] == 1.0) {
        // surviving layers still compute nonzero outputs
        double mx = 0.0;
        for (double v : g.value(step.layer_out[static_cast<size_t>(l)]).data) {
          mx = std::max(mx, std::abs(v));
        }
        CHECK(mx > 0.0);
      }
    }
  }
}

TEST_CASE("layerwise dropout limits") {
  Rng rng(13);
  auto none = layerwise_dropout_mask(6, 0.0, rng);
  for (auto d : none) CHECK(d == 0);
  auto all = layerwise_dropout_mask(6, 1.0, rng);
  for (auto d : all) CHECK(d == 1);

  DenseStack stack("s", 4, 3, 3, rng);
  Tensor x = random_tensor(1, 4, rng);
  // p=0 mask: output identical to no-dropout forward
  StackRun::Options opts;
  opts.dropped = &none;
  std::vector<uint8_t> none3(none.begin(), none.begin() + 3);
  opts.dropped = &none3;
  Tensor with = run_stack_step(stack, x, opts);
  Tensor without = run_stack_step(stack, x, {});
  CHECK(testutil::bit_identical(with, without));

  // p=1: every layer sees only x_t, so each layer behaves as if it were
  // first in the stack; h_concat still carries all layers' outputs.
  std::vector<uint8_t> all3 = {1, 1, 1};
  opts.dropped = &all3;
  Tensor dropped_h = run_stack_step(stack, x, opts);
  for (int l = 0; l < 3; ++l) {
    // layer l with dense input [x, 0, .., 0] equals a fresh layer reading x only
    Graph g;
    NodeId xin = g.constant(x);
    std::vector<NodeId> parts{xin};
    for (int j = 0; j < l; ++j) parts.push_back(g.constant(Tensor(1, 3)));
    NodeId full_in = parts.size() == 1 ? xin : g.concat_cols(parts);
    auto out = lstm_step(g, 3, g.constant(stack.layers[static_cast<size_t>(l)].w.value),
                         g.constant(stack.layers[static_cast<size_t>(l)].b.value), full_in,
                         g.constant(Tensor(1, 3)), g.constant(Tensor(1, 3)));
    for (int k = 0; k < 3; ++k) {
      CHECK(dropped_h.at(0, 4 + l * 3 + k) == doctest::Approx(g.value(out.h).data[static_cast<size_t>(k)]).epsilon(1e-14));
    }
  }
}

TEST_CASE("empirical drop rate within 0.5 +- 0.02 on 10000 batches") {
  Rng rng(99);
  const int layers = 10, batches = 10000;
  std::vector<long> hits(layers, 0);
  for (int i = 0; i < batches; ++i) {
    auto m = layerwise_dropout_mask(layers, 0.5, rng);
    for (int l = 0; l < layers; ++l) hits[static_cast<size_t>(l)] += m[static_cast<size_t>(l)];
  }
  for (long h : hits) {
    double rate = static_cast<double>(h) / batches;
    CHECK(rate == doctest::Approx(0.5).epsilon(0.04));
    CHECK(std::abs(rate - 0.5) < 0.02);
  }
}

TEST_CASE("fixed dropout mask is deterministic and differentiable") {
  Rng rng(21);
  DenseStack stack("s", 3, 2, 3, rng);
  std::vector<uint8_t> dropped = {0, 1, 0};
  Tensor x = random_tensor(1, 3, rng);

  StackRun::Options opts;
  opts.dropped = &dropped;
  Tensor a = run_stack_step(stack, x, opts);
  Tensor b = run_stack_step(stack, x, opts);
  CHECK(testutil::bit_identical(a, b));

  auto params = stack.params();
  auto build = [&](Graph& g) {
    StackRun run(g, stack, opts);
    run.reset(StackState::zeros(stack, 1));
    auto step = run.step(g.constant(x));
    return g.sum(g.tanh(step.h_concat));
  };
  CHECK(grad_check(build, params) < 1e-4);
}

TEST_CASE("dropped layer still reaches the head but not later layers") {
  Rng rng(31);
  DenseStack stack("s", 3, 2, 3, rng);
  std::vector<uint8_t> dropped = {0, 1, 0};
  StackRun::Options opts;
  opts.dropped = &dropped;
  Tensor x = random_tensor(1, 3, rng);

  Tensor base = run_stack_step(stack, x, opts);
  DenseStack perturbed = stack;
  perturbed.layers[1].w.value.data[0] += 0.5;
  Tensor pert = run_stack_step(perturbed, x, opts);

  // layer 2's own slice (head input) moved...
  double midslice = 0.0;
  for (int cidx = 3 + 2; cidx < 3 + 4; ++cidx) midslice = std::max(midslice, std::abs(base.at(0, cidx) - pert.at(0, cidx)));
  CHECK(midslice > 0.0);
  // ...but layers 1 and 3 are bit-identical
  for (int cidx = 0; cidx < 3 + 2; ++cidx) CHECK(base.at(0, cidx) == pert.at(0, cidx));
  for (int cidx = 3 + 4; cidx < 3 + 6; ++cidx) CHECK(base.at(0, cidx) == pert.at(0, cidx));
}

TEST_CASE("state carries across steps") {
  Rng rng(41);
  DenseStack stack("s", 3, 2, 2, rng);
  Tensor x1 = random_tensor(1, 3, rng);
  Tensor x2 = random_tensor(1, 3, rng);

  // two steps in one graph
  Graph g;
  StackRun run(g, stack, {});
  run.reset(StackState::zeros(stack, 1));
  run.step(g.constant(x1));
  auto s2 = run.step(g.constant(x2));
  Tensor joint = g.value(s2.h_concat);

  // same two steps across separate graphs with detached state
  StackState st = StackState::zeros(stack, 1);
  run_stack_step(stack, x1, {}, &st);
  Tensor split = run_stack_step(stack, x2, {}, &st);
  CHECK(testutil::max_abs_diff(joint, split) < 1e-15);
}
