#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "denselm/flops.h"
#include "denselm/prune.h"
#include "denselm/rng.h"
#include "support/synthetic.h"

using namespace denselm;
using testsupport::make_context_task;

namespace {

TaggerModel context_tagger(const testsupport::ContextTask& task, bool use_lm,
                           uint64_t seed) {
  TaggerDims dims;
  dims.char_embed = 6;
  dims.char_hidden = 8;
  dims.word_embed = 8;  // matches the task's r_dim
  dims.word_hidden = 12;
  std::vector<std::vector<std::string>> wc;
  for (const auto& s : task.train) wc.push_back(s.words);
  Rng rng = Rng(seed).split("ctx.tagger");
  // min_count 2 sends the one-shot marker forms to <unk>
  return TaggerModel(dims, CharVocab::build(task.train), build_vocab(wc, 2),
                     LabelSet::build(task.train), use_lm, rng);
}

PruneConfig quick_prune_config(double lambda0, int epochs, uint64_t seed) {
  PruneConfig pc;
  pc.reg.kind = RegKind::kR3;
  pc.reg.lambda0 = lambda0;
  pc.reg.lambda1 = 2;
  pc.epochs = epochs;
  pc.batch = 5;
  pc.dropout = 0.25;
  pc.seed = seed;
  return pc;
}

}  // namespace

TEST_CASE("R0 is rejected as an optimization objective") {
  auto task = make_context_task(3, 8, 4);
  TaggerModel m = context_tagger(task, true, 4);
  PruneConfig pc = quick_prune_config(0.1, 1, 5);
  pc.reg.kind = RegKind::kR0;
  CHECK_THROWS_AS(prune(m, task.embedder, task.train, task.dev, pc),
                  std::invalid_argument);
}

TEST_CASE("lambda0 = 0 leaves z at exactly one") {
  auto task = make_context_task(6, 20, 6);
  TaggerModel m = context_tagger(task, true, 7);
  TaggerTrainConfig tc;
  tc.epochs = 2;
  tc.batch = 5;
  tc.seed = 8;
  train_tagger(m, &task.embedder, task.train, task.dev, tc);
  PruneConfig pc = quick_prune_config(0.0, 2, 9);
  auto report = prune(m, task.embedder, task.train, task.dev, pc);
  CHECK(task.embedder.fwd.stack.num_layers() == 6);
  CHECK(task.embedder.bwd.stack.num_layers() == 6);
  for (double z : report.rounded_fwd.z) CHECK(z == 1.0);
  for (double z : report.rounded_bwd.z) CHECK(z == 1.0);
  CHECK(report.flops_after == report.flops_before);
}

TEST_CASE("constructed task: selection finds the signal layers") {
  auto task = make_context_task(42, 300, 60, 8, 8, 8);
  TaggerModel tag = context_tagger(task, true, 7);
  TaggerTrainConfig tc;
  tc.epochs = 12;
  tc.batch = 5;
  tc.dropout = 0.25;
  tc.seed = 3;
  auto trained = train_tagger(tag, &task.embedder, task.train, task.dev, tc);
  double f1_unpruned = trained.best_dev_f1;
  CHECK(f1_unpruned > 0.9);

  SUBCASE("full run hits the signal layers and stays binary") {
    auto report = prune(tag, task.embedder, task.train, task.dev,
                        quick_prune_config(0.1, 12, 9));
    // final z binary within 1e-2
    CHECK(report.binariness_gap <= 1e-2);
    CHECK(report.binarized_cleanly);
    // signal layers survive, dead layers go
    CHECK(report.rounded_fwd.z[4] == 1.0);
    CHECK(report.rounded_fwd.z[5] == 1.0);
    CHECK(report.rounded_fwd.l0() == 2);
    CHECK(report.rounded_bwd.l0() <= 2);
    // dev F1 within 2 points of the unpruned model
    CHECK(report.dev_f1_after >= f1_unpruned - 0.02);
    // pruning strictly cuts estimated FLOPs
    CHECK(report.flops_after < 0.6 * report.flops_before);
    // physical deletion happened
    CHECK(task.embedder.fwd.stack.num_layers() == 2);
    CHECK(task.embedder.fwd.stack.layer_manifest == std::vector<int>{4, 5});
    // history CSV carries one row per epoch with z trajectories
    CHECK(report.history.size() == 12);
    CHECK(report.history_csv().find("z_fwd_5") != std::string::npos);
    // z ended exactly binary, so the masked and the rounded+deleted model
    // score the dev set identically
    CHECK(report.history.back().dev_f1 ==
          doctest::Approx(report.dev_f1_after).epsilon(1e-6));
  }

  SUBCASE("too few steps forces hard rounding with a warning flag") {
    auto report = prune(tag, task.embedder, task.train, task.dev,
                        quick_prune_config(0.1, 2, 9));
    CHECK(report.binariness_gap > 0.1);
    CHECK_FALSE(report.binarized_cleanly);
    CHECK(report.rounded_fwd.is_binary());
    CHECK(report.rounded_bwd.is_binary());
  }
}

TEST_CASE("untrained symmetric LM selects layers uniformly") {
  // with nothing to tell the layers apart, retention frequency across layer
  // indices should be statistically uniform (or degenerate-equal)
  const int L = 4;
  const int runs = 16;
  std::vector<uint64_t> seeds;
  for (int i = 0; i < runs; ++i) seeds.push_back(1000 + static_cast<uint64_t>(i));

  auto corpus = testsupport::capacity_corpus(30, 21);
  auto runner = [&](uint64_t seed) {
    Rng rng(seed);
    Rng rf = rng.split("f");
    Rng rb = rng.split("b");
    Rng rc = rng.split("c");
    std::vector<std::vector<std::string>> wc;
    for (const auto& s : corpus) wc.push_back(s.words);
    Vocab v = build_vocab(wc, 0);
    LmModel fwd(LmDirection::kForward, v, 4, 4, L, 4, rf);
    LmModel bwd(LmDirection::kBackward, v, 4, 4, L, 4, rb);
    ContextEmbedder emb(std::move(fwd), std::move(bwd), 6, rc);

    TaggerDims dims{.char_embed = 4, .char_hidden = 4, .word_embed = 6, .word_hidden = 6};
    Rng trng = rng.split("t");
    TaggerModel tagger(dims, CharVocab::build(corpus), v, LabelSet::build(corpus), true,
                       trng);
    TaggerTrainConfig tc;
    tc.epochs = 2;
    tc.batch = 5;
    tc.seed = seed;
    train_tagger(tagger, &emb, corpus, corpus, tc);
    PruneConfig pc = quick_prune_config(0.3, 6, seed + 7);
    auto rep = prune(tagger, emb, corpus, corpus, pc);
    return std::make_pair(rep.rounded_fwd, rep.rounded_bwd);
  };
  auto pattern = selection_pattern(L, L, seeds, runner);
  CHECK(pattern.runs == runs);

  // pooled chi-square over layer index, df = L-1, critical value at p = 0.01
  std::vector<long> counts(L, 0);
  long total = 0;
  for (int l = 0; l < L; ++l) {
    counts[static_cast<size_t>(l)] = pattern.kept_fwd[static_cast<size_t>(l)] +
                                     pattern.kept_bwd[static_cast<size_t>(l)];
    total += counts[static_cast<size_t>(l)];
  }
  if (total > 0) {
    double e = static_cast<double>(total) / L;
    double stat = 0.0;
    for (long c : counts) stat += (c - e) * (c - e) / e;
    CHECK(stat < 11.345);  // chi-square 0.99 quantile, 3 dof
  }
}

TEST_CASE("selection pattern: degenerate single run gives 0/1 counts") {
  auto pattern = selection_pattern(3, 3, {11}, [&](uint64_t) {
    LayerMask f, b;
    f.z = {1.0, 0.0, 1.0};
    b.z = {0.0, 0.0, 1.0};
    return std::make_pair(f, b);
  });
  CHECK(pattern.runs == 1);
  CHECK(pattern.kept_fwd == std::vector<long>{1, 0, 1});
  CHECK(pattern.kept_bwd == std::vector<long>{0, 0, 1});
  CHECK(pattern.csv().find("fwd,0,1,1") != std::string::npos);
}

TEST_CASE("selection pattern csv frequencies") {
  auto pattern = selection_pattern(2, 2, {1, 2, 3, 4}, [&](uint64_t seed) {
    LayerMask f, b;
    f.z = {seed % 2 ? 1.0 : 0.0, 1.0};
    b.z = {0.0, 0.0};
    return std::make_pair(f, b);
  });
  CHECK(pattern.runs == 4);
  CHECK(pattern.kept_fwd == std::vector<long>{2, 4});
  CHECK(pattern.csv().find("fwd,0,2,0.5") != std::string::npos);
}
