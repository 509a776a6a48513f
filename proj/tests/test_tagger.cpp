#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "denselm/rng.h"
#include "denselm/tagger.h"
#include "support/synthetic.h"
#include "support/testutil.h"

using namespace denselm;

namespace {

TaggerModel toy_tagger(const std::vector<TaggedSentence>& train, bool use_lm,
                       uint64_t seed, int word_min_count = 0, int embed_dim = 6) {
  TaggerDims dims;
  dims.char_embed = 4;
  dims.char_hidden = 5;
  dims.word_embed = embed_dim;
  dims.word_hidden = 6;
  std::vector<std::vector<std::string>> word_corpus;
  for (const auto& s : train) word_corpus.push_back(s.words);
  Rng rng = Rng(seed).split("tagger.init");
  return TaggerModel(dims, CharVocab::build(train), build_vocab(word_corpus, word_min_count),
                     LabelSet::build(train), use_lm, rng);
}

}  // namespace

TEST_CASE("char features: one vector per word, read at the trailing space") {
  std::vector<TaggedSentence> train = {{{"ab", "c"}, {"O", "O"}}};
  TaggerModel m = toy_tagger(train, false, 1);
  TaggedSentence single{{"ab"}, {"O"}};
  Tensor f = char_features(m, single);
  CHECK(f.rows == 1);
  CHECK(f.cols == m.dims.word_embed);

  // zero char path: c_t = 0, so c*_t is exactly the projection bias
  TaggerModel z = toy_tagger(train, false, 2);
  z.char_fwd.w.value.fill(0.0);
  z.char_fwd.b.value.fill(0.0);
  z.char_bwd.w.value.fill(0.0);
  z.char_bwd.b.value.fill(0.0);
  for (int c = 0; c < z.b_char_proj.value.cols; ++c) z.b_char_proj.value.at(0, c) = 0.1 * c;
  Tensor fz = char_features(z, single);
  for (int c = 0; c < fz.cols; ++c) CHECK(fz.at(0, c) == doctest::Approx(0.1 * c).epsilon(1e-12));
}

TEST_CASE("empty sentence is an error") {
  std::vector<TaggedSentence> train = {{{"a"}, {"O"}}};
  TaggerModel m = toy_tagger(train, false, 3);
  TaggedSentence empty;
  CHECK_THROWS_AS(char_features(m, empty), std::invalid_argument);
  Graph g;
  CHECK_THROWS_AS(tagger_emissions(g, m, empty, {}), std::invalid_argument);
}

TEST_CASE("gradient check through the whole NoLM tagger") {
  std::vector<TaggedSentence> train = {{{"ab", "c", "ab"}, {"B-X", "I-X", "E-X"}},
                                       {{"d"}, {"O"}}};
  TaggerModel m = toy_tagger(train, false, 4);
  TaggedSentence s = train[0];
  auto params = m.params(nullptr);
  auto build = [&](Graph& g) { return tagger_loss(g, m, s, {}); };
  // eps 1e-4: the deep path makes 1e-5 probes roundoff-dominated
  CHECK(grad_check(build, params, 1e-4) < 1e-4);
}

TEST_CASE("gradient check through the LM-augmented tagger including W_cr") {
  auto task = testsupport::make_context_task(77, 4, 2, 4, 6, 6);
  TaggerModel m = toy_tagger(task.train, true, 5);
  TaggedSentence s = task.train[0];
  Tensor feats = task.embedder.lm_feature_rows(s.words);
  TaggerGraphOpts opts;
  opts.embedder = &task.embedder;
  opts.lm_feats = &feats;
  auto params = m.params(&task.embedder);
  auto build = [&](Graph& g) { return tagger_loss(g, m, s, opts); };
  CHECK(grad_check(build, params, 1e-4) < 1e-4);
}

TEST_CASE("gradient check through the char path alone") {
  std::vector<TaggedSentence> train = {{{"abc", "de"}, {"O", "O"}}};
  TaggerModel m = toy_tagger(train, false, 6);
  TaggedSentence s = train[0];
  Param* ps[] = {&m.char_embed, &m.char_fwd.w, &m.char_fwd.b, &m.char_bwd.w,
                 &m.char_bwd.b, &m.w_char_proj, &m.b_char_proj};
  auto build = [&](Graph& g) {
    TaggerGraphOpts opts;
    auto out = tagger_emissions(g, m, s, opts);
    NodeId total = out.emissions[0];
    for (size_t t = 1; t < out.emissions.size(); ++t) total = g.add(total, out.emissions[t]);
    return g.sum(g.tanh(total));
  };
  CHECK(grad_check(build, ps) < 1e-4);
}

TEST_CASE("dropout masks are deterministic under a fixed rng") {
  std::vector<TaggedSentence> train = {{{"a", "b"}, {"O", "S-X"}}};
  TaggerModel m = toy_tagger(train, false, 7);
  auto run = [&](uint64_t seed) {
    Rng rng(seed);
    Graph g;
    TaggerGraphOpts opts;
    opts.train = true;
    opts.dropout = 0.5;
    opts.dropout_rng = &rng;
    return g.value(tagger_loss(g, m, train[0], opts));
  };
  CHECK(run(9).data[0] == run(9).data[0]);
  // different seeds give different masks almost surely
  CHECK(run(9).data[0] != run(10).data[0]);
}

TEST_CASE("NoLM memorizes a 50-sentence toy corpus") {
  auto corpus = testsupport::capacity_corpus(50, 11);
  TaggerModel m = toy_tagger(corpus, false, 8, 0, 16);
  TaggerTrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch = 2;  // small corpus: keep enough update steps per epoch
  cfg.dropout = 0.1;
  cfg.patience = 50;
  cfg.seed = 12;
  train_tagger(m, nullptr, corpus, corpus, cfg);
  F1Score f = evaluate_tagger(m, nullptr, corpus);
  CHECK(f.f1 > 0.99);
}

TEST_CASE("early stopping returns the best dev checkpoint") {
  auto corpus = testsupport::capacity_corpus(30, 13);
  std::vector<TaggedSentence> dev(corpus.begin() + 20, corpus.end());
  std::vector<TaggedSentence> train(corpus.begin(), corpus.begin() + 20);
  TaggerModel m = toy_tagger(corpus, false, 9);
  TaggerTrainConfig cfg;
  cfg.epochs = 12;
  cfg.batch = 2;
  cfg.patience = 4;
  cfg.seed = 14;
  auto result = train_tagger(m, nullptr, train, dev, cfg);
  for (const auto& log : result.log) CHECK(result.best_dev_f1 >= log.dev_f1);
  // restored weights reproduce the best dev score exactly
  CHECK(evaluate_tagger(m, nullptr, dev).f1 == doctest::Approx(result.best_dev_f1));
}

TEST_CASE("training never touches LM weights") {
  auto task = testsupport::make_context_task(15, 12, 4, 4, 6, 6);
  TaggerModel m = toy_tagger(task.train, true, 10);
  uint64_t before = lm_weight_checksum(task.embedder.fwd) ^
                    lm_weight_checksum(task.embedder.bwd);
  TaggerTrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 16;
  train_tagger(m, &task.embedder, task.train, task.dev, cfg);
  uint64_t after = lm_weight_checksum(task.embedder.fwd) ^
                   lm_weight_checksum(task.embedder.bwd);
  CHECK(before == after);
}

TEST_CASE("training replays bit-identically under one seed") {
  auto corpus = testsupport::capacity_corpus(20, 17);
  TaggerTrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 18;
  auto run = [&]() {
    TaggerModel m = toy_tagger(corpus, false, 11);
    return train_tagger(m, nullptr, corpus, corpus, cfg);
  };
  auto r1 = run();
  auto r2 = run();
  REQUIRE(r1.log.size() == r2.log.size());
  for (size_t i = 0; i < r1.log.size(); ++i) {
    CHECK(r1.log[i].train_loss == r2.log[i].train_loss);
    CHECK(r1.log[i].dev_f1 == r2.log[i].dev_f1);
  }
}

TEST_CASE("pretrained word vectors overwrite matching rows") {
  std::vector<TaggedSentence> train = {{{"apple", "pie"}, {"O", "O"}}};
  TaggerModel m = toy_tagger(train, false, 19);
  std::string path = "/tmp/denselm_test_vectors.txt";
  {
    std::ofstream out(path);
    out << "apple 1 2 3 4 5 6\n";
    out << "unknowntoken 9 9 9 9 9 9\n";
  }
  m.load_pretrained_words(path);
  int id = m.word_vocab.encode("apple");
  for (int c = 0; c < 6; ++c) CHECK(m.word_embed.value.at(id, c) == c + 1.0);
  std::remove(path.c_str());
}
