#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "denselm/checkpoint.h"
#include "denselm/config.h"
#include "denselm/conll.h"
#include "denselm/flops.h"
#include "denselm/prune.h"
#include "denselm/rng.h"

namespace fs = std::filesystem;
using namespace denselm;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--config", args->config_path, "flat key=value config file");
  cmd->add_option("--set", args->overrides, "config override key=value (repeatable)");
  cmd->add_option("--out-dir", args->out_dir, "output directory");
}

RunConfig load_config(const CommonArgs& args) {
  RunConfig cfg = args.config_path.empty() ? RunConfig{}
                                           : RunConfig::from_file(resolve_data_path(args.config_path));
  for (const auto& kv : args.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::runtime_error("--set needs key=value, got " + kv);
    cfg.apply(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

void finish_manifest(RunManifest& man, const CommonArgs& args) {
  fs::create_directories(args.out_dir);
  man.write(args.out_dir + "/manifest.json");
}

RegKind parse_reg(const std::string& name) {
  if (name == "R1") return RegKind::kR1;
  if (name == "R2") return RegKind::kR2;
  if (name == "R3") return RegKind::kR3;
  if (name == "R0") return RegKind::kR0;
  throw std::runtime_error("unknown regularizer kind: " + name);
}

// Deterministic head/tail split of the corpus lines.
void split_dev(const std::vector<std::vector<std::string>>& lines, double dev_fraction,
               std::vector<std::vector<std::string>>* train,
               std::vector<std::vector<std::string>>* dev) {
  size_t n_dev = static_cast<size_t>(static_cast<double>(lines.size()) * dev_fraction);
  n_dev = std::max<size_t>(1, std::min(lines.size() - 1, n_dev));
  train->assign(lines.begin(), lines.end() - static_cast<long>(n_dev));
  dev->assign(lines.end() - static_cast<long>(n_dev), lines.end());
}

int cmd_build_vocab(const CommonArgs& common, const std::string& corpus) {
  RunConfig cfg = load_config(common);
  std::string path = resolve_data_path(corpus);
  Vocab v = build_vocab_file(path, cfg.min_count);
  fs::create_directories(common.out_dir);
  std::string out = common.out_dir + "/vocab.txt";
  std::ofstream os(out);
  for (const auto& t : v.id_to_token) os << t << "\n";
  std::cout << "vocab size " << v.size() << " (min_count " << cfg.min_count << ") -> "
            << out << "\n";

  RunManifest man;
  man.command = "build-vocab";
  man.config = cfg;
  man.input_hashes["corpus"] = file_hash(path);
  man.outputs = {out};
  man.metrics["vocab_size"] = std::to_string(v.size());
  finish_manifest(man, common);
  return 0;
}

int train_one_direction(LmModel& model, const std::vector<std::vector<std::string>>& train,
                        const std::vector<std::vector<std::string>>& dev,
                        const RunConfig& cfg, const std::string& out_dir,
                        const std::string& tag, RunManifest& man) {
  auto train_stream = lm_stream(model.vocab, train, model.direction);
  auto dev_stream = lm_stream(model.vocab, dev, model.direction);
  LmConfig lm_cfg;
  lm_cfg.unroll = cfg.lm_unroll;
  lm_cfg.batch = cfg.lm_batch;
  lm_cfg.lr = cfg.lm_lr;
  lm_cfg.adam_beta1 = cfg.adam_beta1;
  lm_cfg.adam_beta2 = cfg.adam_beta2;
  lm_cfg.adam_eps = cfg.adam_eps;
  lm_cfg.clip = cfg.clip;
  lm_cfg.layer_dropout = cfg.layer_dropout;
  lm_cfg.epochs = cfg.lm_epochs;
  lm_cfg.seed = cfg.seed;

  std::string csv_path = out_dir + "/ppl_" + tag + ".csv";
  std::ofstream csv(csv_path);
  csv << "epoch,train_nll,dev_ppl\n";
  csv.precision(17);
  auto result = train_lm(model, train_stream, dev_stream, lm_cfg,
                         [&](const LmModel&, const LmEpochLog& log) {
                           csv << log.epoch << ',' << log.train_nll << ',' << log.dev_ppl
                               << "\n";
                           std::cerr << tag << " epoch " << log.epoch << " train nll "
                                     << log.train_nll << " dev ppl " << log.dev_ppl << "\n";
                         });
  std::string ckpt = out_dir + "/lm_" + tag + ".ckpt";
  save_lm(ckpt, model, cfg.seed);
  man.outputs.push_back(ckpt);
  man.outputs.push_back(csv_path);
  man.metrics["best_dev_ppl_" + tag] = std::to_string(result.best_dev_ppl);
  man.metrics["best_epoch_" + tag] = std::to_string(result.best_epoch);
  return 0;
}

int cmd_train_lm(const CommonArgs& common, const std::string& corpus,
                 const std::string& dev_path, const std::string& direction) {
  RunConfig cfg = load_config(common);
  std::string path = resolve_data_path(corpus);
  auto lines = read_corpus_lines(path);
  std::vector<std::vector<std::string>> train, dev;
  if (dev_path.empty()) {
    split_dev(lines, cfg.lm_dev_fraction, &train, &dev);
  } else {
    train = lines;
    dev = read_corpus_lines(resolve_data_path(dev_path));
  }
  Vocab vocab = build_vocab(train, cfg.min_count);
  std::cout << "corpus " << train.size() << " train / " << dev.size()
            << " dev sentences, vocab " << vocab.size() << "\n";

  fs::create_directories(common.out_dir);
  RunManifest man;
  man.command = "train-lm";
  man.config = cfg;
  man.input_hashes["corpus"] = file_hash(path);
  if (!dev_path.empty()) man.input_hashes["dev"] = file_hash(resolve_data_path(dev_path));

  double fwd_ppl = 0.0, bwd_ppl = 0.0;
  if (direction == "forward" || direction == "both") {
    Rng rng = Rng(cfg.seed).split("lm.fwd.init");
    LmModel m(LmDirection::kForward, vocab, cfg.lm_embed, cfg.lm_hidden, cfg.lm_layers,
              cfg.lm_proj, rng);
    m.stack.layer_dropout_p = cfg.layer_dropout;
    train_one_direction(m, train, dev, cfg, common.out_dir, "forward", man);
    fwd_ppl = std::stod(man.metrics["best_dev_ppl_forward"]);
  }
  if (direction == "backward" || direction == "both") {
    Rng rng = Rng(cfg.seed).split("lm.bwd.init");
    LmModel m(LmDirection::kBackward, vocab, cfg.lm_embed, cfg.lm_hidden, cfg.lm_layers,
              cfg.lm_proj, rng);
    m.stack.layer_dropout_p = cfg.layer_dropout;
    train_one_direction(m, train, dev, cfg, common.out_dir, "backward", man);
    bwd_ppl = std::stod(man.metrics["best_dev_ppl_backward"]);
  }
  if (direction == "both") {
    double avg = averaged_perplexity(fwd_ppl, bwd_ppl);
    man.metrics["avg_dev_ppl"] = std::to_string(avg);
    std::cout << "averaged dev perplexity (fwd+bwd)/2: " << avg << "\n";
  }
  finish_manifest(man, common);
  return 0;
}

ContextEmbedder load_embedder(const std::string& fwd_path, const std::string& bwd_path) {
  ContextEmbedder emb;
  emb.fwd = load_lm(resolve_data_path(fwd_path));
  emb.bwd = load_lm(resolve_data_path(bwd_path));
  if (emb.fwd.vocab.hash() != emb.bwd.vocab.hash()) {
    throw std::runtime_error("forward/backward LM checkpoints use different vocabularies");
  }
  return emb;
}

int cmd_train_tagger(const CommonArgs& common, const std::string& train_path,
                     const std::string& dev_path, const std::string& lm_fwd,
                     const std::string& lm_bwd, const std::string& vectors,
                     bool to_bioes_flag) {
  RunConfig cfg = load_config(common);
  auto train = read_conll(resolve_data_path(train_path), to_bioes_flag);
  std::vector<TaggedSentence> dev;
  if (dev_path.empty()) {
    // mirror the held-out sampling used for corpora that ship without a dev set
    Rng rng = Rng(cfg.seed).split("dev.sample");
    std::vector<size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    size_t n_dev = std::min<size_t>(static_cast<size_t>(cfg.dev_sample), train.size() / 5);
    n_dev = std::max<size_t>(1, std::min(n_dev, train.size() - 1));
    std::vector<TaggedSentence> new_train;
    std::vector<bool> is_dev(train.size(), false);
    for (size_t i = 0; i < n_dev; ++i) is_dev[order[i]] = true;
    for (size_t i = 0; i < train.size(); ++i) {
      (is_dev[i] ? dev : new_train).push_back(train[i]);
    }
    train = std::move(new_train);
  } else {
    dev = read_conll(resolve_data_path(dev_path), to_bioes_flag);
  }
  std::cout << train.size() << " train / " << dev.size() << " dev sentences\n";

  const bool use_lm = !lm_fwd.empty();
  ContextEmbedder emb;
  if (use_lm) {
    emb = load_embedder(lm_fwd, lm_bwd);
    Rng rng = Rng(cfg.seed).split("w_cr.init");
    emb.r_dim = cfg.word_embed;
    emb.w_cr = Param("w_cr", Tensor::glorot(emb.feature_dim(), emb.r_dim, rng));
    emb.b_cr = Param("b_cr", Tensor(1, emb.r_dim));
  }

  TaggerDims dims{cfg.char_embed, cfg.char_hidden, cfg.word_embed, cfg.word_hidden};
  std::vector<std::vector<std::string>> wc;
  for (const auto& s : train) wc.push_back(s.words);
  Rng rng = Rng(cfg.seed).split("tagger.init");
  TaggerModel tagger(dims, CharVocab::build(train), build_vocab(wc, cfg.word_min_count),
                     LabelSet::build(train), use_lm, rng);
  if (!vectors.empty()) tagger.load_pretrained_words(resolve_data_path(vectors));

  TaggerTrainConfig tc;
  tc.epochs = cfg.tagger_epochs;
  tc.batch = cfg.tagger_batch;
  tc.momentum = cfg.momentum;
  tc.eta0 = cfg.eta0;
  tc.rho = cfg.rho;
  tc.dropout = cfg.dropout;
  tc.clip = cfg.clip;
  tc.patience = cfg.patience;
  tc.seed = cfg.seed;

  fs::create_directories(common.out_dir);
  std::string csv_path = common.out_dir + "/f1_log.csv";
  std::ofstream csv(csv_path);
  csv << "epoch,train_loss,dev_f1\n";
  csv.precision(17);
  auto result = train_tagger(tagger, use_lm ? &emb : nullptr, train, dev, tc,
                             [&](const TaggerEpochLog& log) {
                               csv << log.epoch << ',' << log.train_loss << ','
                                   << log.dev_f1 << "\n";
                               std::cerr << "epoch " << log.epoch << " loss "
                                         << log.train_loss << " dev F1 " << log.dev_f1
                                         << "\n";
                             });

  std::string ckpt = common.out_dir + "/tagger.ckpt";
  save_tagger(ckpt, tagger, use_lm ? &emb : nullptr, cfg.seed);
  // report the dev F1 of the saved artifact, not the in-memory one
  TaggerModel reloaded = load_tagger(ckpt, use_lm ? &emb : nullptr);
  double final_f1 = evaluate_tagger(reloaded, use_lm ? &emb : nullptr, dev).f1;
  std::cout << "best epoch " << result.best_epoch << ", dev F1 of saved checkpoint "
            << final_f1 << "\n";

  RunManifest man;
  man.command = "train-tagger";
  man.config = cfg;
  man.input_hashes["train"] = file_hash(resolve_data_path(train_path));
  if (!dev_path.empty()) man.input_hashes["dev"] = file_hash(resolve_data_path(dev_path));
  if (use_lm) {
    man.input_hashes["lm_fwd"] = file_hash(resolve_data_path(lm_fwd));
    man.input_hashes["lm_bwd"] = file_hash(resolve_data_path(lm_bwd));
  }
  man.outputs = {ckpt, csv_path};
  man.metrics["best_epoch"] = std::to_string(result.best_epoch);
  man.metrics["dev_f1"] = std::to_string(final_f1);
  finish_manifest(man, common);
  return 0;
}

int cmd_prune(const CommonArgs& common, const std::string& tagger_path,
              const std::string& lm_fwd, const std::string& lm_bwd,
              const std::string& train_path, const std::string& dev_path,
              bool to_bioes_flag, int pattern_seeds) {
  RunConfig cfg = load_config(common);
  auto train = read_conll(resolve_data_path(train_path), to_bioes_flag);
  auto dev = read_conll(resolve_data_path(dev_path), to_bioes_flag);

  PruneConfig pc;
  pc.reg.kind = parse_reg(cfg.reg_kind);
  pc.reg.lambda0 = cfg.lambda0;
  pc.reg.lambda1 = cfg.lambda1;
  pc.epochs = cfg.prune_epochs;
  pc.batch = cfg.tagger_batch;
  pc.momentum = cfg.momentum;
  pc.eta0 = cfg.eta0;
  pc.rho = cfg.rho;
  pc.dropout = cfg.dropout;
  pc.clip = cfg.clip;
  pc.tie_masks = cfg.tie_masks;
  pc.seed = cfg.seed;
  pc.chars_per_word = cfg.chars_per_word;

  fs::create_directories(common.out_dir);
  RunManifest man;
  man.command = "prune";
  man.config = cfg;
  man.input_hashes["tagger"] = file_hash(resolve_data_path(tagger_path));
  man.input_hashes["lm_fwd"] = file_hash(resolve_data_path(lm_fwd));
  man.input_hashes["lm_bwd"] = file_hash(resolve_data_path(lm_bwd));
  man.input_hashes["train"] = file_hash(resolve_data_path(train_path));
  man.input_hashes["dev"] = file_hash(resolve_data_path(dev_path));

  if (pattern_seeds > 0) {
    std::vector<uint64_t> seeds;
    for (int i = 0; i < pattern_seeds; ++i) seeds.push_back(cfg.seed + static_cast<uint64_t>(i));
    int lf = 0, lb = 0;
    auto runner = [&](uint64_t seed) {
      ContextEmbedder emb = load_embedder(lm_fwd, lm_bwd);
      TaggerModel tagger = load_tagger(resolve_data_path(tagger_path), &emb);
      PruneConfig run_pc = pc;
      run_pc.seed = seed;
      auto rep = prune(tagger, emb, train, dev, run_pc);
      return std::make_pair(rep.rounded_fwd, rep.rounded_bwd);
    };
    {
      ContextEmbedder probe = load_embedder(lm_fwd, lm_bwd);
      lf = probe.fwd.stack.num_layers();
      lb = probe.bwd.stack.num_layers();
    }
    auto pattern = selection_pattern(lf, lb, seeds, runner);
    std::string csv_path = common.out_dir + "/selection_pattern.csv";
    std::ofstream(csv_path) << pattern.csv();
    std::cout << pattern.csv();
    man.outputs = {csv_path};
    finish_manifest(man, common);
    return 0;
  }

  ContextEmbedder emb = load_embedder(lm_fwd, lm_bwd);
  TaggerModel tagger = load_tagger(resolve_data_path(tagger_path), &emb);
  auto report = prune(tagger, emb, train, dev, pc);
  if (!report.binarized_cleanly) {
    std::cerr << "warning: z failed to reach near-binary (gap " << report.binariness_gap
              << "); hard rounding applied\n";
  }

  std::string fwd_out = common.out_dir + "/lm_forward_pruned.ckpt";
  std::string bwd_out = common.out_dir + "/lm_backward_pruned.ckpt";
  std::string tag_out = common.out_dir + "/tagger_pruned.ckpt";
  save_lm(fwd_out, emb.fwd, cfg.seed);
  save_lm(bwd_out, emb.bwd, cfg.seed);
  save_tagger(tag_out, tagger, &emb, cfg.seed);
  std::string hist_path = common.out_dir + "/prune_history.csv";
  std::ofstream(hist_path) << report.history_csv();
  std::string sum_path = common.out_dir + "/prune_summary.txt";
  std::ofstream(sum_path) << report.summary();
  std::cout << report.summary();

  man.outputs = {fwd_out, bwd_out, tag_out, hist_path, sum_path};
  man.metrics["dev_f1_before"] = std::to_string(report.dev_f1_before);
  man.metrics["dev_f1_after"] = std::to_string(report.dev_f1_after);
  man.metrics["flops_before"] = std::to_string(report.flops_before);
  man.metrics["flops_after"] = std::to_string(report.flops_after);
  man.metrics["binarized_cleanly"] = report.binarized_cleanly ? "true" : "false";
  finish_manifest(man, common);
  return 0;
}

int cmd_eval(const CommonArgs& common, const std::string& tagger_path,
             const std::string& lm_fwd, const std::string& lm_bwd,
             const std::string& data_path, bool to_bioes_flag,
             const std::string& pred_out) {
  RunConfig cfg = load_config(common);
  ContextEmbedder emb;
  const bool use_lm = !lm_fwd.empty();
  if (use_lm) emb = load_embedder(lm_fwd, lm_bwd);
  TaggerModel tagger = load_tagger(resolve_data_path(tagger_path), use_lm ? &emb : nullptr);
  auto data = read_conll(resolve_data_path(data_path), to_bioes_flag);

  std::vector<std::vector<std::string>> preds;
  for (const auto& s : data) preds.push_back(predict_labels(tagger, use_lm ? &emb : nullptr, s));
  F1Score f = micro_f1(data, preds);
  std::cout << "P " << f.precision << " R " << f.recall << " F1 " << f.f1 << "\n";
  if (!pred_out.empty()) write_conll(pred_out, data, &preds);

  RunManifest man;
  man.command = "eval";
  man.config = cfg;
  man.input_hashes["tagger"] = file_hash(resolve_data_path(tagger_path));
  man.input_hashes["data"] = file_hash(resolve_data_path(data_path));
  if (!pred_out.empty()) man.outputs.push_back(pred_out);
  man.metrics["precision"] = std::to_string(f.precision);
  man.metrics["recall"] = std::to_string(f.recall);
  man.metrics["f1"] = std::to_string(f.f1);
  finish_manifest(man, common);
  return 0;
}

int cmd_embed(const CommonArgs& common, const std::string& tagger_path,
              const std::string& lm_fwd, const std::string& lm_bwd,
              const std::string& input_path, const std::string& out_path) {
  ContextEmbedder emb = load_embedder(lm_fwd, lm_bwd);
  load_tagger(resolve_data_path(tagger_path), &emb);  // fills W_cr/b_cr
  auto lines = read_corpus_lines(resolve_data_path(input_path));
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out.precision(9);
  for (const auto& words : lines) {
    Tensor r = emb.embed_sequence(words);
    for (int t = 0; t < r.rows; ++t) {
      out << words[static_cast<size_t>(t)];
      for (int c = 0; c < r.cols; ++c) out << ' ' << r.at(t, c);
      out << "\n";
    }
    out << "\n";
  }
  std::cout << "wrote " << out_path << "\n";

  RunManifest man;
  man.command = "embed";
  man.config = load_config(common);
  man.input_hashes["input"] = file_hash(resolve_data_path(input_path));
  man.outputs = {out_path};
  finish_manifest(man, common);
  return 0;
}

int cmd_flops(const CommonArgs& common, const std::string& tagger_path,
              const std::string& lm_fwd, const std::string& lm_bwd, bool include_head) {
  RunConfig cfg = load_config(common);
  ContextEmbedder emb;
  const bool use_lm = !lm_fwd.empty();
  if (use_lm) emb = load_embedder(lm_fwd, lm_bwd);
  TaggerModel tagger;
  bool have_tagger = !tagger_path.empty();
  if (have_tagger) tagger = load_tagger(resolve_data_path(tagger_path), use_lm ? &emb : nullptr);
  FlopsReport r = estimate_flops(use_lm ? &emb : nullptr, have_tagger ? &tagger : nullptr,
                                 cfg.chars_per_word, include_head);
  std::cout << r.pretty();

  RunManifest man;
  man.command = "flops";
  man.config = cfg;
  if (have_tagger) man.input_hashes["tagger"] = file_hash(resolve_data_path(tagger_path));
  if (use_lm) {
    man.input_hashes["lm_fwd"] = file_hash(resolve_data_path(lm_fwd));
    man.input_hashes["lm_bwd"] = file_hash(resolve_data_path(lm_bwd));
  }
  man.metrics["total_macs_per_word"] = std::to_string(r.total());
  finish_manifest(man, common);
  return 0;
}

int cmd_bench(const CommonArgs& common, const std::string& tagger_path,
              const std::string& lm_fwd, const std::string& lm_bwd,
              const std::string& data_path, bool to_bioes_flag, int repeat) {
  RunConfig cfg = load_config(common);
  ContextEmbedder emb;
  const bool use_lm = !lm_fwd.empty();
  if (use_lm) emb = load_embedder(lm_fwd, lm_bwd);
  TaggerModel tagger = load_tagger(resolve_data_path(tagger_path), use_lm ? &emb : nullptr);
  auto data = read_conll(resolve_data_path(data_path), to_bioes_flag);

  long words = 0;
  for (const auto& s : data) words += static_cast<long>(s.words.size());
  auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < repeat; ++r) {
    for (const auto& s : data) predict_labels(tagger, use_lm ? &emb : nullptr, s);
  }
  auto t1 = std::chrono::steady_clock::now();
  double secs = std::chrono::duration<double>(t1 - t0).count();
  double wps = static_cast<double>(words * repeat) / secs;
  double sps = static_cast<double>(data.size()) * repeat / secs;
  std::cout << "decoded " << data.size() << " sentences x" << repeat << " in " << secs
            << " s: " << wps << " words/s, " << sps << " sentences/s\n";

  RunManifest man;
  man.command = "bench";
  man.config = cfg;
  man.input_hashes["data"] = file_hash(resolve_data_path(data_path));
  man.metrics["words_per_s"] = std::to_string(wps);
  man.metrics["sentences_per_s"] = std::to_string(sps);
  finish_manifest(man, common);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"densely connected LM with task-guided layer pruning + BiLSTM-CRF tagger"};
  app.require_subcommand(1);

  CommonArgs c_vocab, c_lm, c_tag, c_prune, c_eval, c_embed, c_flops, c_bench;
  std::string corpus, dev, direction = "both";
  std::string train_path, dev_path, lm_fwd, lm_bwd, vectors, tagger_path, data_path,
      pred_out, input_path, out_path = "embeddings.txt";
  bool to_bioes_flag = false, include_head = false;
  int repeat = 1, pattern_seeds = 0;

  auto* sv = app.add_subcommand("build-vocab", "build a token dictionary from raw text");
  add_common(sv, &c_vocab);
  sv->add_option("--corpus", corpus, "text corpus, one sentence per line")->required();

  auto* sl = app.add_subcommand("train-lm", "train forward/backward LMs");
  add_common(sl, &c_lm);
  sl->add_option("--corpus", corpus, "training text")->required();
  sl->add_option("--dev", dev, "held-out text (default: tail split)");
  sl->add_option("--direction", direction, "forward | backward | both")
      ->check(CLI::IsMember({"forward", "backward", "both"}));

  auto* st = app.add_subcommand("train-tagger", "train the sequence labeler");
  add_common(st, &c_tag);
  st->add_option("--train", train_path, "CoNLL training file")->required();
  st->add_option("--dev", dev_path, "CoNLL dev file (default: sampled from train)");
  st->add_option("--lm-fwd", lm_fwd, "forward LM checkpoint (omit for the word+char baseline)");
  st->add_option("--lm-bwd", lm_bwd, "backward LM checkpoint");
  st->add_option("--vectors", vectors, "pretrained word vectors (token + floats per line)");
  st->add_flag("--to-bioes", to_bioes_flag, "convert BIO gold labels to BIOES");

  auto* sp = app.add_subcommand("prune", "task-guided layer selection on trained checkpoints");
  add_common(sp, &c_prune);
  sp->add_option("--tagger", tagger_path, "tagger checkpoint")->required();
  sp->add_option("--lm-fwd", lm_fwd, "forward LM checkpoint")->required();
  sp->add_option("--lm-bwd", lm_bwd, "backward LM checkpoint")->required();
  sp->add_option("--train", train_path, "CoNLL training file")->required();
  sp->add_option("--dev", dev_path, "CoNLL dev file")->required();
  sp->add_flag("--to-bioes", to_bioes_flag, "convert BIO gold labels to BIOES");
  sp->add_option("--pattern-seeds", pattern_seeds,
                 "run N seeded prunes and write retention frequencies instead");

  auto* se = app.add_subcommand("eval", "micro-F1 of a tagger checkpoint on CoNLL data");
  add_common(se, &c_eval);
  se->add_option("--tagger", tagger_path)->required();
  se->add_option("--lm-fwd", lm_fwd);
  se->add_option("--lm-bwd", lm_bwd);
  se->add_option("--data", data_path)->required();
  se->add_option("--pred-out", pred_out, "write predictions as an extra CoNLL column");
  se->add_flag("--to-bioes", to_bioes_flag);

  auto* sm = app.add_subcommand("embed", "write contextualized token vectors for raw text");
  add_common(sm, &c_embed);
  sm->add_option("--tagger", tagger_path, "tagger checkpoint providing the projection")->required();
  sm->add_option("--lm-fwd", lm_fwd)->required();
  sm->add_option("--lm-bwd", lm_bwd)->required();
  sm->add_option("--input", input_path, "text, one sentence per line")->required();
  sm->add_option("--out", out_path);

  auto* sf = app.add_subcommand("flops", "multiply-add estimate with per-layer breakdown");
  add_common(sf, &c_flops);
  sf->add_option("--tagger", tagger_path);
  sf->add_option("--lm-fwd", lm_fwd);
  sf->add_option("--lm-bwd", lm_bwd);
  sf->add_flag("--include-lm-head", include_head, "count the LM projection head too");

  auto* sb = app.add_subcommand("bench", "wall-clock decoding throughput");
  add_common(sb, &c_bench);
  sb->add_option("--tagger", tagger_path)->required();
  sb->add_option("--lm-fwd", lm_fwd);
  sb->add_option("--lm-bwd", lm_bwd);
  sb->add_option("--data", data_path)->required();
  sb->add_option("--repeat", repeat);
  sb->add_flag("--to-bioes", to_bioes_flag);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sv->parsed()) return cmd_build_vocab(c_vocab, corpus);
    if (sl->parsed()) return cmd_train_lm(c_lm, corpus, dev, direction);
    if (st->parsed()) {
      if (lm_fwd.empty() != lm_bwd.empty()) {
        throw std::runtime_error("--lm-fwd and --lm-bwd must be given together");
      }
      return cmd_train_tagger(c_tag, train_path, dev_path, lm_fwd, lm_bwd, vectors,
                              to_bioes_flag);
    }
    if (sp->parsed()) {
      return cmd_prune(c_prune, tagger_path, lm_fwd, lm_bwd, train_path, dev_path,
                       to_bioes_flag, pattern_seeds);
    }
    if (se->parsed()) {
      return cmd_eval(c_eval, tagger_path, lm_fwd, lm_bwd, data_path, to_bioes_flag, pred_out);
    }
    if (sm->parsed()) return cmd_embed(c_embed, tagger_path, lm_fwd, lm_bwd, input_path, out_path);
    if (sf->parsed()) return cmd_flops(c_flops, tagger_path, lm_fwd, lm_bwd, include_head);
    if (sb->parsed()) {
      return cmd_bench(c_bench, tagger_path, lm_fwd, lm_bwd, data_path, to_bioes_flag, repeat);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
