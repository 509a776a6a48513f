#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace denselm {

// Every hyperparameter in one place; defaults follow the reference setup.
// Loadable from a flat key=value file, overridable per key.
struct RunConfig {
  // language model
  int lm_layers = 10;
  int lm_hidden = 300;
  int lm_embed = 300;
  int lm_proj = 1600;
  int lm_unroll = 20;
  int lm_batch = 128;
  double lm_lr = 0.001;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int lm_epochs = 10;
  double layer_dropout = 0.5;
  int min_count = 3;  // count <= min_count becomes <unk>
  double lm_dev_fraction = 0.05;

  // tagger
  int char_embed = 30;
  int char_hidden = 150;
  int word_embed = 100;
  int word_hidden = 150;
  int tagger_batch = 10;
  double momentum = 0.9;
  double eta0 = 0.015;
  double rho = 0.05;
  double dropout = 0.5;
  int tagger_epochs = 50;
  int patience = 10;
  int word_min_count = 0;
  int dev_sample = 1000;  // train sentences sampled as dev when none given

  // shared
  double clip = 5.0;
  uint64_t seed = 42;

  // pruning
  double lambda0 = 0.05;
  int lambda1 = 2;
  std::string reg_kind = "R3";
  int prune_epochs = 5;
  bool tie_masks = false;

  // flops
  double chars_per_word = 4.39;

  static RunConfig from_file(const std::string& path);
  void apply(const std::string& key, const std::string& value);
  std::map<std::string, std::string> to_map() const;
};

// Reproducibility record for a run: config, seed, input hashes, outputs,
// final metrics. JSON, one per run.
struct RunManifest {
  std::string command;
  RunConfig config;
  std::map<std::string, uint64_t> input_hashes;
  std::vector<std::string> outputs;
  std::map<std::string, std::string> metrics;

  void write(const std::string& path) const;
};

// Resolves a path against the DENSELM_DATA_ROOT env var when set and the
// path is relative.
std::string resolve_data_path(const std::string& path);

}  // namespace denselm
