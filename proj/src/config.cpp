#include "denselm/config.h"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace denselm {

namespace {

std::string dbl(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  RunConfig cfg;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               " has no '=': " + line);
    }
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    cfg.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void RunConfig::apply(const std::string& key, const std::string& value) {
  auto as_int = [&] { return std::stoi(value); };
  auto as_dbl = [&] { return std::stod(value); };
  if (key == "lm_layers") lm_layers = as_int();
  else if (key == "lm_hidden") lm_hidden = as_int();
  else if (key == "lm_embed") lm_embed = as_int();
  else if (key == "lm_proj") lm_proj = as_int();
  else if (key == "lm_unroll") lm_unroll = as_int();
  else if (key == "lm_batch") lm_batch = as_int();
  else if (key == "lm_lr") lm_lr = as_dbl();
  else if (key == "adam_beta1") adam_beta1 = as_dbl();
  else if (key == "adam_beta2") adam_beta2 = as_dbl();
  else if (key == "adam_eps") adam_eps = as_dbl();
  else if (key == "lm_epochs") lm_epochs = as_int();
  else if (key == "layer_dropout") layer_dropout = as_dbl();
  else if (key == "min_count") min_count = as_int();
  else if (key == "lm_dev_fraction") lm_dev_fraction = as_dbl();
  else if (key == "char_embed") char_embed = as_int();
  else if (key == "char_hidden") char_hidden = as_int();
  else if (key == "word_embed") word_embed = as_int();
  else if (key == "word_hidden") word_hidden = as_int();
  else if (key == "tagger_batch") tagger_batch = as_int();
  else if (key == "momentum") momentum = as_dbl();
  else if (key == "eta0") eta0 = as_dbl();
  else if (key == "rho") rho = as_dbl();
  else if (key == "dropout") dropout = as_dbl();
  else if (key == "tagger_epochs") tagger_epochs = as_int();
  else if (key == "patience") patience = as_int();
  else if (key == "word_min_count") word_min_count = as_int();
  else if (key == "dev_sample") dev_sample = as_int();
  else if (key == "clip") clip = as_dbl();
  else if (key == "seed") seed = std::stoull(value);
  else if (key == "lambda0") lambda0 = as_dbl();
  else if (key == "lambda1") lambda1 = as_int();
  else if (key == "reg_kind") reg_kind = value;
  else if (key == "prune_epochs") prune_epochs = as_int();
  else if (key == "tie_masks") tie_masks = (value == "1" || value == "true");
  else if (key == "chars_per_word") chars_per_word = as_dbl();
  else throw std::runtime_error("unknown config key: " + key);
}

std::map<std::string, std::string> RunConfig::to_map() const {
  std::map<std::string, std::string> m;
  m["lm_layers"] = std::to_string(lm_layers);
  m["lm_hidden"] = std::to_string(lm_hidden);
  m["lm_embed"] = std::to_string(lm_embed);
  m["lm_proj"] = std::to_string(lm_proj);
  m["lm_unroll"] = std::to_string(lm_unroll);
  m["lm_batch"] = std::to_string(lm_batch);
  m["lm_lr"] = dbl(lm_lr);
  m["adam_beta1"] = dbl(adam_beta1);
  m["adam_beta2"] = dbl(adam_beta2);
  m["adam_eps"] = dbl(adam_eps);
  m["lm_epochs"] = std::to_string(lm_epochs);
  m["layer_dropout"] = dbl(layer_dropout);
  m["min_count"] = std::to_string(min_count);
  m["lm_dev_fraction"] = dbl(lm_dev_fraction);
  m["char_embed"] = std::to_string(char_embed);
  m["char_hidden"] = std::to_string(char_hidden);
  m["word_embed"] = std::to_string(word_embed);
  m["word_hidden"] = std::to_string(word_hidden);
  m["tagger_batch"] = std::to_string(tagger_batch);
  m["momentum"] = dbl(momentum);
  m["eta0"] = dbl(eta0);
  m["rho"] = dbl(rho);
  m["dropout"] = dbl(dropout);
  m["tagger_epochs"] = std::to_string(tagger_epochs);
  m["patience"] = std::to_string(patience);
  m["word_min_count"] = std::to_string(word_min_count);
  m["dev_sample"] = std::to_string(dev_sample);
  m["clip"] = dbl(clip);
  m["seed"] = std::to_string(seed);
  m["lambda0"] = dbl(lambda0);
  m["lambda1"] = std::to_string(lambda1);
  m["reg_kind"] = reg_kind;
  m["prune_epochs"] = std::to_string(prune_epochs);
  m["tie_masks"] = tie_masks ? "true" : "false";
  m["chars_per_word"] = dbl(chars_per_word);
  return m;
}

void RunManifest::write(const std::string& path) const {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = config.to_map();
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& [k, v] : input_hashes) inputs[k] = std::to_string(v);
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["metrics"] = metrics;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
}

std::string resolve_data_path(const std::string& path) {
  if (path.empty() || path.front() == '/') return path;
  const char* root = std::getenv("DENSELM_DATA_ROOT");
  if (!root || !*root) return path;
  return std::string(root) + "/" + path;
}

}  // namespace denselm
