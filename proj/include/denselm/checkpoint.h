#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "denselm/embedder.h"
#include "denselm/tagger.h"

namespace denselm {

// Single self-describing checkpoint file: a text header (format version,
// model kind, dims, layer manifest, vocab, gate ordering note, rng seed)
// followed by little-endian float32 parameter blobs, row-major, in
// header-declared order.
class CheckpointWriter {
 public:
  void field(const std::string& key, const std::string& value);
  void field(const std::string& key, long long value);
  void field(const std::string& key, uint64_t value);
  void field(const std::string& key, double value);
  void vocab(const std::string& name, const std::vector<std::string>& tokens);
  void ints(const std::string& name, const std::vector<int>& values);
  void tensor(const std::string& name, const Tensor& t);
  void write(const std::string& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> header_;
  std::vector<std::pair<std::string, const Tensor*>> tensors_;
};

class CheckpointReader {
 public:
  explicit CheckpointReader(const std::string& path);

  const std::string& field(const std::string& key) const;
  long long field_int(const std::string& key) const;
  uint64_t field_u64(const std::string& key) const;
  double field_double(const std::string& key) const;
  bool has(const std::string& key) const;
  std::vector<std::string> vocab(const std::string& name) const;
  std::vector<int> ints(const std::string& name) const;
  Tensor tensor(const std::string& name) const;

 private:
  std::map<std::string, std::string> fields_;
  std::map<std::string, std::vector<std::string>> vocabs_;
  std::map<std::string, std::vector<int>> ints_;
  std::map<std::string, Tensor> tensors_;
};

void save_lm(const std::string& path, const LmModel& m, uint64_t seed);
LmModel load_lm(const std::string& path);

// Tagger checkpoint carries W_cr/b_cr (tagger-side weights over the LM
// features) plus the LM vocab hash so stale embedders are rejected at load.
void save_tagger(const std::string& path, const TaggerModel& m,
                 const ContextEmbedder* emb, uint64_t seed);
TaggerModel load_tagger(const std::string& path, ContextEmbedder* emb);

uint64_t file_hash(const std::string& path);

}  // namespace denselm
