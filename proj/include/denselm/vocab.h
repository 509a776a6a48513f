#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace denselm {

// Token dictionary with dense ids and fixed specials. Tokens occurring at
// most min_count times map to <unk>.
struct Vocab {
  static constexpr const char* kUnk = "<unk>";
  static constexpr const char* kBos = "<s>";
  static constexpr const char* kEos = "</s>";

  std::vector<std::string> id_to_token;
  std::unordered_map<std::string, int> token_to_id;
  int unk = 0;
  int bos = 1;
  int eos = 2;
  int min_count_used = 0;

  int size() const { return static_cast<int>(id_to_token.size()); }
  int encode(const std::string& token) const;
  const std::string& decode(int id) const;
  uint64_t hash() const;

  static Vocab from_tokens(std::vector<std::string> tokens, int min_count);
};

// Frequency-sorted vocab; ties broken lexicographically. Tokens with
// count <= min_count become <unk>.
Vocab build_vocab(const std::vector<std::vector<std::string>>& sentences, int min_count);
// Whitespace-tokenized UTF-8 corpus, one sentence per line.
Vocab build_vocab_file(const std::string& path, int min_count);

std::vector<std::vector<std::string>> read_corpus_lines(const std::string& path);

}  // namespace denselm
