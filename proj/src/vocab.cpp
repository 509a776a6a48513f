#include "denselm/vocab.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace denselm {

int Vocab::encode(const std::string& token) const {
  auto it = token_to_id.find(token);
  return it == token_to_id.end() ? unk : it->second;
}

const std::string& Vocab::decode(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("vocab id " + std::to_string(id));
  return id_to_token[static_cast<size_t>(id)];
}

uint64_t Vocab::hash() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : id_to_token) {
    for (char c : t) {
      h ^= static_cast<uint8_t>(c);
      h *= 0x100000001b3ULL;
    }
    h ^= static_cast<uint8_t>('\n');
    h *= 0x100000001b3ULL;
  }
  return h;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens, int min_count) {
  Vocab v;
  v.min_count_used = min_count;
  v.id_to_token = {kUnk, kBos, kEos};
  for (auto& t : tokens) {
    if (t == kUnk || t == kBos || t == kEos) continue;
    v.id_to_token.push_back(std::move(t));
  }
  for (int i = 0; i < v.size(); ++i) v.token_to_id[v.id_to_token[static_cast<size_t>(i)]] = i;
  return v;
}

Vocab build_vocab(const std::vector<std::vector<std::string>>& sentences, int min_count) {
  // std::map keeps counting deterministic across platforms.
  std::map<std::string, long> counts;
  for (const auto& s : sentences) {
    for (const auto& t : s) ++counts[t];
  }
  std::vector<std::pair<std::string, long>> kept;
  for (const auto& [tok, cnt] : counts) {
    if (cnt > min_count) kept.emplace_back(tok, cnt);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [tok, cnt] : kept) tokens.push_back(std::move(tok));
  return Vocab::from_tokens(std::move(tokens), min_count);
}

Vocab build_vocab_file(const std::string& path, int min_count) {
  return build_vocab(read_corpus_lines(path), min_count);
}

std::vector<std::vector<std::string>> read_corpus_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  std::vector<std::vector<std::string>> lines;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::vector<std::string> toks;
    std::string t;
    while (ss >> t) toks.push_back(t);
    if (!toks.empty()) lines.push_back(std::move(toks));
  }
  return lines;
}

}  // namespace denselm
