#include "denselm/conll.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace denselm {

std::vector<TaggedSentence> read_conll(const std::string& path, bool convert_bio_to_bioes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open conll file: " + path);
  std::vector<TaggedSentence> sentences;
  TaggedSentence cur;
  std::string line;
  long line_no = 0;
  auto flush = [&]() {
    if (cur.words.empty()) return;
    if (convert_bio_to_bioes) cur.labels = to_bioes(cur.labels);
    sentences.push_back(std::move(cur));
    cur = TaggedSentence{};
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::vector<std::string> cols;
    std::string c;
    while (ss >> c) cols.push_back(c);
    if (cols.empty()) {
      flush();
      continue;
    }
    if (cols[0] == "-DOCSTART-") continue;
    if (cols.size() < 2) {
      throw std::runtime_error("malformed conll line " + std::to_string(line_no) +
                               " in " + path + ": need at least 2 columns");
    }
    cur.words.push_back(cols.front());
    cur.labels.push_back(cols.back());
  }
  flush();
  return sentences;
}

void write_conll(const std::string& path, const std::vector<TaggedSentence>& sentences,
                 const std::vector<std::vector<std::string>>* predictions) {
  if (predictions && predictions->size() != sentences.size()) {
    throw std::invalid_argument("write_conll: prediction count mismatch");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write conll file: " + path);
  for (size_t i = 0; i < sentences.size(); ++i) {
    const auto& s = sentences[i];
    for (size_t t = 0; t < s.words.size(); ++t) {
      out << s.words[t] << ' ' << s.labels[t];
      if (predictions) out << ' ' << (*predictions)[i][t];
      out << '\n';
    }
    out << '\n';
  }
}

}  // namespace denselm
