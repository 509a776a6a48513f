#pragma once

#include <string>
#include <vector>

namespace denselm {

// One labeled sentence. Labels use the BIOES scheme; the character stream
// for the char LSTM is each word's characters followed by one space,
// including a trailing space after the last word.
struct TaggedSentence {
  std::vector<std::string> words;
  std::vector<std::string> labels;
};

// Entity span [begin, end) with its type.
struct Span {
  int begin;
  int end;
  std::string type;

  bool operator==(const Span&) const = default;
};

// BIO (or IOB1 with stray I-) to BIOES. Length-1 spans become S-, longer
// spans B-, I-..., E-. A stray I- with no open span of its type is treated
// as B-.
std::vector<std::string> to_bioes(const std::vector<std::string>& bio);

// True when I/E continue a same-type B/I and every span closes properly.
bool bioes_valid(const std::vector<std::string>& labels);

// Spans from a BIOES sequence. Tolerant of malformed predictions: a span
// counts only when opened by B-/S- and closed by a same-type E-/S-.
std::vector<Span> bioes_spans(const std::vector<std::string>& labels);

struct F1Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Entity-level micro-averaged P/R/F1 under exact span+type matching.
// Throws on sentence-count or length mismatches.
F1Score micro_f1(const std::vector<TaggedSentence>& gold,
                 const std::vector<std::vector<std::string>>& pred);

}  // namespace denselm
