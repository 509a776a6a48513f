#include "denselm/sentence.h"

#include <stdexcept>

namespace denselm {

namespace {

bool has_prefix(const std::string& s, char p) {
  return s.size() >= 2 && s[0] == p && s[1] == '-';
}

std::string type_of(const std::string& s) {
  return s.size() >= 2 ? s.substr(2) : std::string();
}

}  // namespace

std::vector<std::string> to_bioes(const std::vector<std::string>& bio) {
  const int n = static_cast<int>(bio.size());
  // normalize: stray I- opens a new span
  std::vector<std::string> norm(bio);
  for (int i = 0; i < n; ++i) {
    if (!has_prefix(norm[static_cast<size_t>(i)], 'I')) continue;
    std::string ty = type_of(norm[static_cast<size_t>(i)]);
    bool continues = i > 0 &&
                     (has_prefix(norm[static_cast<size_t>(i - 1)], 'B') ||
                      has_prefix(norm[static_cast<size_t>(i - 1)], 'I')) &&
                     type_of(norm[static_cast<size_t>(i - 1)]) == ty;
    if (!continues) norm[static_cast<size_t>(i)] = "B-" + ty;
  }
  std::vector<std::string> out(norm);
  for (int i = 0; i < n; ++i) {
    if (!has_prefix(norm[static_cast<size_t>(i)], 'B')) continue;
    std::string ty = type_of(norm[static_cast<size_t>(i)]);
    int end = i;
    while (end + 1 < n && has_prefix(norm[static_cast<size_t>(end + 1)], 'I') &&
           type_of(norm[static_cast<size_t>(end + 1)]) == ty) {
      ++end;
    }
    if (end == i) {
      out[static_cast<size_t>(i)] = "S-" + ty;
    } else {
      out[static_cast<size_t>(i)] = "B-" + ty;
      for (int j = i + 1; j < end; ++j) out[static_cast<size_t>(j)] = "I-" + ty;
      out[static_cast<size_t>(end)] = "E-" + ty;
    }
    i = end;
  }
  return out;
}

bool bioes_valid(const std::vector<std::string>& labels) {
  std::string open;  // type of the currently open B.. span
  for (const auto& l : labels) {
    if (l == "O") {
      if (!open.empty()) return false;
    } else if (has_prefix(l, 'S')) {
      if (!open.empty()) return false;
    } else if (has_prefix(l, 'B')) {
      if (!open.empty()) return false;
      open = type_of(l);
    } else if (has_prefix(l, 'I')) {
      if (open.empty() || open != type_of(l)) return false;
    } else if (has_prefix(l, 'E')) {
      if (open.empty() || open != type_of(l)) return false;
      open.clear();
    } else {
      return false;
    }
  }
  return open.empty();
}

std::vector<Span> bioes_spans(const std::vector<std::string>& labels) {
  std::vector<Span> spans;
  int begin = -1;
  std::string open;
  const int n = static_cast<int>(labels.size());
  for (int i = 0; i < n; ++i) {
    const std::string& l = labels[static_cast<size_t>(i)];
    if (has_prefix(l, 'S')) {
      spans.push_back({i, i + 1, type_of(l)});
      open.clear();
    } else if (has_prefix(l, 'B')) {
      begin = i;
      open = type_of(l);
    } else if (has_prefix(l, 'I')) {
      if (open.empty() || open != type_of(l)) open.clear();
    } else if (has_prefix(l, 'E')) {
      if (!open.empty() && open == type_of(l)) {
        spans.push_back({begin, i + 1, open});
      }
      open.clear();
    } else {
      open.clear();
    }
  }
  return spans;
}

F1Score micro_f1(const std::vector<TaggedSentence>& gold,
                 const std::vector<std::vector<std::string>>& pred) {
  if (gold.size() != pred.size()) {
    throw std::invalid_argument("micro_f1: sentence count mismatch");
  }
  long correct = 0, n_gold = 0, n_pred = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].labels.size() != pred[i].size()) {
      throw std::invalid_argument("micro_f1: length mismatch in sentence " +
                                  std::to_string(i));
    }
    auto gs = bioes_spans(gold[i].labels);
    auto ps = bioes_spans(pred[i]);
    n_gold += static_cast<long>(gs.size());
    n_pred += static_cast<long>(ps.size());
    for (const auto& s : ps) {
      for (const auto& t : gs) {
        if (s == t) {
          ++correct;
          break;
        }
      }
    }
  }
  F1Score f;
  f.precision = n_pred > 0 ? static_cast<double>(correct) / n_pred : 0.0;
  f.recall = n_gold > 0 ? static_cast<double>(correct) / n_gold : 0.0;
  f.f1 = (f.precision + f.recall > 0.0)
             ? 2.0 * f.precision * f.recall / (f.precision + f.recall)
             : 0.0;
  return f;
}

}  // namespace denselm
