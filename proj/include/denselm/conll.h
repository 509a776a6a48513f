#pragma once

#include <string>
#include <vector>

#include "denselm/sentence.h"

namespace denselm {

// CoNLL column format: whitespace-separated columns per token line, word in
// the first column, gold label in the last; blank line ends a sentence;
// lines starting with -DOCSTART- are skipped.
std::vector<TaggedSentence> read_conll(const std::string& path,
                                       bool convert_bio_to_bioes = false);

// Writes word + gold label per line; when predictions are given they are
// appended as the final column.
void write_conll(const std::string& path, const std::vector<TaggedSentence>& sentences,
                 const std::vector<std::vector<std::string>>* predictions = nullptr);

}  // namespace denselm
