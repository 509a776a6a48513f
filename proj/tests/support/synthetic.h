#pragma once

#include <string>
#include <vector>

#include "denselm/embedder.h"
#include "denselm/sentence.h"

namespace denselm::testsupport {

// Corpus whose labels are a fixed function of the word identity, so a
// word-embedding path can memorize it outright.
std::vector<TaggedSentence> capacity_corpus(int n_sentences, uint64_t seed);

// Context-dependent task: entity surface forms are shared across three
// classes (P, L, Q); the class is determined by the marker token directly
// before the entity. Marker surface forms are random strings, each used only
// once or twice, so the tagger's word and char paths cannot recover the
// class. A hand-wired 6-layer forward LM carries it instead: layers 1-4
// produce constants, layer 5 latches P-markers, layer 6 latches L-markers.
struct ContextTask {
  std::vector<TaggedSentence> train;
  std::vector<TaggedSentence> dev;
  ContextEmbedder embedder;
  // 0-based indices of the forward layers carrying the class signal
  std::vector<int> signal_layers = {4, 5};
};

// r_dim must match the tagger's word embedding dimension.
ContextTask make_context_task(uint64_t seed, int train_sentences, int dev_sentences,
                              int hidden = 8, int embed = 8, int r_dim = 8);

// Deterministic Markov-chain text, one sentence per line, roughly
// target_bytes long. Strong bigram structure: a word-level LSTM beats the
// unigram baseline within an epoch or two.
std::string markov_corpus(long target_bytes, uint64_t seed);

// exp(mean -log p_unigram(w)) of `eval` under add-nothing unigram counts
// from `train` (both already UNK-mapped id streams over the same vocab).
double unigram_perplexity(const std::vector<int>& train_ids,
                          const std::vector<int>& eval_ids, int vocab_size);

}  // namespace denselm::testsupport
