#pragma once

#include <functional>
#include <string>
#include <vector>

#include "denselm/regularizer.h"
#include "denselm/tagger.h"

namespace denselm {

struct PruneConfig {
  RegularizerSpec reg;  // lambda0 = 0 leaves z untouched (training-phase semantics)
  int epochs = 5;
  int batch = 10;
  double momentum = 0.9;
  double eta0 = 0.015;
  double rho = 0.05;
  double dropout = 0.5;  // sequence labeling model only; LM dropout stays off
  double clip = 5.0;
  bool tie_masks = false;  // one z shared by both directions
  uint64_t seed = 42;
  double chars_per_word = 4.39;
};

struct PruneStepLog {
  int step;  // epoch index
  double penalty;
  int z_l0_fwd;
  int z_l0_bwd;
  double dev_f1;
  std::vector<double> z_fwd;
  std::vector<double> z_bwd;
};

struct PruneReport {
  std::vector<PruneStepLog> history;
  bool binarized_cleanly = true;  // false: hard rounding was forced
  double binariness_gap = 0.0;    // max_i min(z_i, 1-z_i) before rounding
  LayerMask rounded_fwd, rounded_bwd;
  double flops_before = 0.0, flops_after = 0.0;
  double dev_f1_before = 0.0, dev_f1_after = 0.0;

  std::string summary() const;
  std::string history_csv() const;
};

// Task-guided layer selection: projected gradient descent with momentum over
// (tagger params incl. W_cr, z), LM weights frozen. z starts at the stacks'
// masks (all ones), is driven near-binary, rounded at 0.5, and layers with
// z == 0 are physically deleted. The embedder is replaced by its compressed
// form; the tagger keeps its retuned weights.
PruneReport prune(TaggerModel& tagger, ContextEmbedder& emb,
                  const std::vector<TaggedSentence>& train,
                  const std::vector<TaggedSentence>& dev, const PruneConfig& cfg);

// Retention frequency per original layer index over repeated prune runs.
struct SelectionPattern {
  std::vector<long> kept_fwd;  // count per original layer
  std::vector<long> kept_bwd;
  int runs = 0;

  std::string csv() const;
};

// Runs `runner` (a full prune pipeline returning the final masks) once per
// seed and tallies which original layers survive.
SelectionPattern selection_pattern(
    int num_layers_fwd, int num_layers_bwd, const std::vector<uint64_t>& seeds,
    const std::function<std::pair<LayerMask, LayerMask>(uint64_t seed)>& runner);

}  // namespace denselm
