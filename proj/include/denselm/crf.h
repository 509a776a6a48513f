#pragma once

#include <vector>

#include "denselm/tensor.h"

namespace denselm {

// Plain-tensor CRF utilities (the differentiable NLL lives in Graph::crf_nll).
// Transitions are (Y+2) x (Y+2) with the virtual start row at index Y and
// the stop column at index Y+1.

inline int crf_start_index(int num_labels) { return num_labels; }
inline int crf_stop_index(int num_labels) { return num_labels + 1; }

// Unnormalized log score of one path, including start/stop transitions.
double crf_path_score(const Tensor& emissions, const Tensor& transitions,
                      const std::vector<int>& path);

// Log partition by the forward algorithm in log space.
double crf_log_partition(const Tensor& emissions, const Tensor& transitions);

// Argmax path; ties broken toward the lowest label index.
std::vector<int> viterbi_decode(const Tensor& emissions, const Tensor& transitions);

double viterbi_score(const Tensor& emissions, const Tensor& transitions);

}  // namespace denselm
