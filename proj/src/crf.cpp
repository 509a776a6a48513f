#include "denselm/crf.h"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace denselm {

namespace {

double logsumexp(const std::vector<double>& v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

void check_dims(const Tensor& emissions, const Tensor& transitions) {
  const int y = emissions.cols;
  if (emissions.rows < 1) throw std::invalid_argument("crf: empty sequence");
  if (transitions.rows != y + 2 || transitions.cols != y + 2) {
    throw std::invalid_argument("crf: transitions must be (Y+2)x(Y+2), got " +
                                transitions.shape_str() + " for Y=" + std::to_string(y));
  }
}

}  // namespace

double crf_path_score(const Tensor& emissions, const Tensor& transitions,
                      const std::vector<int>& path) {
  check_dims(emissions, transitions);
  const int T = emissions.rows;
  const int Y = emissions.cols;
  if (static_cast<int>(path.size()) != T) throw std::invalid_argument("crf: path length");
  double score = transitions.at(crf_start_index(Y), path[0]);
  for (int t = 0; t < T; ++t) {
    int y = path[static_cast<size_t>(t)];
    if (y < 0 || y >= Y) throw std::invalid_argument("crf: label out of range");
    score += emissions.at(t, y);
    if (t > 0) score += transitions.at(path[static_cast<size_t>(t - 1)], y);
  }
  score += transitions.at(path[static_cast<size_t>(T - 1)], crf_stop_index(Y));
  return score;
}

double crf_log_partition(const Tensor& emissions, const Tensor& transitions) {
  check_dims(emissions, transitions);
  const int T = emissions.rows;
  const int Y = emissions.cols;
  std::vector<double> alpha(static_cast<size_t>(Y));
  for (int y = 0; y < Y; ++y) {
    alpha[static_cast<size_t>(y)] = transitions.at(crf_start_index(Y), y) + emissions.at(0, y);
  }
  std::vector<double> next(static_cast<size_t>(Y)), buf(static_cast<size_t>(Y));
  for (int t = 1; t < T; ++t) {
    for (int y = 0; y < Y; ++y) {
      for (int p = 0; p < Y; ++p) {
        buf[static_cast<size_t>(p)] = alpha[static_cast<size_t>(p)] + transitions.at(p, y);
      }
      next[static_cast<size_t>(y)] = logsumexp(buf) + emissions.at(t, y);
    }
    alpha = next;
  }
  for (int y = 0; y < Y; ++y) alpha[static_cast<size_t>(y)] += transitions.at(y, crf_stop_index(Y));
  return logsumexp(alpha);
}

std::vector<int> viterbi_decode(const Tensor& emissions, const Tensor& transitions) {
  check_dims(emissions, transitions);
  const int T = emissions.rows;
  const int Y = emissions.cols;
  Tensor score(T, Y);
  std::vector<std::vector<int>> back(static_cast<size_t>(T), std::vector<int>(static_cast<size_t>(Y), 0));
  for (int y = 0; y < Y; ++y) {
    score.at(0, y) = transitions.at(crf_start_index(Y), y) + emissions.at(0, y);
  }
  for (int t = 1; t < T; ++t) {
    for (int y = 0; y < Y; ++y) {
      // scanning predecessors in ascending order with strict > keeps the
      // lowest index on ties
      double best = score.at(t - 1, 0) + transitions.at(0, y);
      int arg = 0;
      for (int p = 1; p < Y; ++p) {
        double cand = score.at(t - 1, p) + transitions.at(p, y);
        if (cand > best) {
          best = cand;
          arg = p;
        }
      }
      score.at(t, y) = best + emissions.at(t, y);
      back[static_cast<size_t>(t)][static_cast<size_t>(y)] = arg;
    }
  }
  double best = score.at(T - 1, 0) + transitions.at(0, crf_stop_index(Y));
  int arg = 0;
  for (int y = 1; y < Y; ++y) {
    double cand = score.at(T - 1, y) + transitions.at(y, crf_stop_index(Y));
    if (cand > best) {
      best = cand;
      arg = y;
    }
  }
  std::vector<int> path(static_cast<size_t>(T));
  path[static_cast<size_t>(T - 1)] = arg;
  for (int t = T - 1; t > 0; --t) {
    path[static_cast<size_t>(t - 1)] = back[static_cast<size_t>(t)][static_cast<size_t>(path[static_cast<size_t>(t)])];
  }
  return path;
}

double viterbi_score(const Tensor& emissions, const Tensor& transitions) {
  return crf_path_score(emissions, transitions, viterbi_decode(emissions, transitions));
}

}  // namespace denselm
