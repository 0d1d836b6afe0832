#pragma once

// Linear-chain CRF over L labels. Transition matrices are (L+2) x (L+2):
// index L is START and L+1 is STOP, entry (a, b) scores a -> b, and -inf
// marks a forbidden move.

#include <span>
#include <string>
#include <vector>

#include "plug/neural/graph.hpp"

namespace plug::crf {

inline int start_index(int labels) { return labels; }
inline int stop_index(int labels) { return labels + 1; }

// 0 for legal BIOES moves and -inf otherwise. Labels must be "O" or
// B-/I-/E-/S- followed by a type; anything else throws DataError.
nn::Matrix constraint_mask(const std::vector<std::string>& labels);

// Forward algorithm in log space; emissions are T x L.
double log_partition(const nn::Matrix& emissions, const nn::Matrix& transitions);

double path_score(const nn::Matrix& emissions, const nn::Matrix& transitions,
                  std::span<const int> path);

struct ViterbiResult {
  std::vector<int> path;
  double score = 0.0;
};

// Ties go to the smaller label id at every backtrack step.
ViterbiResult viterbi(const nn::Matrix& emissions, const nn::Matrix& transitions);

// Posterior expectations: unary(t, l) = P(y_t = l) and pair(a, b) = expected
// number of a -> b moves, START and STOP included.
struct Marginals {
  nn::Matrix unary;
  nn::Matrix pair;
  double log_z = 0.0;
};
Marginals marginals(const nn::Matrix& emissions, const nn::Matrix& transitions);

// log Z - score(gold) with transitions = learned + mask. Gradients reach the
// emissions and the learned transition scores.
nn::Var nll(nn::Graph& g, nn::Var emissions, nn::Var learned, const nn::Matrix& mask,
            std::span<const int> gold);

}  // namespace plug::crf
