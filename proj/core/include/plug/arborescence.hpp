#pragma once

#include <vector>

#include "plug/neural/params.hpp"

namespace plug::parse {

// Maximum spanning arborescence over an arc score matrix with exactly one
// arc leaving the root.
//
// scores has N rows (dependents 1..N) and N+1 columns (heads 0..N, 0 being
// the root); scores(j - 1, i) is the score of head i for dependent j.
// Self-arcs are ignored. Returns heads[j - 1] in 0..N. Ties go to the
// smaller dependent index first, then the smaller head index.
std::vector<int> chu_liu_edmonds(const nn::Matrix& scores);

// Same decoder without the single-root constraint.
std::vector<int> chu_liu_edmonds_multi_root(const nn::Matrix& scores);

// Sum of scores(j - 1, heads[j - 1]) in dependent order.
double tree_score(const nn::Matrix& scores, const std::vector<int>& heads);

}  // namespace plug::parse
