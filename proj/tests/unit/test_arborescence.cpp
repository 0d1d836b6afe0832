#include <algorithm>
#include <limits>

#include "doctest.h"
#include "plug/arborescence.hpp"

using namespace plug;
using plug::nn::Matrix;

namespace {

// Every single-root tree over n words, by enumeration.
std::vector<std::vector<int>> all_trees(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> h(static_cast<size_t>(n), 0);
  for (;;) {
    bool ok = std::count(h.begin(), h.end(), 0) == 1;
    for (int j = 1; j <= n && ok; ++j) {
      if (h[static_cast<size_t>(j - 1)] == j) ok = false;
      int v = j;
      for (int s = 0; ok && v != 0 && s <= n; ++s) v = h[static_cast<size_t>(v - 1)];
      if (v != 0) ok = false;
    }
    if (ok) out.push_back(h);
    int k = 0;
    while (k < n && ++h[static_cast<size_t>(k)] > n) h[static_cast<size_t>(k++)] = 0;
    if (k == n) break;
  }
  return out;
}

}  // namespace

TEST_CASE("one word attaches to the root") {
  Matrix s(1, 2);
  s << -5.0, 7.0;
  CHECK(parse::chu_liu_edmonds(s) == std::vector<int>{0});
}

TEST_CASE("three-word trees") {
  // Single-root arborescences on 3 words: 3 choices of root child times 3
  // trees on the remaining structure.
  CHECK(all_trees(3).size() == 9);
}

TEST_CASE("a strong cycle is contracted") {
  // 1 -> 2 -> 3 -> 1 scores 10 each; every root arc scores 1.
  Matrix s = Matrix::Constant(3, 4, -5.0);
  s(1, 1) = 10;  // head 1 -> dep 2
  s(2, 2) = 10;  // head 2 -> dep 3
  s(0, 3) = 10;  // head 3 -> dep 1
  s(0, 0) = 1;
  s(1, 0) = 1;
  s(2, 0) = 1;
  const auto heads = parse::chu_liu_edmonds(s);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& t : all_trees(3)) best = std::max(best, parse::tree_score(s, t));
  CHECK(parse::tree_score(s, heads) == best);
  CHECK(best == 21.0);
  CHECK(std::count(heads.begin(), heads.end(), 0) == 1);
}

TEST_CASE("all-zero scores give a fixed tree") {
  const Matrix s = Matrix::Zero(4, 5);
  const auto a = parse::chu_liu_edmonds(s);
  CHECK(a == parse::chu_liu_edmonds(s));
  CHECK(std::count(a.begin(), a.end(), 0) == 1);
  CHECK(a == std::vector<int>{0, 1, 1, 1});
}

TEST_CASE("multi-root decoder may use several root arcs") {
  Matrix s = Matrix::Constant(2, 3, -1.0);
  s(0, 0) = 5;
  s(1, 0) = 5;
  CHECK(parse::chu_liu_edmonds_multi_root(s) == std::vector<int>{0, 0});
  const auto single = parse::chu_liu_edmonds(s);
  CHECK(std::count(single.begin(), single.end(), 0) == 1);
}

TEST_CASE("self arcs are never chosen") {
  Matrix s = Matrix::Zero(3, 4);
  for (int j = 1; j <= 3; ++j) s(j - 1, j) = 100.0;
  const auto heads = parse::chu_liu_edmonds(s);
  for (int j = 1; j <= 3; ++j) CHECK(heads[static_cast<size_t>(j - 1)] != j);
}
