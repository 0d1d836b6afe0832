#include "plug/arborescence.hpp"

#include <algorithm>
#include <limits>

#include "plug/error.hpp"

namespace plug::parse {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// w[h][d] over nodes 0..n-1 with node 0 the root. Returns parent per node
// (parent[0] = -1).
std::vector<int> solve(const std::vector<std::vector<double>>& w) {
  const int n = static_cast<int>(w.size());
  std::vector<int> parent(n, -1);
  for (int d = 1; d < n; ++d) {
    double best = kNegInf;
    for (int h = 0; h < n; ++h) {
      if (h == d) continue;
      if (parent[d] < 0 || w[h][d] > best) {
        if (parent[d] >= 0 && !(w[h][d] > best)) continue;
        best = w[h][d];
        parent[d] = h;
      }
    }
  }

  // Find a cycle among the greedy choices.
  std::vector<int> color(n, 0);
  color[0] = 2;
  std::vector<int> cycle;
  for (int start = 1; start < n && cycle.empty(); ++start) {
    std::vector<int> path;
    int v = start;
    while (color[v] == 0) {
      color[v] = 1;
      path.push_back(v);
      v = parent[v];
    }
    if (color[v] == 1) {
      auto it = std::find(path.begin(), path.end(), v);
      cycle.assign(it, path.end());
    }
    for (int p : path) color[p] = 2;
  }
  if (cycle.empty()) return parent;

  std::vector<char> in_cycle(n, 0);
  for (int v : cycle) in_cycle[v] = 1;
  // Contracted graph: non-cycle nodes keep relative order, the cycle becomes
  // the last node.
  std::vector<int> to_new(n, -1);
  std::vector<int> to_old;
  for (int v = 0; v < n; ++v) {
    if (!in_cycle[v]) {
      to_new[v] = static_cast<int>(to_old.size());
      to_old.push_back(v);
    }
  }
  const int c = static_cast<int>(to_old.size());
  const int m = c + 1;
  std::vector<std::vector<double>> w2(m, std::vector<double>(m, kNegInf));
  std::vector<int> enter_at(m, -1);  // cycle node entered from outside node u
  std::vector<int> leave_from(m, -1);  // cycle node that heads outside node u
  for (int u = 0; u < n; ++u) {
    if (in_cycle[u]) continue;
    const int nu = to_new[u];
    for (int v = 0; v < n; ++v) {
      if (in_cycle[v] || v == u) continue;
      w2[nu][to_new[v]] = w[u][v];
    }
    // u -> cycle: break the cycle arc into the entered node.
    double best = kNegInf;
    for (int v : cycle) {
      const double s = w[u][v] - w[parent[v]][v];
      if (enter_at[nu] < 0 || s > best) {
        if (enter_at[nu] >= 0 && !(s > best)) continue;
        best = s;
        enter_at[nu] = v;
      }
    }
    w2[nu][c] = best;
    // cycle -> u
    if (u != 0) {
      double out = kNegInf;
      for (int v : cycle) {
        if (leave_from[nu] < 0 || w[v][u] > out) {
          if (leave_from[nu] >= 0 && !(w[v][u] > out)) continue;
          out = w[v][u];
          leave_from[nu] = v;
        }
      }
      w2[c][nu] = out;
    }
  }
  // Cycle nodes are visited in increasing order so ties favor smaller ids.
  std::sort(cycle.begin(), cycle.end());
  (void)cycle;

  const auto sub = solve(w2);
  std::vector<int> result(n, -1);
  for (int v : cycle) result[v] = parent[v];
  for (int nv = 1; nv < m; ++nv) {
    const int p = sub[nv];
    if (nv == c) {
      const int entered = enter_at[p];
      result[entered] = to_old[p];
    } else {
      const int v = to_old[nv];
      result[v] = p == c ? leave_from[nv] : to_old[p];
    }
  }
  return result;
}

std::vector<std::vector<double>> to_node_matrix(const nn::Matrix& scores) {
  const auto n = scores.rows();
  if (scores.cols() != n + 1) throw UsageError("arc score matrix must be N x (N+1)");
  std::vector<std::vector<double>> w(n + 1, std::vector<double>(n + 1, kNegInf));
  for (Eigen::Index d = 1; d <= n; ++d) {
    for (Eigen::Index h = 0; h <= n; ++h) {
      if (h != d) w[h][d] = scores(d - 1, h);
    }
  }
  return w;
}

std::vector<int> heads_of(const std::vector<int>& parent) {
  return std::vector<int>(parent.begin() + 1, parent.end());
}

}  // namespace

double tree_score(const nn::Matrix& scores, const std::vector<int>& heads) {
  double total = 0.0;
  for (size_t j = 0; j < heads.size(); ++j) total += scores(static_cast<Eigen::Index>(j), heads[j]);
  return total;
}

std::vector<int> chu_liu_edmonds_multi_root(const nn::Matrix& scores) {
  if (scores.rows() == 0) return {};
  return heads_of(solve(to_node_matrix(scores)));
}

std::vector<int> chu_liu_edmonds(const nn::Matrix& scores) {
  const auto n = scores.rows();
  if (n == 0) return {};
  auto w = to_node_matrix(scores);
  auto heads = heads_of(solve(w));
  if (std::count(heads.begin(), heads.end(), 0) == 1) return heads;
  // Best tree for each choice of the single root child.
  std::vector<int> best;
  double best_score = kNegInf;
  for (Eigen::Index r = 1; r <= n; ++r) {
    auto restricted = w;
    for (Eigen::Index d = 1; d <= n; ++d) {
      if (d != r) restricted[0][d] = kNegInf;
    }
    auto candidate = heads_of(solve(restricted));
    const double s = tree_score(scores, candidate);
    if (best.empty() || s > best_score) {
      best_score = s;
      best = std::move(candidate);
    }
  }
  return best;
}

}  // namespace plug::parse
