#include "plug/crf.hpp"

#include <cmath>
#include <limits>

#include "plug/error.hpp"

namespace plug::crf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct Tag {
  char prefix = 'O';
  std::string type;
};

Tag split_tag(const std::string& label) {
  if (label == "O") return {};
  if (label.size() < 3 || label[1] != '-' || std::string("BIES").find(label[0]) == std::string::npos) {
    throw DataError("unseen tag scheme: '" + label + "'");
  }
  return {label[0], label.substr(2)};
}

bool allowed(const Tag& from, const Tag& to) {
  const bool open = from.prefix == 'B' || from.prefix == 'I';
  if (open) return (to.prefix == 'I' || to.prefix == 'E') && to.type == from.type;
  return to.prefix == 'O' || to.prefix == 'B' || to.prefix == 'S';
}

void check_shapes(const nn::Matrix& emissions, const nn::Matrix& transitions) {
  const auto l = emissions.cols();
  if (transitions.rows() != l + 2 || transitions.cols() != l + 2) {
    throw UsageError("transition matrix must be (L+2) x (L+2)");
  }
}

// alpha(t, l): log-sum of prefixes ending in l at t, emission included.
nn::Matrix forward(const nn::Matrix& e, const nn::Matrix& tr) {
  const auto t_len = e.rows();
  const auto l = e.cols();
  nn::Matrix alpha(t_len, l);
  for (Eigen::Index y = 0; y < l; ++y) alpha(0, y) = tr(l, y) + e(0, y);
  for (Eigen::Index t = 1; t < t_len; ++t) {
    for (Eigen::Index y = 0; y < l; ++y) {
      double acc = kNegInf;
      for (Eigen::Index k = 0; k < l; ++k) acc = log_add(acc, alpha(t - 1, k) + tr(k, y));
      alpha(t, y) = acc + e(t, y);
    }
  }
  return alpha;
}

// beta(t, l): log-sum of suffixes after l at t, STOP included.
nn::Matrix backward(const nn::Matrix& e, const nn::Matrix& tr) {
  const auto t_len = e.rows();
  const auto l = e.cols();
  nn::Matrix beta(t_len, l);
  for (Eigen::Index y = 0; y < l; ++y) beta(t_len - 1, y) = tr(y, l + 1);
  for (Eigen::Index t = t_len - 2; t >= 0; --t) {
    for (Eigen::Index k = 0; k < l; ++k) {
      double acc = kNegInf;
      for (Eigen::Index y = 0; y < l; ++y) acc = log_add(acc, tr(k, y) + e(t + 1, y) + beta(t + 1, y));
      beta(t, k) = acc;
    }
  }
  return beta;
}

double finish(const nn::Matrix& alpha, const nn::Matrix& tr) {
  const auto l = alpha.cols();
  double acc = kNegInf;
  for (Eigen::Index y = 0; y < l; ++y) acc = log_add(acc, alpha(alpha.rows() - 1, y) + tr(y, l + 1));
  return acc;
}

}  // namespace

nn::Matrix constraint_mask(const std::vector<std::string>& labels) {
  const auto l = static_cast<Eigen::Index>(labels.size());
  std::vector<Tag> tags;
  for (const auto& s : labels) tags.push_back(split_tag(s));
  nn::Matrix mask = nn::Matrix::Constant(l + 2, l + 2, kNegInf);
  const Tag outside;
  for (Eigen::Index b = 0; b < l; ++b) {
    if (allowed(outside, tags[b])) mask(l, b) = 0.0;  // START behaves like O
    const char p = tags[b].prefix;
    if (p == 'O' || p == 'E' || p == 'S') mask(b, l + 1) = 0.0;
    for (Eigen::Index c = 0; c < l; ++c) {
      if (allowed(tags[b], tags[c])) mask(b, c) = 0.0;
    }
  }
  return mask;
}

double log_partition(const nn::Matrix& emissions, const nn::Matrix& transitions) {
  check_shapes(emissions, transitions);
  if (emissions.rows() == 0) return 0.0;
  return finish(forward(emissions, transitions), transitions);
}

double path_score(const nn::Matrix& emissions, const nn::Matrix& transitions,
                  std::span<const int> path) {
  check_shapes(emissions, transitions);
  if (static_cast<Eigen::Index>(path.size()) != emissions.rows()) {
    throw UsageError("path length must match the emission rows");
  }
  if (path.empty()) return 0.0;
  const auto l = emissions.cols();
  double s = transitions(l, path[0]);
  for (size_t t = 0; t < path.size(); ++t) {
    s += emissions(static_cast<Eigen::Index>(t), path[t]);
    if (t > 0) s += transitions(path[t - 1], path[t]);
  }
  return s + transitions(path.back(), l + 1);
}

ViterbiResult viterbi(const nn::Matrix& e, const nn::Matrix& tr) {
  check_shapes(e, tr);
  ViterbiResult r;
  const auto t_len = e.rows();
  const auto l = e.cols();
  if (t_len == 0) return r;
  nn::Matrix delta(t_len, l);
  Eigen::MatrixXi back = Eigen::MatrixXi::Zero(t_len, l);
  for (Eigen::Index y = 0; y < l; ++y) delta(0, y) = tr(l, y) + e(0, y);
  for (Eigen::Index t = 1; t < t_len; ++t) {
    for (Eigen::Index y = 0; y < l; ++y) {
      Eigen::Index best = 0;
      double best_score = delta(t - 1, 0) + tr(0, y);
      for (Eigen::Index k = 1; k < l; ++k) {
        const double s = delta(t - 1, k) + tr(k, y);
        if (s > best_score) {
          best_score = s;
          best = k;
        }
      }
      delta(t, y) = best_score + e(t, y);
      back(t, y) = static_cast<int>(best);
    }
  }
  Eigen::Index last = 0;
  double best_score = delta(t_len - 1, 0) + tr(0, l + 1);
  for (Eigen::Index y = 1; y < l; ++y) {
    const double s = delta(t_len - 1, y) + tr(y, l + 1);
    if (s > best_score) {
      best_score = s;
      last = y;
    }
  }
  r.score = best_score;
  r.path.assign(static_cast<size_t>(t_len), 0);
  r.path.back() = static_cast<int>(last);
  for (Eigen::Index t = t_len - 1; t > 0; --t) {
    r.path[static_cast<size_t>(t - 1)] = back(t, r.path[static_cast<size_t>(t)]);
  }
  return r;
}

Marginals marginals(const nn::Matrix& e, const nn::Matrix& tr) {
  check_shapes(e, tr);
  const auto t_len = e.rows();
  const auto l = e.cols();
  Marginals m;
  m.unary = nn::Matrix::Zero(t_len, l);
  m.pair = nn::Matrix::Zero(l + 2, l + 2);
  if (t_len == 0) return m;
  const auto alpha = forward(e, tr);
  const auto beta = backward(e, tr);
  m.log_z = finish(alpha, tr);
  if (!std::isfinite(m.log_z)) throw DataError("no legal label path");
  for (Eigen::Index t = 0; t < t_len; ++t) {
    for (Eigen::Index y = 0; y < l; ++y) m.unary(t, y) = std::exp(alpha(t, y) + beta(t, y) - m.log_z);
  }
  for (Eigen::Index y = 0; y < l; ++y) {
    m.pair(l, y) = m.unary(0, y);
    m.pair(y, l + 1) = m.unary(t_len - 1, y);
  }
  for (Eigen::Index t = 0; t + 1 < t_len; ++t) {
    for (Eigen::Index k = 0; k < l; ++k) {
      if (alpha(t, k) == kNegInf) continue;
      for (Eigen::Index y = 0; y < l; ++y) {
        const double s = alpha(t, k) + tr(k, y) + e(t + 1, y) + beta(t + 1, y) - m.log_z;
        if (s != kNegInf) m.pair(k, y) += std::exp(s);
      }
    }
  }
  return m;
}

nn::Var nll(nn::Graph& g, nn::Var emissions, nn::Var learned, const nn::Matrix& mask,
            std::span<const int> gold) {
  const nn::Matrix tr = learned.value() + mask;
  const auto m = marginals(emissions.value(), tr);
  const double gold_score = path_score(emissions.value(), tr, gold);
  if (!std::isfinite(gold_score)) throw DataError("gold label path violates the tag constraints");
  nn::Matrix value(1, 1);
  value(0, 0) = m.log_z - gold_score;
  const std::vector<int> path(gold.begin(), gold.end());
  const auto l = emissions.cols();
  return g.custom(std::move(value), {emissions, learned},
                  [m, path, l](const nn::Matrix&, const nn::Matrix& out_grad,
                               std::span<nn::Matrix* const> in) {
                    const double s = out_grad(0, 0);
                    if (in[0] != nullptr) {
                      nn::Matrix d = m.unary;
                      for (size_t t = 0; t < path.size(); ++t) d(static_cast<Eigen::Index>(t), path[t]) -= 1.0;
                      *in[0] += s * d;
                    }
                    if (in[1] != nullptr) {
                      nn::Matrix d = m.pair;
                      if (!path.empty()) {
                        d(l, path.front()) -= 1.0;
                        d(path.back(), l + 1) -= 1.0;
                        for (size_t t = 1; t < path.size(); ++t) d(path[t - 1], path[t]) -= 1.0;
                      }
                      *in[1] += s * d;
                    }
                  });
}

}  // namespace plug::crf
