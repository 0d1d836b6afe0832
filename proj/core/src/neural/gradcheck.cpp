#include "plug/neural/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "plug/error.hpp"

namespace plug::nn {

namespace {

double evaluate(const std::function<Var(Graph&)>& loss_fn) {
  Graph g;
  const double v = loss_fn(g).scalar();
  if (!std::isfinite(v)) throw DataError("non-finite loss in gradient check");
  return v;
}

}  // namespace

GradCheckResult grad_check(const std::function<Var(Graph&)>& loss_fn,
                           const std::vector<Parameter*>& params, double eps, size_t sample,
                           uint64_t seed, double floor) {
  if (eps < 1e-7 || eps > 1e-3) throw UsageError("grad_check eps must lie in [1e-7, 1e-3]");
  std::vector<Parameter*> trainable;
  for (auto* p : params) {
    if (!p->frozen) trainable.push_back(p);
  }
  for (auto* p : trainable) p->grad.setZero();
  {
    Graph g;
    Var loss = loss_fn(g);
    g.backward(loss);
  }
  std::vector<Matrix> analytic;
  for (auto* p : trainable) analytic.push_back(p->grad);

  std::vector<std::pair<size_t, Eigen::Index>> coords;
  for (size_t k = 0; k < trainable.size(); ++k) {
    for (Eigen::Index i = 0; i < trainable[k]->value.size(); ++i) coords.emplace_back(k, i);
  }
  Rng rng(seed);
  std::shuffle(coords.begin(), coords.end(), rng);
  if (coords.size() > sample) coords.resize(sample);

  GradCheckResult result;
  for (const auto& [k, i] : coords) {
    double& x = trainable[k]->value.data()[i];
    const double saved = x;
    x = saved + eps;
    const double up = evaluate(loss_fn);
    x = saved - eps;
    const double down = evaluate(loss_fn);
    x = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double a = analytic[k].data()[i];
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst = trainable[k]->name + "[" + std::to_string(i) + "]";
    }
    ++result.checked;
  }
  for (auto* p : trainable) p->grad.setZero();
  return result;
}

}  // namespace plug::nn
