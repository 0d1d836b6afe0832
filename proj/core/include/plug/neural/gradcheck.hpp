#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "plug/neural/graph.hpp"

namespace plug::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  size_t checked = 0;
  std::string worst;  // "name[index]" of the worst coordinate
};

// Compares analytic gradients against central differences
// (f(theta + eps) - f(theta - eps)) / (2 eps) on `sample` coordinates drawn
// without replacement from the non-frozen parameters. The relative error of
// a coordinate is |a - n| / max(|a|, |n|, floor).
//
// loss_fn must build a fresh graph each call and return a 1x1 Var.
// Throws DataError on a non-finite loss.
GradCheckResult grad_check(const std::function<Var(Graph&)>& loss_fn,
                           const std::vector<Parameter*>& params, double eps = 1e-5,
                           size_t sample = 200, uint64_t seed = 0, double floor = 1e-6);

}  // namespace plug::nn
