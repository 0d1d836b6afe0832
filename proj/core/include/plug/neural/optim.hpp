#pragma once

#include <unordered_map>
#include <vector>

#include "plug/neural/params.hpp"

namespace plug::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Global gradient-norm clip; 0 disables.
  double clip_norm = 5.0;
};

struct AdamMoments {
  Matrix first;
  Matrix second;
};

// One bias-corrected Adam update of a single parameter at step t (1-based).
// Frozen parameters are left untouched.
void adam_update(Parameter& p, AdamMoments& moments, const AdamConfig& config, double lr, long t);

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Updates every non-frozen parameter from its grad, then zeroes all grads.
  // lr_scale multiplies the configured rate (warmup schedules).
  void step(const std::vector<Parameter*>& params, double lr_scale = 1.0);
  long steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  long t_ = 0;
  std::unordered_map<const Parameter*, AdamMoments> moments_;
};

// Linear warmup over the first warmup_fraction of total steps, then linear
// decay to 10% of the base rate.
double warmup_schedule(long step, long total, double warmup_fraction = 0.1);

}  // namespace plug::nn
