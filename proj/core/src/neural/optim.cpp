#include "plug/neural/optim.hpp"

#include <algorithm>
#include <cmath>

namespace plug::nn {

void adam_update(Parameter& p, AdamMoments& m, const AdamConfig& c, double lr, long t) {
  if (p.frozen) return;
  if (m.first.size() == 0) {
    m.first = Matrix::Zero(p.value.rows(), p.value.cols());
    m.second = Matrix::Zero(p.value.rows(), p.value.cols());
  }
  m.first = c.beta1 * m.first + (1.0 - c.beta1) * p.grad;
  m.second = c.beta2 * m.second + (1.0 - c.beta2) * p.grad.cwiseProduct(p.grad);
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  p.value.array() -=
      lr * (m.first.array() / bc1) / ((m.second.array() / bc2).sqrt() + c.eps);
}

void Adam::step(const std::vector<Parameter*>& params, double lr_scale) {
  ++t_;
  double scale_grads = 1.0;
  if (config_.clip_norm > 0.0) {
    double norm2 = 0.0;
    for (const auto* p : params) {
      if (!p->frozen) norm2 += p->grad.squaredNorm();
    }
    const double norm = std::sqrt(norm2);
    if (norm > config_.clip_norm) scale_grads = config_.clip_norm / norm;
  }
  for (auto* p : params) {
    if (p->frozen) {
      p->grad.setZero();
      continue;
    }
    if (scale_grads != 1.0) p->grad *= scale_grads;
    adam_update(*p, moments_[p], config_, config_.lr * lr_scale, t_);
    p->grad.setZero();
  }
}

double warmup_schedule(long step, long total, double warmup_fraction) {
  if (total <= 0) return 1.0;
  const double warm = std::max(1.0, warmup_fraction * static_cast<double>(total));
  const double s = static_cast<double>(step);
  if (s < warm) return (s + 1.0) / warm;
  const double rest = std::max(1.0, static_cast<double>(total) - warm);
  return std::max(0.1, 1.0 - 0.9 * (s - warm) / rest);
}

}  // namespace plug::nn
