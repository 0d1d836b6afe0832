#include "plug/neural/params.hpp"

#include <cmath>
#include <cstring>

#include "plug/error.hpp"

namespace plug::nn {

Parameter& ParamStore::add(const std::string& name, Matrix init) {
  if (index_.count(name) != 0) throw UsageError("duplicate parameter '" + name + "'");
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->grad = Matrix::Zero(init.rows(), init.cols());
  p->value = std::move(init);
  auto* raw = p.get();
  params_.push_back(std::move(p));
  index_.emplace(name, raw);
  return *raw;
}

Parameter& ParamStore::at(const std::string& name) {
  auto* p = find(name);
  if (p == nullptr) throw UsageError("unknown parameter '" + name + "'");
  return *p;
}

const Parameter& ParamStore::at(const std::string& name) const {
  const auto* p = find(name);
  if (p == nullptr) throw UsageError("unknown parameter '" + name + "'");
  return *p;
}

Parameter* ParamStore::find(const std::string& name) {
  const auto it = index_.find(name);
  return it == index_.end() ? nullptr : it->second;
}

const Parameter* ParamStore::find(const std::string& name) const {
  const auto it = index_.find(name);
  return it == index_.end() ? nullptr : it->second;
}

std::vector<Parameter*> ParamStore::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParamStore::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<Parameter*> ParamStore::trainable() {
  std::vector<Parameter*> out;
  for (auto& p : params_) {
    if (!p->frozen) out.push_back(p.get());
  }
  return out;
}

size_t ParamStore::scalar_count() const {
  size_t n = 0;
  for (const auto& p : params_) n += p->size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->grad.setZero();
}

void ParamStore::set_frozen(bool frozen) {
  for (auto& p : params_) p->frozen = frozen;
}

ParamStore ParamStore::clone() const {
  ParamStore out;
  for (const auto& p : params_) {
    auto& q = out.add(p->name, p->value);
    q.frozen = p->frozen;
  }
  return out;
}

Matrix zeros(int rows, int cols) { return Matrix::Zero(rows, cols); }

Matrix uniform(int rows, int cols, double scale, Rng& rng) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Matrix glorot(int rows, int cols, Rng& rng) {
  return uniform(rows, cols, std::sqrt(6.0 / (rows + cols)), rng);
}

bool bitwise_equal(const ParamStore& a, const ParamStore& b) {
  const auto pa = a.all();
  const auto pb = b.all();
  if (pa.size() != pb.size()) return false;
  for (size_t i = 0; i < pa.size(); ++i) {
    if (pa[i]->name != pb[i]->name || pa[i]->value.rows() != pb[i]->value.rows() ||
        pa[i]->value.cols() != pb[i]->value.cols()) {
      return false;
    }
    if (std::memcmp(pa[i]->value.data(), pb[i]->value.data(), sizeof(double) * pa[i]->size()) != 0) {
      return false;
    }
  }
  return true;
}

}  // namespace plug::nn
