#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace plug::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Rng = std::mt19937_64;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  // Frozen parameters take part in forward passes but never receive
  // gradients or optimizer updates.
  bool frozen = false;

  size_t size() const { return static_cast<size_t>(value.size()); }
};

// Named parameters with stable addresses, iterated in insertion order.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  Parameter& add(const std::string& name, Matrix init);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::vector<Parameter*> trainable();

  size_t size() const { return params_.size(); }
  size_t scalar_count() const;
  void zero_grad();
  void set_frozen(bool frozen);
  ParamStore clone() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, Parameter*> index_;
};

Matrix zeros(int rows, int cols);
// Uniform Glorot initialization.
Matrix glorot(int rows, int cols, Rng& rng);
Matrix uniform(int rows, int cols, double scale, Rng& rng);

// Bitwise equality of every named tensor.
bool bitwise_equal(const ParamStore& a, const ParamStore& b);

}  // namespace plug::nn
