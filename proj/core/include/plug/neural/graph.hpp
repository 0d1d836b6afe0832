#pragma once

// Tape-based reverse-mode differentiation over dense row-major matrices.
//
// A Graph records every operation applied to its Vars. backward() walks the
// tape in reverse and accumulates gradients into the inputs that need them;
// gradients reaching a Parameter leaf are added to Parameter::grad. Frozen
// parameters are constants as far as the tape is concerned.

#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "plug/neural/params.hpp"

namespace plug::nn {

class Graph;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
  bool requires_grad() const;
  Graph& graph() const { return *graph_; }
  int id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* g, int id) : graph_(g), id_(id) {}
  friend Var embedding(Graph& g, Parameter& table, std::span<const int> index);
  Graph* graph_ = nullptr;
  int id_ = -1;
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Matrix value);
  Var param(Parameter& p);

  // Reverse sweep from a 1x1 Var. May be called once per graph.
  void backward(Var loss);

  // Escape hatch for fused operations. backward receives the output value and
  // gradient and must add into the gradient matrix of every input that
  // requires one (a null pointer marks inputs that do not).
  using Backward = std::function<void(const Matrix& out, const Matrix& out_grad,
                                      std::span<Matrix* const> in_grads)>;
  Var custom(Matrix value, std::vector<Var> inputs, Backward backward);

  size_t node_count() const { return nodes_.size(); }

 private:
  friend class Var;
  friend Var embedding(Graph& g, Parameter& table, std::span<const int> index);
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::vector<int> inputs;
    Backward backward;
    Parameter* param = nullptr;
    std::vector<int> rows;  // non-empty for sparse lookups into param
  };
  std::deque<Node> nodes_;
};

Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);  // a * b^T
Var add(Var a, Var b);
Var add_row(Var a, Var row);  // broadcasts a 1xC row over every row of a
Var sub(Var a, Var b);
Var mul(Var a, Var b);        // elementwise
Var scale(Var a, double s);
Var one_minus(Var a);
Var relu(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
Var softmax_rows(Var a);
Var rows(Var a, int begin, int count);
Var cols(Var a, int begin, int count);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var gather_rows(Var a, std::span<const int> index);
Var sum(Var a);
// Row lookup straight from a parameter table; gradients are scattered into
// the touched rows only, and the table itself is never copied onto the tape.
Var embedding(Graph& g, Parameter& table, std::span<const int> index);
// Row-wise outer product: out(n, i*q + j) = a(n, i) * b(n, j).
Var outer_rows(Var a, Var b);
// Summed softmax cross-entropy of each row against its target class;
// targets < 0 are ignored.
Var cross_entropy(Var logits, std::span<const int> targets);

}  // namespace plug::nn
