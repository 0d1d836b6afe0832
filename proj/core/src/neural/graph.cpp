#include "plug/neural/graph.hpp"

#include <cmath>

#include "plug/error.hpp"

namespace plug::nn {

const Matrix& Var::value() const { return graph_->nodes_[static_cast<size_t>(id_)].value; }

bool Var::requires_grad() const {
  return graph_->nodes_[static_cast<size_t>(id_)].requires_grad;
}

Var Graph::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::param(Parameter& p) {
  Node n;
  n.value = p.value;
  n.requires_grad = !p.frozen;
  n.param = p.frozen ? nullptr : &p;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::custom(Matrix value, std::vector<Var> inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  for (const auto& v : inputs) {
    if (v.graph_ != this) throw UsageError("Var belongs to another graph");
    n.inputs.push_back(v.id_);
    n.requires_grad = n.requires_grad || nodes_[static_cast<size_t>(v.id_)].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Graph::backward(Var loss) {
  if (loss.graph_ != this || loss.value().size() != 1) {
    throw UsageError("backward() needs a 1x1 Var from this graph");
  }
  if (!std::isfinite(loss.scalar())) throw DataError("non-finite loss");
  auto& root = nodes_[static_cast<size_t>(loss.id_)];
  if (!root.requires_grad) return;
  root.grad = Matrix::Ones(1, 1);
  std::vector<Matrix*> in_grads;
  for (int i = loss.id_; i >= 0; --i) {
    auto& n = nodes_[static_cast<size_t>(i)];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.param != nullptr) {
      if (n.rows.empty()) {
        n.param->grad += n.grad;
      } else {
        for (size_t r = 0; r < n.rows.size(); ++r) {
          n.param->grad.row(n.rows[r]) += n.grad.row(static_cast<Eigen::Index>(r));
        }
      }
      continue;
    }
    if (!n.backward) continue;
    in_grads.clear();
    for (int j : n.inputs) {
      auto& in = nodes_[static_cast<size_t>(j)];
      if (!in.requires_grad) {
        in_grads.push_back(nullptr);
        continue;
      }
      if (in.grad.size() == 0) in.grad = Matrix::Zero(in.value.rows(), in.value.cols());
      in_grads.push_back(&in.grad);
    }
    n.backward(n.value, n.grad, in_grads);
  }
}

namespace {

void check_shape(bool ok, const char* op) {
  if (!ok) throw UsageError(std::string("shape mismatch in ") + op);
}

}  // namespace

Var matmul(Var a, Var b) {
  check_shape(a.cols() == b.rows(), "matmul");
  Matrix out = a.value() * b.value();
  const Matrix* av = &a.value();
  const Matrix* bv = &b.value();
  return a.graph().custom(std::move(out), {a, b},
                          [av, bv](const Matrix&, const Matrix& g, std::span<Matrix* const> in) {
                            if (in[0]) in[0]->noalias() += g * bv->transpose();
                            if (in[1]) in[1]->noalias() += av->transpose() * g;
                          });
}

Var matmul_nt(Var a, Var b) {
  check_shape(a.cols() == b.cols(), "matmul_nt");
  Matrix out = a.value() * b.value().transpose();
  const Matrix* av = &a.value();
  const Matrix* bv = &b.value();
  return a.graph().custom(std::move(out), {a, b},
                          [av, bv](const Matrix&, const Matrix& g, std::span<Matrix* const> in) {
                            if (in[0]) in[0]->noalias() += g * *bv;
                            if (in[1]) in[1]->noalias() += g.transpose() * *av;
                          });
}

Var add(Var a, Var b) {
  check_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add");
  return a.graph().custom(a.value() + b.value(), {a, b},
                          [](const Matrix&, const Matrix& g, std::span<Matrix* const> in) {
                            if (in[0]) *in[0] += g;
                            if (in[1]) *in[1] += g;
                          });
}

Var add_row(Var a, Var row) {
  check_shape(row.rows() == 1 && row.cols() == a.cols(), "add_row");
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return a.graph().custom(std::move(out), {a, row},
                          [](const Matrix&, const Matrix& g, std::span<Matrix* const> in) {
                            if (in[0]) *in[0] += g;
                            if (in[1]) *in[1] += g.colwise().sum();
                          });
}

Var sub(Var a, Var b) {
  check_shape(a.rows() == b.rows() && a.cols() == b.cols(), "sub");
  return a.graph().custom(a.value() - b.value(), {a, b},
                          [](const Matrix&, const Matrix& g, std::span<Matrix* const> in) {
                            if (in[0]) *in[0] += g;
                            if (in[1]) *in[1] -= g;
                          });
}

Var mul(Var a, Var b) {
  check_shape(a.rows() == b.rows() && a.cols() == b.cols(), "mul");
  const Matrix* av = &a.value();
  const Matrix* bv = &b.value();
  return a.graph().custom(a.value().cwiseProduct(b.value()), {a, b},
                          [av, bv](const Matrix&, const Matrix& g, std::span<Matrix* const> in) {
                            if (in[0]) *in[0] += g.cwiseProduct(*bv);
                            if (in[1]) *in[1] += g.cwiseProduct(*av);
                          });
}

Var scale(Var a, double s) {
  return a.graph().custom(a.value() * s, {a},
                          [s](const Matrix&, const Matrix& g, std::span<Matrix* const> in) {
                            if (in[0]) *in[0] += g * s;
                          });
}

Var one_minus(Var a) {
  Matrix out = (1.0 - a.value().array()).matrix();
  return a.graph().custom(std::move(out), {a},
                          [](const Matrix&, const Matrix& g, std::span<Matrix* const> in) {
                            if (in[0]) *in[0] -= g;
                          });
}

Var relu(Var a) {
  Matrix out = a.value().cwiseMax(0.0);
  return a.graph().custom(std::move(out), {a},
                          [](const Matrix& y, const Matrix& g, std::span<Matrix* const> in) {
                            if (in[0]) *in[0] += (y.array() > 0.0).select(g, 0.0).matrix();
                          });
}

Var tanh(Var a) {
  Matrix out = a.value().array().tanh().matrix();
  return a.graph().custom(std::move(out), {a},
                          [](const Matrix& y, const Matrix& g, std::span<Matrix* const> in) {
                            if (in[0]) *in[0] += (g.array() * (1.0 - y.array().square())).matrix();
                          });
}

Var sigmoid(Var a) {
  Matrix out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return a.graph().custom(std::move(out), {a},
                          [](const Matrix& y, const Matrix& g, std::span<Matrix* const> in) {
                            if (in[0]) *in[0] += (g.array() * y.array() * (1.0 - y.array())).matrix();
                          });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  const auto c = x.cols();
  check_shape(gain.rows() == 1 && gain.cols() == c && bias.rows() == 1 && bias.cols() == c,
              "layer_norm");
  const Matrix& xv = x.value();
  Matrix xhat(xv.rows(), c);
  Eigen::VectorXd inv_std(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double mean = xv.row(r).mean();
    const double var = (xv.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mean) * inv_std(r);
  }
  Matrix out = xhat;
  out.array().rowwise() *= gain.value().row(0).array();
  out.rowwise() += bias.value().row(0);
  const Matrix* gv = &gain.value();
  return x.graph().custom(
      std::move(out), {x, gain, bias},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), gv](
          const Matrix&, const Matrix& g, std::span<Matrix* const> in) {
        if (in[1]) *in[1] += g.cwiseProduct(xhat).colwise().sum();
        if (in[2]) *in[2] += g.colwise().sum();
        if (in[0]) {
          Matrix dxhat = g;
          dxhat.array().rowwise() *= gv->row(0).array();
          for (Eigen::Index r = 0; r < g.rows(); ++r) {
            const double m1 = dxhat.row(r).mean();
            const double m2 = dxhat.row(r).dot(xhat.row(r)) / static_cast<double>(g.cols());
            in[0]->row(r).array() +=
                inv_std(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
          }
        }
      });
}

Var softmax_rows(Var a) {
  Matrix out = a.value();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double m = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return a.graph().custom(std::move(out), {a},
                          [](const Matrix& y, const Matrix& g, std::span<Matrix* const> in) {
                            if (!in[0]) return;
                            const Eigen::VectorXd dots = (g.cwiseProduct(y)).rowwise().sum();
                            Matrix d = g;
                            d.colwise() -= dots;
                            *in[0] += d.cwiseProduct(y);
                          });
}

Var rows(Var a, int begin, int count) {
  check_shape(begin >= 0 && count >= 0 && begin + count <= a.rows(), "rows");
  Matrix out = a.value().middleRows(begin, count);
  return a.graph().custom(std::move(out), {a},
                          [begin, count](const Matrix&, const Matrix& g, std::span<Matrix* const> in) {
                            if (in[0]) in[0]->middleRows(begin, count) += g;
                          });
}

Var cols(Var a, int begin, int count) {
  check_shape(begin >= 0 && count >= 0 && begin + count <= a.cols(), "cols");
  Matrix out = a.value().middleCols(begin, count);
  return a.graph().custom(std::move(out), {a},
                          [begin, count](const Matrix&, const Matrix& g, std::span<Matrix* const> in) {
                            if (in[0]) in[0]->middleCols(begin, count) += g;
                          });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw UsageError("concat_rows of nothing");
  Eigen::Index total = 0;
  const auto c = parts[0].cols();
  for (const auto& p : parts) {
    check_shape(p.cols() == c, "concat_rows");
    total += p.rows();
  }
  Matrix out(total, c);
  std::vector<Eigen::Index> starts;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    starts.push_back(at);
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return parts[0].graph().custom(
      std::move(out), std::vector<Var>(parts.begin(), parts.end()),
      [starts = std::move(starts)](const Matrix&, const Matrix& g, std::span<Matrix* const> in) {
        for (size_t k = 0; k < in.size(); ++k) {
          if (in[k]) *in[k] += g.middleRows(starts[k], in[k]->rows());
        }
      });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw UsageError("concat_cols of nothing");
  Eigen::Index total = 0;
  const auto r = parts[0].rows();
  for (const auto& p : parts) {
    check_shape(p.rows() == r, "concat_cols");
    total += p.cols();
  }
  Matrix out(r, total);
  std::vector<Eigen::Index> starts;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    starts.push_back(at);
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return parts[0].graph().custom(
      std::move(out), std::vector<Var>(parts.begin(), parts.end()),
      [starts = std::move(starts)](const Matrix&, const Matrix& g, std::span<Matrix* const> in) {
        for (size_t k = 0; k < in.size(); ++k) {
          if (in[k]) *in[k] += g.middleCols(starts[k], in[k]->cols());
        }
      });
}

Var gather_rows(Var a, std::span<const int> index) {
  Matrix out(static_cast<Eigen::Index>(index.size()), a.cols());
  for (size_t i = 0; i < index.size(); ++i) {
    check_shape(index[i] >= 0 && index[i] < a.rows(), "gather_rows");
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(index[i]);
  }
  return a.graph().custom(std::move(out), {a},
                          [idx = std::vector<int>(index.begin(), index.end())](
                              const Matrix&, const Matrix& g, std::span<Matrix* const> in) {
                            if (!in[0]) return;
                            for (size_t i = 0; i < idx.size(); ++i) {
                              in[0]->row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
                            }
                          });
}

Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.graph().custom(std::move(out), {a},
                          [](const Matrix&, const Matrix& g, std::span<Matrix* const> in) {
                            if (in[0]) in[0]->array() += g(0, 0);
                          });
}

Var embedding(Graph& g, Parameter& table, std::span<const int> index) {
  Graph::Node n;
  n.value.resize(static_cast<Eigen::Index>(index.size()), table.value.cols());
  for (size_t i = 0; i < index.size(); ++i) {
    check_shape(index[i] >= 0 && index[i] < table.value.rows(), "embedding");
    n.value.row(static_cast<Eigen::Index>(i)) = table.value.row(index[i]);
  }
  n.requires_grad = !table.frozen;
  if (n.requires_grad) {
    n.param = &table;
    n.rows.assign(index.begin(), index.end());
  }
  g.nodes_.push_back(std::move(n));
  return Var(&g, static_cast<int>(g.nodes_.size()) - 1);
}

Var outer_rows(Var a, Var b) {
  check_shape(a.rows() == b.rows(), "outer_rows");
  const auto p = a.cols();
  const auto q = b.cols();
  Matrix out(a.rows(), p * q);
  for (Eigen::Index n = 0; n < a.rows(); ++n) {
    for (Eigen::Index i = 0; i < p; ++i) {
      out.block(n, i * q, 1, q) = a.value()(n, i) * b.value().row(n);
    }
  }
  const Matrix* av = &a.value();
  const Matrix* bv = &b.value();
  return a.graph().custom(std::move(out), {a, b},
                          [av, bv, p, q](const Matrix&, const Matrix& g, std::span<Matrix* const> in) {
                            for (Eigen::Index n = 0; n < g.rows(); ++n) {
                              for (Eigen::Index i = 0; i < p; ++i) {
                                const auto blk = g.row(n).segment(i * q, q);
                                if (in[0]) (*in[0])(n, i) += blk.dot(bv->row(n));
                                if (in[1]) in[1]->row(n) += (*av)(n, i) * blk;
                              }
                            }
                          });
}

Var cross_entropy(Var logits, std::span<const int> targets) {
  check_shape(static_cast<size_t>(logits.rows()) == targets.size(), "cross_entropy");
  const Matrix& z = logits.value();
  Matrix probs(z.rows(), z.cols());
  double loss = 0.0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double m = z.row(r).maxCoeff();
    probs.row(r) = (z.row(r).array() - m).exp().matrix();
    const double total = probs.row(r).sum();
    probs.row(r) /= total;
    const int t = targets[static_cast<size_t>(r)];
    if (t < 0) continue;
    check_shape(t < z.cols(), "cross_entropy target");
    loss += m + std::log(total) - z(r, t);
  }
  Matrix out(1, 1);
  out(0, 0) = loss;
  return logits.graph().custom(
      std::move(out), {logits},
      [probs = std::move(probs), t = std::vector<int>(targets.begin(), targets.end())](
          const Matrix&, const Matrix& g, std::span<Matrix* const> in) {
        if (!in[0]) return;
        for (Eigen::Index r = 0; r < probs.rows(); ++r) {
          const int target = t[static_cast<size_t>(r)];
          if (target < 0) continue;
          in[0]->row(r) += g(0, 0) * probs.row(r);
          (*in[0])(r, target) -= g(0, 0);
        }
      });
}

}  // namespace plug::nn
