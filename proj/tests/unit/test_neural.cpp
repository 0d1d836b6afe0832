#include <cmath>

#include "doctest.h"
#include "plug/neural/gradcheck.hpp"
#include "plug/neural/layers.hpp"
#include "plug/neural/optim.hpp"

using namespace plug;
using namespace plug::nn;

TEST_CASE("sum of squares gradient") {
  ParamStore store;
  Matrix theta(1, 3);
  theta << 1, 2, 3;
  auto& p = store.add("theta", theta);
  Graph g;
  Var x = g.param(p);
  g.backward(sum(mul(x, x)));
  CHECK(p.grad(0, 0) == 2.0);
  CHECK(p.grad(0, 1) == 4.0);
  CHECK(p.grad(0, 2) == 6.0);
  p.grad.setZero();
  const auto r = grad_check([&](Graph& h) { Var y = h.param(p); return sum(mul(y, y)); }, {&p});
  CHECK(r.max_rel_error < 1e-8);
}

TEST_CASE("cross-entropy of equal logits") {
  ParamStore store;
  auto& p = store.add("logits", Matrix::Zero(1, 2));
  Graph g;
  const std::vector<int> target{0};
  g.backward(cross_entropy(g.param(p), target));
  CHECK(p.grad(0, 0) == doctest::Approx(-0.5));
  CHECK(p.grad(0, 1) == doctest::Approx(0.5));
  p.grad.setZero();
  CHECK(grad_check([&](Graph& h) { return cross_entropy(h.param(p), target); }, {&p}).max_rel_error < 1e-8);
}

TEST_CASE("negative targets are ignored") {
  ParamStore store;
  Rng rng(1);
  auto& p = store.add("logits", uniform(3, 4, 1.0, rng));
  Graph g;
  const std::vector<int> all{1, -1, 2};
  const std::vector<int> rows_kept{1, 2};
  const double masked = cross_entropy(g.param(p), all).scalar();
  const double kept = cross_entropy(gather_rows(g.param(p), std::vector<int>{0, 2}), rows_kept).scalar();
  CHECK(masked == doctest::Approx(kept));
}

TEST_CASE("first Adam step moves by the learning rate") {
  ParamStore store;
  auto& p = store.add("w", Matrix::Zero(1, 1));
  p.grad = Matrix::Constant(1, 1, 1.0);
  Adam adam({.lr = 0.1});
  adam.step({&p});
  CHECK(p.value(0, 0) == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(p.grad(0, 0) == 0.0);
}

TEST_CASE("frozen parameters keep their bits") {
  ParamStore store;
  auto& p = store.add("w", Matrix::Constant(2, 2, 0.25));
  p.frozen = true;
  p.grad = Matrix::Constant(2, 2, 3.0);
  Adam adam;
  adam.step({&p});
  CHECK(p.value == Matrix::Constant(2, 2, 0.25));
}

TEST_CASE("Adam matches a reference implementation") {
  // Reference: textbook bias-corrected Adam, three steps with grads 1, 0, 0.
  const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double theta = 0.5, m = 0, v = 0;
  const double grads[] = {1.0, 0.0, 0.0};
  ParamStore store;
  auto& p = store.add("w", Matrix::Constant(1, 1, 0.5));
  Adam adam({.lr = lr, .beta1 = b1, .beta2 = b2, .eps = eps, .clip_norm = 0.0});
  for (int t = 1; t <= 3; ++t) {
    const double gr = grads[t - 1];
    m = b1 * m + (1 - b1) * gr;
    v = b2 * v + (1 - b2) * gr * gr;
    theta -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
    p.grad = Matrix::Constant(1, 1, gr);
    adam.step({&p});
    CHECK(p.value(0, 0) == doctest::Approx(theta).epsilon(1e-12));
  }
}

TEST_CASE("warmup schedule") {
  CHECK(warmup_schedule(0, 100) == doctest::Approx(0.1));
  CHECK(warmup_schedule(9, 100) == doctest::Approx(1.0));
  CHECK(warmup_schedule(99, 100) >= 0.1);
}

TEST_CASE("attention over a single position") {
  ParamStore store;
  Rng rng(2);
  const auto attn = MultiHeadAttention::init(store, "a", 8, 2, rng);
  Graph g;
  const Var out = attn(g, g.constant(uniform(1, 8, 1.0, rng)));
  CHECK(out.value().allFinite());
  CHECK(out.rows() == 1);
}

TEST_CASE("equal input rows give equal output rows") {
  ParamStore store;
  Rng rng(3);
  const auto layer = TransformerLayer::init(store, "l", 8, 2, 16, rng);
  Matrix x = uniform(4, 8, 1.0, rng);
  x.row(3) = x.row(1);
  Graph g;
  const Matrix y = layer(g, g.constant(x)).value();
  CHECK(y.row(3) == y.row(1));
}

TEST_CASE("two transformer layers pass a gradient check") {
  ParamStore store;
  Rng rng(4);
  const auto l1 = TransformerLayer::init(store, "l1", 16, 4, 32, rng);
  const auto l2 = TransformerLayer::init(store, "l2", 16, 4, 32, rng);
  const Matrix x = uniform(5, 16, 1.0, rng);
  const Matrix w = uniform(5, 16, 1.0, rng);
  const auto r = grad_check(
      [&](Graph& g) { return sum(mul(l2(g, l1(g, g.constant(x))), g.constant(w))); }, store.all());
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("GRU cell gradient") {
  ParamStore store;
  Rng rng(5);
  const auto cell = GruCell::init(store, "gru", 3, 4, rng);
  const Matrix x = uniform(1, 3, 1.0, rng);
  const Matrix h = uniform(1, 4, 1.0, rng);
  const auto r = grad_check([&](Graph& g) { return sum(cell(g, g.constant(x), g.constant(h))); }, store.all());
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("sparse embedding gradient touches looked-up rows only") {
  ParamStore store;
  Rng rng(6);
  auto& table = store.add("emb", uniform(5, 3, 1.0, rng));
  Graph g;
  const std::vector<int> ids{1, 3, 1};
  g.backward(sum(embedding(g, table, ids)));
  CHECK(table.grad.row(0).isZero());
  CHECK(table.grad.row(2).isZero());
  CHECK(table.grad(1, 0) == 2.0);
  CHECK(table.grad(3, 0) == 1.0);
}

TEST_CASE("clone is deep and bitwise equal") {
  ParamStore store;
  Rng rng(7);
  store.add("a", uniform(2, 2, 1.0, rng));
  auto copy = store.clone();
  CHECK(bitwise_equal(store, copy));
  copy.at("a").value(0, 0) += 1.0;
  CHECK_FALSE(bitwise_equal(store, copy));
}
