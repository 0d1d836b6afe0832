#include <cmath>
#include <limits>

#include "doctest.h"
#include "plug/crf.hpp"
#include "plug/error.hpp"
#include "plug/neural/gradcheck.hpp"

using namespace plug;
using plug::nn::Matrix;

TEST_CASE("single step partition function") {
  Matrix e(1, 2);
  e << 0.3, -1.2;
  const Matrix t = Matrix::Zero(4, 4);
  CHECK(crf::log_partition(e, t) == doctest::Approx(std::log(std::exp(0.3) + std::exp(-1.2))).epsilon(1e-12));
}

TEST_CASE("zero scores count the legal paths") {
  // O, B-X, E-X, S-X over three steps: legal sequences are the words over
  // {O, S-X, [B-X E-X]}: 12 of them.
  const std::vector<std::string> labels{"O", "B-X", "E-X", "S-X"};
  const Matrix e = Matrix::Zero(3, 4);
  const Matrix t = crf::constraint_mask(labels);
  CHECK(crf::log_partition(e, t) == doctest::Approx(std::log(12.0)).epsilon(1e-12));
  const auto m = crf::marginals(e, t);
  CHECK(m.unary.rowwise().sum().isApprox(Matrix::Ones(3, 1)));
}

TEST_CASE("Viterbi follows strong legal evidence") {
  const std::vector<std::string> labels{"O", "B-X", "I-X", "E-X", "S-X"};
  const Matrix mask = crf::constraint_mask(labels);
  Matrix e = Matrix::Zero(2, 5);
  e(0, 1) = 5;
  e(1, 3) = 5;
  CHECK(crf::viterbi(e, mask).path == std::vector<int>{1, 3});
}

TEST_CASE("Viterbi never returns an illegal path") {
  const std::vector<std::string> labels{"O", "B-X", "I-X", "E-X", "S-X"};
  const Matrix mask = crf::constraint_mask(labels);
  Matrix e = Matrix::Zero(2, 5);
  e(0, 0) = 5;  // O then I-X is forbidden
  e(1, 2) = 5;
  const auto v = crf::viterbi(e, mask);
  CHECK(std::isfinite(v.score));
  CHECK(v.path != std::vector<int>{0, 2});
  CHECK(std::isfinite(crf::path_score(e, mask, v.path)));
}

TEST_CASE("constraint mask") {
  const auto m = crf::constraint_mask({"O", "B-X", "I-X", "E-X", "S-X"});
  const int start = crf::start_index(5), stop = crf::stop_index(5);
  CHECK(std::isinf(m(start, 2)));  // START -> I-X
  CHECK(m(start, 1) == 0.0);       // START -> B-X
  CHECK(std::isinf(m(1, stop)));   // B-X -> STOP
  CHECK(m(3, stop) == 0.0);        // E-X -> STOP
  CHECK(std::isinf(m(1, 0)));      // B-X -> O
  CHECK_THROWS_AS(crf::constraint_mask({"O", "U-X"}), DataError);
}

TEST_CASE("NLL gradient") {
  const auto mask = crf::constraint_mask({"O", "B-X", "I-X", "E-X", "S-X"});
  nn::ParamStore store;
  nn::Rng rng(3);
  auto& e = store.add("e", nn::uniform(4, 5, 1.0, rng));
  auto& t = store.add("t", nn::uniform(7, 7, 1.0, rng));
  const std::vector<int> gold{1, 2, 3, 0};
  const auto r = nn::grad_check([&](nn::Graph& g) { return crf::nll(g, g.param(e), g.param(t), mask, gold); },
                                store.all());
  CHECK(r.max_rel_error < 1e-4);
  nn::Graph g;
  const double nll = crf::nll(g, g.param(e), g.param(t), mask, gold).scalar();
  Matrix full = t.value + mask;
  CHECK(nll == doctest::Approx(crf::log_partition(e.value, full) - crf::path_score(e.value, full, gold)));
}
