#include <cmath>

#include "doctest.h"
#include "plug/encoder.hpp"
#include "plug/error.hpp"
#include "plug/neural/gradcheck.hpp"
#include "plug/tensor_io.hpp"

using namespace plug;
using namespace plug::encoder;

namespace {

subword::WordpieceSeq ids_to_seq(int count, int vocab, uint64_t seed) {
  std::mt19937_64 rng(seed);
  subword::WordpieceSeq seq;
  for (int i = 0; i < count; ++i) {
    seq.ids.push_back(subword::kNumSpecials + static_cast<int>(rng() % static_cast<uint64_t>(vocab - 4)));
    seq.offsets.emplace_back(2 * i, 2 * i + 1);
    seq.space_split_index.push_back(i);
  }
  return seq;
}

EncoderConfig tiny() { return {.vocab_size = 30, .dim = 16, .layers = 2, .heads = 4, .ffn_dim = 32, .max_len = 16}; }

}  // namespace

TEST_CASE("all-zero projections leave the residual") {
  nn::ParamStore store;
  AdapterLayer layer{nn::LayerNorm::init(store, "n", 4), nn::Linear::init_zero(store, "d", 4, 2),
                     nn::Linear::init_zero(store, "u", 2, 4)};
  nn::Rng rng(1);
  const nn::Matrix r = nn::uniform(3, 4, 2.0, rng);
  nn::Graph g;
  CHECK(adapter_forward(g, g.constant(r), layer).value() == r);
}

TEST_CASE("bottleneck of one on a centered input") {
  // LayerNorm maps (1, -1) to (c, -c); a Down row of ones sums that to 0,
  // ReLU keeps 0 and Up adds nothing back.
  nn::ParamStore store;
  AdapterLayer layer{nn::LayerNorm::init(store, "n", 2), nn::Linear::init_zero(store, "d", 2, 1),
                     nn::Linear::init_zero(store, "u", 1, 2)};
  layer.down.weight->value.setOnes();
  layer.up.weight->value.setOnes();
  nn::Matrix r(1, 2);
  r << 1, -1;
  nn::Graph g;
  CHECK(adapter_forward(g, g.constant(r), layer).value() == r);
}

TEST_CASE("adapter gradients with a frozen encoder") {
  const auto base = BaseEncoder::init(tiny(), 2);
  auto adapter = AdapterSet::init("xx", Component::ner, 16, 4, 2, 3);
  nn::Rng rng(4);
  for (auto* p : adapter.params().all()) p->value += nn::uniform(static_cast<int>(p->value.rows()), static_cast<int>(p->value.cols()), 0.3, rng);
  const auto seq = ids_to_seq(5, 30, 5);
  const nn::Matrix w = nn::uniform(5, 16, 1.0, rng);
  const auto r = nn::grad_check(
      [&](nn::Graph& g) { return nn::sum(nn::mul(encode_graph(g, base, &adapter, seq).reps, g.constant(w))); },
      adapter.params().all());
  CHECK(r.max_rel_error < 1e-4);
  for (const auto* p : base.params().all()) {
    CHECK(p->frozen);
    CHECK((p->grad.size() == 0 || p->grad.isZero()));
  }
}

TEST_CASE("fresh adapters do not change the encoding") {
  const auto base = BaseEncoder::init(tiny(), 6);
  const auto adapter = AdapterSet::init("xx", Component::splitter, 16, 4, 2, 7);
  const auto seq = ids_to_seq(30, 30, 8);
  const auto a = encode(base, &adapter, seq);
  const auto b = encode(base, nullptr, seq);
  CHECK(a.reps == b.reps);
}

TEST_CASE("long inputs are chunked") {
  const auto base = BaseEncoder::init({.vocab_size = 30}, 9);
  const auto enc = encode(base, nullptr, ids_to_seq(700, 30, 10));
  CHECK(enc.reps.rows() == 700);
  REQUIRE(enc.chunks.size() == 2);
  CHECK(enc.chunks[0].size() == 510);
  CHECK(enc.chunks[1].size() == 190);
  CHECK(enc.cls.size() == 2);
}

TEST_CASE("out-of-range ids are rejected") {
  const auto base = BaseEncoder::init(tiny(), 11);
  auto seq = ids_to_seq(3, 30, 12);
  seq.ids[1] = 30;
  CHECK_THROWS(encode(base, nullptr, seq));
}

TEST_CASE("registry holds every language and component pair") {
  const auto base = BaseEncoder::init(tiny(), 13);
  AdapterRegistry reg;
  uint64_t seed = 20;
  for (const char* lang : {"en", "fr", "vi"}) {
    for (auto c : kAllComponents) reg.register_adapter(AdapterSet::init(lang, c, 16, 4, 2, seed++));
  }
  CHECK(reg.size() == 9);
  CHECK(reg.activate("en", Component::splitter).component() == Component::splitter);
  const auto splitter_before = reg.find("en", Component::splitter)->params().clone();
  reg.activate("en", Component::ner);
  CHECK(reg.active()->component() == Component::ner);
  CHECK(nn::bitwise_equal(splitter_before, reg.find("en", Component::splitter)->params()));
  try {
    reg.activate("xx", Component::tagparse);
    FAIL("no error");
  } catch (const UsageError& e) {
    const std::string what = e.what();
    CHECK(what.find("xx") != std::string::npos);
    CHECK(what.find("tagparse") != std::string::npos);
  }
  reg.deactivate();
  CHECK_THROWS_AS(encode(base, reg, ids_to_seq(3, 30, 14)), UsageError);
}

TEST_CASE("adapter is small next to the encoder") {
  const auto base = BaseEncoder::init({.vocab_size = 1000}, 15);
  const auto adapter = AdapterSet::init("xx", Component::tagparse, 64, 16, 2, 16);
  CHECK(adapter.bottleneck() < base.config().dim);
  CHECK(adapter.parameter_count() * 10 < base.params().scalar_count());
}

TEST_CASE("tensor files round trip and detect corruption") {
  const auto base = BaseEncoder::init(tiny(), 17);
  const auto bytes = io::encode(base.to_tensor_file());
  const auto back = BaseEncoder::from_tensor_file(io::decode(bytes, "enc.bin"));
  CHECK(nn::bitwise_equal(base.params(), back.params()));
  auto tampered = bytes;
  tampered[bytes.size() / 2] ^= 0x01;
  try {
    io::decode(tampered, "enc.bin");
    FAIL("no error");
  } catch (const ChecksumError& e) {
    CHECK(std::string(e.what()).find("enc.bin") != std::string::npos);
  }
}

TEST_CASE("adapter sets survive serialization") {
  const auto a = AdapterSet::init("fr", Component::tagparse, 16, 4, 2, 18);
  io::TensorFile f;
  a.append_to(f);
  CHECK(f.tensors.front().first.rfind("adapter.fr.tagparse.", 0) == 0);
  const auto b = AdapterSet::from_tensor_file(f, "fr", Component::tagparse);
  CHECK(nn::bitwise_equal(a.params(), b.params()));
  CHECK_THROWS_AS(AdapterSet::from_tensor_file(f, "de", Component::tagparse), DataError);
}

TEST_CASE("pretraining lowers the masked-piece loss and refreezes") {
  auto vocab = subword::Vocab::train("la casa roja , el perro negro . un gato come .", 60);
  auto base = BaseEncoder::init({.vocab_size = vocab.size(), .dim = 16, .layers = 1, .heads = 2, .ffn_dim = 32}, 19);
  std::vector<std::string> sentences(40, "la casa roja , el perro negro . un gato come .");
  const auto report = pretrain(base, vocab, sentences, {.epochs = 6, .batch_sentences = 8, .lr = 1e-2});
  REQUIRE(report.epoch_loss.size() == 6);
  CHECK(report.epoch_loss.back() < report.epoch_loss.front());
  for (const auto* p : base.params().all()) CHECK(p->frozen);
}
