#include "doctest.h"
#include "fixtures.hpp"
#include "plug/error.hpp"
#include "plug/trainer.hpp"

using namespace plug;

namespace {

std::vector<train::TreebankData> two_treebanks() {
  auto a = toy::generate({.code = "aa"}, 8, 1);
  auto b = toy::generate({.code = "bb", .order = toy::Order::sov, .xpos_prefix = "b"}, 8, 2);
  return {{"aa", "aa_t", a.sentences, a.ner}, {"bb", "bb_t", b.sentences, b.ner}};
}

train::TrainConfig quick(pkg::TrainMode mode, std::set<std::string> components) {
  train::TrainConfig c;
  c.mode = mode;
  c.components = std::move(components);
  c.splitter_epochs = c.tagparse_epochs = c.ner_epochs = 1;
  c.mwt.epochs = c.lemma.epochs = 1;
  return c;
}

}  // namespace

TEST_CASE("training is deterministic") {
  const auto& base = fixtures::tiny_base();
  const auto data = two_treebanks();
  const auto c = quick(pkg::TrainMode::adapters, {"splitter", "tagparse", "ner", "lemma", "mwt"});
  const auto r1 = train::train(base.encoder, base.vocab, base.checksum, data, c);
  const auto r2 = train::train(base.encoder, base.vocab, base.checksum, data, c);
  REQUIRE(r1.bundles.size() == 2);
  for (size_t i = 0; i < 2; ++i) {
    CHECK(pkg::encode_bundle(r1.bundles[i]) == pkg::encode_bundle(r2.bundles[i]));
  }
}

TEST_CASE("adapter mode trains one adapter set per encoder component") {
  const auto& base = fixtures::tiny_base();
  const auto r = train::train(base.encoder, base.vocab, base.checksum, two_treebanks(),
                              quick(pkg::TrainMode::adapters, {"splitter", "tagparse", "ner"}));
  for (const auto& b : r.bundles) {
    CHECK(b.adapters.size() == 3);
    CHECK(b.mode == pkg::TrainMode::adapters);
  }
  const auto none = train::train(base.encoder, base.vocab, base.checksum, two_treebanks(),
                                 quick(pkg::TrainMode::no_adapters, {"tagparse"}));
  for (const auto& b : none.bundles) CHECK(b.adapters.empty());
}

TEST_CASE("multilingual mode shares heads and namespaces XPOS") {
  const auto& base = fixtures::tiny_base();
  const auto r = train::train(base.encoder, base.vocab, base.checksum, two_treebanks(),
                              quick(pkg::TrainMode::multilingual, {"tagparse"}));
  REQUIRE(r.bundles.size() == 2);
  const auto& a = r.bundles[0];
  CHECK(a.xpos_namespaces == std::vector<std::string>{"aa_t", "bb_t"});
  REQUIRE(a.tagparse);
  const auto& names = a.tagparse->vocabs.xpos.names();
  CHECK(std::all_of(names.begin(), names.end(),
                    [](const std::string& n) { return n.rfind("aa_t:", 0) == 0 || n.rfind("bb_t:", 0) == 0; }));
  CHECK(a.tagparse->vocabs.xpos == r.bundles[1].tagparse->vocabs.xpos);
}

TEST_CASE("input checks") {
  const auto& base = fixtures::tiny_base();
  auto one = two_treebanks();
  one.pop_back();
  CHECK_THROWS_AS(train::train(base.encoder, base.vocab, base.checksum, one,
                               quick(pkg::TrainMode::multilingual, {"tagparse"})),
                  UsageError);
  CHECK_THROWS_AS(train::train(base.encoder, base.vocab, base.checksum, {}, quick(pkg::TrainMode::adapters, {})),
                  UsageError);
  auto empty = two_treebanks();
  empty[0].sentences.clear();
  CHECK_THROWS_AS(train::train(base.encoder, base.vocab, base.checksum, empty,
                               quick(pkg::TrainMode::adapters, {"tagparse"})),
                  DataError);
}

TEST_CASE("merging adds components without dropping others") {
  const auto& base = fixtures::tiny_base();
  auto a = train::train(base.encoder, base.vocab, base.checksum, two_treebanks(),
                        quick(pkg::TrainMode::adapters, {"tagparse"}));
  auto b = train::train(base.encoder, base.vocab, base.checksum, two_treebanks(),
                        quick(pkg::TrainMode::adapters, {"lemma"}));
  auto target = std::move(a.bundles[0]);
  train::merge_into(target, std::move(b.bundles[0]));
  CHECK(target.has("tagparse"));
  CHECK(target.has("lemma"));
  CHECK_THROWS_AS(train::merge_into(target, std::move(b.bundles[1])), UsageError);
}
