#include "doctest.h"
#include "fixtures.hpp"
#include "plug/error.hpp"
#include "plug/pipeline.hpp"
#include "plug/trainer.hpp"

using namespace plug;
using pipeline::Pipeline;

namespace {

std::shared_ptr<const encoder::BaseEncoder> shared_encoder() {
  static auto e = std::make_shared<const encoder::BaseEncoder>(
      encoder::BaseEncoder::from_tensor_file(fixtures::tiny_base().encoder.to_tensor_file()));
  return e;
}

std::shared_ptr<const subword::Vocab> shared_vocab() {
  static auto v = std::make_shared<const subword::Vocab>(fixtures::tiny_base().vocab);
  return v;
}

pkg::LanguageBundle bundle(const std::string& lang, std::set<std::string> components) {
  const auto& base = fixtures::tiny_base();
  train::TrainConfig c;
  c.components = std::move(components);
  c.splitter_epochs = c.tagparse_epochs = c.ner_epochs = 1;
  c.mwt.epochs = c.lemma.epochs = 1;
  auto corpus = toy::generate({.code = lang}, 8, 2);
  auto r = train::train(base.encoder, base.vocab, base.checksum,
                        {{lang, lang + "_t", corpus.sentences, corpus.ner}}, c);
  return std::move(r.bundles.front());
}

}  // namespace

TEST_CASE("empty text gives an empty document") {
  Pipeline p(shared_encoder(), shared_vocab());
  p.add_bundle(bundle("aa", {"splitter", "tagparse"}));
  const auto d = p.annotate("aa", "");
  CHECK(d.sentences.empty());
  CHECK(d.language == "aa");
}

TEST_CASE("missing components are skipped with a notice") {
  Pipeline p(shared_encoder(), shared_vocab());
  p.add_bundle(bundle("aa", {"tagparse"}));
  const auto d = p.annotate("aa", "Lo vido .");
  REQUIRE(d.sentences.size() == 1);
  CHECK(d.sentences[0].tokens.size() == 3);
  CHECK(std::find(d.notices.begin(), d.notices.end(), "splitter skipped: bundle has no splitter") !=
        d.notices.end());
  CHECK(std::find(d.notices.begin(), d.notices.end(), "ner skipped: bundle has no NER model") != d.notices.end());
  for (const auto& t : d.sentences[0].tokens) CHECK_FALSE(t.words.front().upos.empty());
}

TEST_CASE("pretokenized input keeps the given tokens") {
  Pipeline p(shared_encoder(), shared_vocab());
  p.add_bundle(bundle("aa", {"splitter", "tagparse"}));
  const auto d = p.annotate_pretokenized("aa", {{"uno", "dos"}, {"tres"}});
  REQUIRE(d.sentences.size() == 2);
  CHECK(d.sentences[0].tokens.size() == 2);
  CHECK(d.sentences[1].tokens[0].text == "tres");
  CHECK(d.sentences[0].tokens[0].words.size() == 1);
  CHECK(d.sentences[1].tokens[0].words[0].head == 0);
  CHECK(std::find(d.notices.begin(), d.notices.end(), "splitter bypassed: pretokenized input") !=
        d.notices.end());
}

TEST_CASE("unknown languages are a usage error") {
  Pipeline p(shared_encoder(), shared_vocab());
  CHECK_THROWS_AS(p.annotate("zz", "x"), UsageError);
}

TEST_CASE("least recently used bundles are evicted over budget") {
  auto a = bundle("aa", {"tagparse"});
  const size_t bytes = pkg::encode_bundle(a).size();
  Pipeline p(shared_encoder(), shared_vocab(), {.bundle_budget_bytes = 2 * bytes + bytes / 2});
  p.add_bundle(std::move(a), bytes);
  p.add_bundle(bundle("bb", {"tagparse"}), bytes);
  p.annotate("aa", "x");  // bb is now the oldest
  p.add_bundle(bundle("cc", {"tagparse"}), bytes);
  CHECK(p.loaded_languages() == std::vector<std::string>{"aa", "cc"});
  CHECK_FALSE(p.registry().contains("bb", encoder::Component::tagparse));
  CHECK(p.memory_report().bundle_bytes.size() == 2);
}

TEST_CASE("timing report covers every stage") {
  Pipeline p(shared_encoder(), shared_vocab());
  p.add_bundle(bundle("aa", {"splitter", "tagparse"}));
  const auto t = p.timing_report("aa", {"Lo vido .", "Ella come ."});
  std::vector<std::string> names;
  for (const auto& [n, c] : t.components) names.push_back(n);
  CHECK(std::find(names.begin(), names.end(), "encoder") != names.end());
  CHECK(std::find(names.begin(), names.end(), "tagparse") != names.end());
  CHECK(t.total.tokens > 0);
  CHECK(t.to_text().find("tokens/s") != std::string::npos);
  CHECK_THROWS_AS(p.timing_report("aa", {}), UsageError);
}

TEST_CASE("timing lists all six stages and marks missing ones skipped") {
  Pipeline p(shared_encoder(), shared_vocab());
  p.add_bundle(bundle("aa", {"splitter", "tagparse"}));
  const auto t = p.timing_report("aa", {"Lo vido ."});
  std::map<std::string, pipeline::ComponentTiming> by_name(t.components.begin(), t.components.end());
  for (const char* n : {"encoder", "splitter", "mwt", "tagparse", "lemma", "ner"}) CHECK(by_name.count(n) == 1);
  CHECK(by_name["ner"].skipped);
  CHECK(by_name["lemma"].skipped);
  CHECK_FALSE(by_name["tagparse"].skipped);
  CHECK(t.to_json().find("\"ner\"") != std::string::npos);
}

TEST_CASE("doubling the corpus roughly doubles the time") {
  Pipeline p(shared_encoder(), shared_vocab());
  p.add_bundle(bundle("aa", {"splitter", "tagparse", "lemma"}));
  const auto corpus = toy::generate({.code = "aa"}, 80, 9);
  std::vector<std::string> texts;
  for (const auto& s : corpus.sentences) texts.push_back(*s.comment_value("text"));
  const std::vector<std::string> half(texts.begin(), texts.begin() + 40);
  p.timing_report("aa", half);  // warm up
  const double t1 = p.timing_report("aa", half).total.seconds;
  const double t2 = p.timing_report("aa", texts).total.seconds;
  CHECK(t2 / t1 >= 1.0);
  CHECK(t2 / t1 <= 3.0);
}

TEST_CASE("annotation is repeatable and survives packaging") {
  const auto& base = fixtures::tiny_base();
  auto b = bundle("aa", {"splitter", "mwt", "tagparse", "lemma", "ner"});
  const auto dir = fixtures::scratch("pipeline_pkg");
  pkg::write_base(dir.string(), base.encoder, base.vocab);
  pkg::write_bundle(dir.string(), b);

  Pipeline mem(shared_encoder(), shared_vocab());
  mem.add_bundle(std::move(b));
  const std::string text = "Lo vido del mar. Ella come !";
  const auto first = mem.annotate("aa", text);
  CHECK(mem.annotate("aa", text) == first);

  auto disk = Pipeline::load(dir.string(), {"aa"});
  CHECK(disk.annotate("aa", text) == first);
  CHECK(doc::to_json(disk.annotate("aa", text)) == doc::to_json(first));
}
