#include "doctest.h"
#include "plug/error.hpp"
#include "plug/seq2seq.hpp"
#include "plug/text.hpp"

using namespace plug;
using namespace plug::seq2seq;

TEST_CASE("dictionary keeps the most frequent output") {
  const auto t = Transducer::build({{"ran", "VERB", "run"}, {"ran", "VERB", "run"}, {"ran", "VERB", "ran"}}, {});
  const auto r = t.transduce("ran", "VERB");
  CHECK(r.output == "run");
  CHECK(r.source == Source::dictionary);
  CHECK(name(Source::dictionary) == "dictionary");
  CHECK_THROWS_AS(Transducer::build({}, {}), DataError);
  CHECK_THROWS_AS(Transducer::build({{"", "_", "x"}}, {}), DataError);
}

TEST_CASE("lowercased keys and acronyms") {
  TransducerConfig c;
  c.lowercase_keys = true;
  const auto t = Transducer::build({{"Dogs", "NOUN", "dog"}}, c);
  CHECK(t.transduce("dogs", "NOUN").output == "dog");
  const auto a = t.transduce("NASA", "NOUN");
  CHECK(a.output == "NASA");
  CHECK(a.source == Source::identity);
}

TEST_CASE("multi-word token expansion") {
  const auto t = Transducer::build({{"del", "_", "de el"}, {"al", "_", "a el"}}, {});
  CHECK(expand_mwt(t, "del") == std::vector<std::string>{"de", "el"});
  CHECK(expand_mwt(t, "al") == std::vector<std::string>{"a", "el"});
}

TEST_CASE("the model learns a suffix rule") {
  // 100 verb forms ending in "a" whose lemma swaps the ending for "ar".
  const std::string consonants = "bdfgklmnprstv";
  const std::string vowels = "aeiou";
  std::vector<TransducerPair> pairs;
  for (size_t i = 0; pairs.size() < 100; ++i) {
    std::string stem;
    stem += consonants[i % consonants.size()];
    stem += vowels[(i / consonants.size()) % vowels.size()];
    stem += consonants[(i * 7 + 3) % consonants.size()];
    pairs.push_back({stem + "a", "VERB", stem + "ar"});
  }
  TransducerConfig c;
  c.epochs = 200;
  const auto t = Transducer::train(pairs, c);
  int correct = 0;
  for (const auto& p : pairs) {
    const auto out = text::encode(t.decode(text::decode(p.input), p.tag));
    correct += out == p.output ? 1 : 0;
  }
  CHECK(correct >= 99);
}

TEST_CASE("save and restore") {
  const auto t = Transducer::train({{"ab", "_", "ba"}, {"cd", "_", "dc"}}, TransducerConfig{.epochs = 2});
  io::TensorFile f;
  t.append_tensors(f, "lemma.");
  const auto r = Transducer::restore(t.metadata_json(), f, "lemma.");
  CHECK(r.dictionary() == t.dictionary());
  CHECK(r.decode(U"xy", "_") == t.decode(U"xy", "_"));
}
