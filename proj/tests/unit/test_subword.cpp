#include <algorithm>

#include "doctest.h"
#include "plug/error.hpp"
#include "plug/subword.hpp"
#include "plug/text.hpp"

using namespace plug;
using namespace plug::subword;

namespace {
bool has(const Vocab& v, const std::string& piece) { return v.find(piece).has_value(); }
}  // namespace

TEST_CASE("most frequent pair merges first") {
  // Pairs: (a,a) x3, (a,b) x2. The alphabet takes 4 positional forms, so a
  // target of 10 leaves room for two merges.
  const auto v = Vocab::train("aaab aab", 10);
  CHECK(v.size() == 10);
  CHECK(has(v, "a"));
  CHECK(has(v, "##a"));
  CHECK(has(v, "##b"));
  CHECK(v.piece(kNumSpecials + 4) == "aa");
}

TEST_CASE("single-character corpus") {
  const auto v = Vocab::train("x x x x", 50);
  CHECK(v.size() == kNumSpecials + 2);
  CHECK(has(v, "x"));
  CHECK(has(v, "##x"));
}

TEST_CASE("training is deterministic") {
  const std::string corpus = "the cat sat on the mat , the hat sat";
  CHECK(Vocab::train(corpus, 40, 3).pieces() == Vocab::train(corpus, 40, 3).pieces());
}

TEST_CASE("target below the alphabet is rejected") {
  CHECK_THROWS_AS(Vocab::train("abc", 6), DataError);
}

TEST_CASE("longest match wins") {
  const auto v = Vocab::from_text("<s>\n</s>\n<pad>\n<unk>\nJo\n##hn\nJohn\n");
  const auto seq = tokenize(v, std::string_view("John"));
  REQUIRE(seq.size() == 1);
  CHECK(v.piece(seq.ids[0]) == "John");
}

TEST_CASE("offsets skip repeated whitespace") {
  const auto v = Vocab::from_text("<s>\n</s>\n<pad>\n<unk>\na\nb\n");
  const std::u32string input = U"a  b";
  const auto seq = tokenize(v, std::u32string_view(input));
  REQUIRE(seq.size() == 2);
  CHECK(seq.offsets[0] == std::pair{0, 1});
  CHECK(seq.offsets[1] == std::pair{3, 4});
  CHECK(seq.space_split_index == std::vector<int>{0, 1});
  CHECK(detokenize(seq, input) == input);
}

TEST_CASE("unknown characters map to <unk> with their offsets") {
  const auto v = Vocab::from_text("<s>\n</s>\n<pad>\n<unk>\nn\n");
  const auto seq = tokenize(v, std::string_view("n\xC3\xA9"));
  REQUIRE(seq.size() == 2);
  CHECK(seq.ids[1] == kUnk);
  CHECK(seq.offsets[0] == std::pair{0, 1});
  CHECK(seq.offsets[1] == std::pair{1, 2});
}

TEST_CASE("punctuation never merges with letters") {
  const auto v = Vocab::train("end. end. end. end.", 30);
  for (const auto& p : v.pieces()) {
    if (p.find('.') != std::string::npos) CHECK((p == "." || p == "##."));
  }
}

TEST_CASE("tokenize_units indexes units") {
  const auto v = Vocab::train("de la casa", 30);
  const auto seq = tokenize_units(v, {"de", "la", "casa"});
  CHECK(seq.space_split_index.back() == 2);
  CHECK(seq.offsets.back().second == 10);
}

TEST_CASE("chunk arithmetic") {
  CHECK(chunk(5, 7) == std::vector<PieceRange>{{0, 5}});
  CHECK(chunk(10, 7) == std::vector<PieceRange>{{0, 5}, {5, 10}});
  CHECK(chunk(0, 7).empty());
  const auto c = chunk(700, 512);
  REQUIRE(c.size() == 2);
  CHECK(c[0].size() == 510);
  CHECK(c[1].size() == 190);
  CHECK_THROWS_AS(chunk(4, 2), UsageError);
}

TEST_CASE("vocabulary file round trip") {
  const auto v = Vocab::train("alpha beta gamma delta", 40);
  CHECK(Vocab::from_text(v.to_text()) == v);
  CHECK_THROWS_AS(Vocab::from_text("<s>\n</s>\n"), DataError);
}
