#include "doctest.h"
#include "plug/error.hpp"
#include "plug/ner.hpp"
#include "plug/scorer.hpp"

using namespace plug;
using namespace plug::ner;

TEST_CASE("BIOES tags to spans") {
  CHECK(bioes_to_spans({"O", "S-PER", "O"}).spans == std::vector<EntitySpan>{{"PER", 1, 1}});
  CHECK(bioes_to_spans({"B-ORG", "I-ORG", "E-ORG"}).spans == std::vector<EntitySpan>{{"ORG", 0, 2}});
  CHECK(bioes_to_spans({}).spans.empty());
  CHECK(bioes_to_spans({"B-ORG", "I-ORG", "E-ORG"}).repairs == 0);
}

TEST_CASE("illegal runs are repaired and counted") {
  const auto d = bioes_to_spans({"I-LOC", "E-LOC", "B-PER"});
  CHECK(d.spans == std::vector<EntitySpan>{{"LOC", 0, 1}, {"PER", 2, 2}});
  CHECK(d.repairs == 2);
}

TEST_CASE("spans back to tags") {
  const std::vector<EntitySpan> spans{{"LOC", 0, 1}, {"PER", 3, 3}};
  const auto tags = spans_to_bioes(spans, 5);
  CHECK(tags == std::vector<std::string>{"B-LOC", "E-LOC", "O", "S-PER", "O"});
  CHECK(bioes_to_spans(tags).spans == spans);
}

TEST_CASE("BIO input converts to BIOES") {
  CHECK(to_bioes({"B-PER", "I-PER", "O", "B-LOC", "I-LOC", "I-LOC", "I-ORG"}) ==
        std::vector<std::string>{"B-PER", "E-PER", "O", "B-LOC", "I-LOC", "E-LOC", "S-ORG"});
}

TEST_CASE("two-column corpus") {
  const std::string text = "Juan\tB-PER\nvive\tO\n\nRoma\tB-LOC\n\n";
  const auto c = parse_corpus(text);
  REQUIRE(c.size() == 2);
  CHECK(c[0].tokens == std::vector<std::string>{"Juan", "vive"});
  CHECK(parse_corpus(serialize_corpus(c)) == c);
  CHECK_THROWS_AS(parse_corpus("a b c\n\n"), DataError);
}

TEST_CASE("label inventory") {
  const auto labels = label_set({{{"a", "b"}, {"S-PER", "B-LOC"}}});
  CHECK(labels.names() ==
        std::vector<std::string>{"O", "B-LOC", "I-LOC", "E-LOC", "S-LOC", "B-PER", "I-PER", "E-PER", "S-PER"});
  CHECK_THROWS_AS(label_set({{{"a"}, {"U-PER"}}}), DataError);
}

TEST_CASE("entity scoring") {
  const std::vector<std::vector<EntitySpan>> gold{{{"PER", 0, 0}, {"LOC", 2, 3}}, {{"ORG", 0, 1}, {"PER", 3, 3}}};
  // 2 of 4 gold entities found plus one spurious span.
  const std::vector<std::vector<EntitySpan>> sys{{{"PER", 0, 0}, {"LOC", 2, 2}}, {{"ORG", 0, 1}}};
  const auto m = eval::score_ner(sys, gold);
  CHECK(m.precision_hundredths() == 6667);
  CHECK(m.recall_hundredths() == 5000);
  CHECK(m.f1_hundredths() == 5714);
  CHECK(eval::score_ner(gold, gold).f1_hundredths() == 10000);
  CHECK(eval::score_ner({{}, {}}, gold).f1_hundredths() == 0);
}

TEST_CASE("untrained head predicts a legal sequence") {
  const auto labels = label_set({{{"a", "b"}, {"S-PER", "O"}}});
  auto head = NerHead::init(labels, 8, 4, 1);
  encoder::EncodedText enc;
  enc.reps = nn::Matrix::Zero(3, 8);
  for (int i = 0; i < 3; ++i) enc.seq.space_split_index.push_back(i);
  enc.seq.ids = {4, 5, 6};
  enc.seq.offsets = {{0, 1}, {2, 3}, {4, 5}};
  const auto tags = predict(enc, 3, head);
  CHECK(tags.size() == 3);
  CHECK(bioes_to_spans(tags).repairs == 0);
}
