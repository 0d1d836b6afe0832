#include "doctest.h"
#include "plug/error.hpp"
#include "plug/splitter.hpp"
#include "plug/text.hpp"

using namespace plug;
using namespace plug::splitter;

namespace {

subword::Vocab letters() {
  std::string lines = "<s>\n</s>\n<pad>\n<unk>\n.\n";
  for (char c : std::string("delgato")) {
    lines += std::string(1, c) + "\n##" + std::string(1, c) + "\n";
  }
  return subword::Vocab::from_text(lines);
}

const char* kSentence =
    "# text = del gato.\n"
    "1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n"
    "1\tde\tde\tADP\t_\t_\t3\tcase\t_\t_\n"
    "2\tel\tel\tDET\t_\t_\t3\tdet\t_\t_\n"
    "3\tgato\tgato\tNOUN\t_\t_\t0\troot\t_\tSpaceAfter=No\n"
    "4\t.\t.\tPUNCT\t_\t_\t3\tpunct\t_\t_\n\n";

}  // namespace

TEST_CASE("gold boundaries land on the last piece of each token") {
  const auto v = letters();
  const auto sentences = conllu::parse(kSentence);
  size_t mismatches = 99;
  const auto ex = make_examples(sentences, v, 64, &mismatches);
  REQUIRE(ex.size() == 1);
  CHECK(mismatches == 0);
  // d ##e ##l g ##a ##t ##o .
  CHECK(ex[0].labels == std::vector<int>{0, 0, 2, 0, 0, 0, 1, 3});
  CHECK_THROWS_AS(make_examples(sentences, v, 0), UsageError);
}

TEST_CASE("a small window yields overlapping examples") {
  const auto ex = make_examples(conllu::parse(kSentence), letters(), 4);
  REQUIRE(ex.size() == 5);
  for (const auto& e : ex) CHECK(e.labels.size() == 4);
  CHECK(ex.back().labels == std::vector<int>{0, 0, 1, 3});
}

TEST_CASE("aggregation rebuilds tokens and sentences") {
  const auto v = letters();
  const std::u32string text = U"del gato.";
  const auto seq = subword::tokenize(v, std::u32string_view(text));
  using B = BoundaryLabel;
  const std::vector<B> labels{B::inside, B::inside, B::end_mwt,    B::inside,
                              B::inside, B::inside, B::end_token, B::end_sentence};
  const auto seg = aggregate(labels, seq, text);
  REQUIRE(seg.sentences.size() == 1);
  REQUIRE(seg.token_count() == 3);
  CHECK(seg.sentences[0][0] == SegToken{0, 3, "del", true});
  CHECK(seg.sentences[0][1] == SegToken{4, 8, "gato", false});
  CHECK(seg.sentences[0][2] == SegToken{8, 9, ".", false});
  CHECK_THROWS_AS(aggregate({B::inside}, seq, text), UsageError);
}

TEST_CASE("a piece that never ends a token still closes at the end of text") {
  const auto v = letters();
  const std::u32string text = U"gato";
  const auto seq = subword::tokenize(v, std::u32string_view(text));
  const auto seg = aggregate(std::vector<BoundaryLabel>(seq.size(), BoundaryLabel::inside), seq, text);
  REQUIRE(seg.sentences.size() == 1);
  CHECK(seg.sentences[0] == std::vector<SegToken>{{0, 4, "gato", false}});
}

TEST_CASE("untrained head predicts no boundaries") {
  const auto head = SplitterHead::init(8, 6, 1);
  encoder::EncodedText enc;
  enc.reps = nn::Matrix::Random(5, 8);
  const auto labels = predict_boundaries(enc, head);
  CHECK(labels == std::vector<BoundaryLabel>(5, BoundaryLabel::inside));
  enc.reps.resize(0, 8);
  CHECK(predict_boundaries(enc, head).empty());
}

TEST_CASE("inference windows keep every piece exactly once") {
  CHECK(windows(0, 8).empty());
  const auto one = windows(3, 64);
  REQUIRE(one.size() == 1);
  CHECK(one[0].keep == subword::PieceRange{0, 3});
  for (int n : {9, 10, 37, 200}) {
    for (int width : {4, 5, 16}) {
      const auto ws = windows(static_cast<size_t>(n), width);
      int next = 0;
      for (const auto& w : ws) {
        CHECK(w.range.size() == std::min(n, width));
        CHECK(w.keep.begin == next);
        CHECK(w.range.begin <= w.keep.begin);
        CHECK(w.keep.end <= w.range.end);
        next = w.keep.end;
      }
      CHECK(next == n);
    }
  }
}

TEST_CASE("kept pieces stay away from cut edges") {
  const auto ws = windows(10, 4);
  // Windows start at 0, 2, 4, 6; pieces 1..8 never sit on a cut edge.
  for (const auto& w : ws) {
    for (int i = w.keep.begin; i < w.keep.end; ++i) {
      if (w.range.begin > 0) CHECK(i > w.range.begin);
      if (w.range.end < 10) CHECK(i < w.range.end - 1);
    }
  }
}

TEST_CASE("slicing keeps offsets and word indices") {
  const auto v = letters();
  const auto seq = subword::tokenize(v, std::string_view("del gato."));
  const auto s = slice(seq, {3, 8});
  CHECK(s.size() == 5);
  CHECK(s.offsets.front() == std::pair{4, 5});
  CHECK(s.space_split_index.front() == 1);
}

TEST_CASE("a piece spanning a gold boundary is counted") {
  const auto v = subword::Vocab::from_text("<s>\n</s>\n<pad>\n<unk>\nab\n");
  const auto seq = subword::tokenize(v, std::string_view("ab"));
  REQUIRE(seq.size() == 1);
  GoldSegmentation gold;
  gold.token_spans = {{{0, 1}, {1, 2}}};
  gold.is_mwt = {{false, false}};
  const auto p = project_labels(seq, gold);
  CHECK(p.mismatches == 1);
  CHECK(p.labels == std::vector<BoundaryLabel>{BoundaryLabel::end_sentence});
}
