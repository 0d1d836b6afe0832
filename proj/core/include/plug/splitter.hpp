#pragma once

// Joint token and sentence segmentation over wordpieces.

#include <string>
#include <vector>

#include "plug/conllu.hpp"
#include "plug/encoder.hpp"

namespace plug::splitter {

// Ordered by strength; argmax ties resolve toward the smaller value.
enum class BoundaryLabel : int { inside = 0, end_token = 1, end_mwt = 2, end_sentence = 3 };
inline constexpr int kBoundaryLabels = 4;

struct SegToken {
  int start = 0;  // code point offsets, [start, end)
  int end = 0;
  std::string surface;
  bool is_mwt = false;
  bool operator==(const SegToken&) const = default;
};

struct Segmentation {
  std::vector<std::vector<SegToken>> sentences;
  size_t token_count() const;
};

struct SplitterHead {
  nn::ParamStore params;
  nn::FeedForward ffn;  // dim -> hidden -> 4, output layer zero at init
  // Inference window in pieces, the one used in training; 0
  // means the whole text at once.
  int window = 0;

  static SplitterHead init(int dim, int hidden, uint64_t seed);
  void bind();
  nn::Var logits(nn::Graph& g, nn::Var reps) const;
};

std::vector<BoundaryLabel> predict_boundaries(const encoder::EncodedText& enc,
                                              const SplitterHead& head);
std::vector<BoundaryLabel> argmax_labels(const nn::Matrix& logits);

// Overlapping inference windows of at most width pieces, half a width apart.
// Each piece is kept from the window where it sits farthest from a cut edge,
// so keep ranges tile [0, pieces) in order.
struct Window {
  subword::PieceRange range;
  subword::PieceRange keep;
};
std::vector<Window> windows(size_t pieces, int width);

subword::WordpieceSeq slice(const subword::WordpieceSeq& seq, subword::PieceRange range);

Segmentation aggregate(const std::vector<BoundaryLabel>& labels,
                       const subword::WordpieceSeq& seq, std::u32string_view text);

// Gold supervision for one text: per-sentence token spans and MWT flags.
struct GoldSegmentation {
  std::vector<std::vector<std::pair<int, int>>> token_spans;
  std::vector<std::vector<bool>> is_mwt;
};

struct Projection {
  std::vector<BoundaryLabel> labels;
  // Gold boundaries falling strictly inside a wordpiece.
  size_t mismatches = 0;
};

// Each piece takes the strongest gold boundary at its end offset; a boundary
// strictly inside a piece is counted and pushed onto that piece.
Projection project_labels(const subword::WordpieceSeq& seq, const GoldSegmentation& gold);

struct SplitterExample {
  subword::WordpieceSeq seq;
  std::vector<int> labels;
};

// Reads the sentences as one running text and cuts it into windows of at
// most `window` pieces, a quarter window apart, so that training sees the
// arbitrary window edges met at inference. mismatches receives the number of
// pieces split by a gold boundary.
std::vector<SplitterExample> make_examples(const std::vector<conllu::TreebankSentence>& sentences,
                                           const subword::Vocab& vocab, int window,
                                           size_t* mismatches = nullptr);

nn::Var loss(nn::Graph& g, const encoder::EncodedVars& enc, const SplitterHead& head,
             const SplitterExample& example);

}  // namespace plug::splitter
