#include "plug/splitter.hpp"

#include <algorithm>

#include "plug/error.hpp"
#include "plug/text.hpp"

namespace plug::splitter {

size_t Segmentation::token_count() const {
  size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

SplitterHead SplitterHead::init(int dim, int hidden, uint64_t seed) {
  nn::Rng rng(seed);
  SplitterHead h;
  nn::Linear::init(h.params, "splitter.ffn.hidden", dim, hidden, rng);
  nn::Linear::init_zero(h.params, "splitter.ffn.out", hidden, kBoundaryLabels);
  h.bind();
  return h;
}

void SplitterHead::bind() { ffn = nn::FeedForward::bind(params, "splitter.ffn"); }

nn::Var SplitterHead::logits(nn::Graph& g, nn::Var reps) const { return ffn(g, reps); }

std::vector<BoundaryLabel> argmax_labels(const nn::Matrix& logits) {
  std::vector<BoundaryLabel> out(static_cast<size_t>(logits.rows()));
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    int best = 0;
    for (int c = 1; c < logits.cols(); ++c) {
      if (logits(r, c) > logits(r, best)) best = c;
    }
    out[static_cast<size_t>(r)] = static_cast<BoundaryLabel>(best);
  }
  return out;
}

std::vector<BoundaryLabel> predict_boundaries(const encoder::EncodedText& enc,
                                              const SplitterHead& head) {
  if (enc.reps.rows() == 0) return {};
  nn::Graph g;
  return argmax_labels(head.logits(g, g.constant(enc.reps)).value());
}

std::vector<Window> windows(size_t pieces, int width) {
  const int n = static_cast<int>(pieces);
  if (n == 0) return {};
  if (width <= 0 || n <= width) return {{{0, n}, {0, n}}};
  const int stride = std::max(1, width / 2);
  std::vector<Window> out;
  for (int start = 0;; start += stride) {
    const int begin = std::min(start, n - width);
    out.push_back({{begin, begin + width}, {0, 0}});
    if (begin + width >= n) break;
  }
  // Distance to the nearest edge that cuts the text (text ends do not count).
  auto margin = [&](const Window& w, int i) {
    const int left = w.range.begin == 0 ? n : i - w.range.begin;
    const int right = w.range.end == n ? n : w.range.end - 1 - i;
    return std::min(left, right);
  };
  std::vector<int> owner(static_cast<size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    int best = -1;
    for (size_t k = 0; k < out.size(); ++k) {
      if (i < out[k].range.begin || i >= out[k].range.end) continue;
      if (best < 0 || margin(out[k], i) > margin(out[static_cast<size_t>(best)], i)) best = static_cast<int>(k);
    }
    owner[static_cast<size_t>(i)] = best;
  }
  for (size_t k = 0; k < out.size(); ++k) {
    const auto first = std::find(owner.begin(), owner.end(), static_cast<int>(k));
    if (first == owner.end()) continue;
    const auto last = std::find_if(first, owner.end(), [&](int o) { return o != static_cast<int>(k); });
    out[k].keep = {static_cast<int>(first - owner.begin()), static_cast<int>(last - owner.begin())};
  }
  std::erase_if(out, [](const Window& w) { return w.keep.size() == 0; });
  return out;
}

subword::WordpieceSeq slice(const subword::WordpieceSeq& seq, subword::PieceRange range) {
  subword::WordpieceSeq out;
  const auto b = static_cast<long>(range.begin);
  const auto e = static_cast<long>(range.end);
  out.ids.assign(seq.ids.begin() + b, seq.ids.begin() + e);
  out.offsets.assign(seq.offsets.begin() + b, seq.offsets.begin() + e);
  out.space_split_index.assign(seq.space_split_index.begin() + b, seq.space_split_index.begin() + e);
  return out;
}

Segmentation aggregate(const std::vector<BoundaryLabel>& labels,
                       const subword::WordpieceSeq& seq, std::u32string_view text) {
  if (labels.size() != seq.size()) throw UsageError("one boundary label per wordpiece expected");
  Segmentation out;
  std::vector<SegToken> sentence;
  int start = -1;
  auto close_token = [&](int end, bool mwt) {
    SegToken t;
    t.start = start;
    t.end = end;
    t.surface = text::encode(text.substr(static_cast<size_t>(start), static_cast<size_t>(end - start)));
    t.is_mwt = mwt;
    sentence.push_back(std::move(t));
    start = -1;
  };
  for (size_t k = 0; k < seq.size(); ++k) {
    if (start < 0) start = seq.offsets[k].first;
    const auto label = labels[k];
    if (label == BoundaryLabel::inside) continue;
    close_token(seq.offsets[k].second, label == BoundaryLabel::end_mwt);
    if (label == BoundaryLabel::end_sentence) {
      out.sentences.push_back(std::move(sentence));
      sentence.clear();
    }
  }
  if (start >= 0) close_token(seq.offsets.back().second, false);
  if (!sentence.empty()) out.sentences.push_back(std::move(sentence));
  return out;
}

Projection project_labels(const subword::WordpieceSeq& seq, const GoldSegmentation& gold) {
  // Strongest boundary ending at each code point offset.
  std::vector<std::pair<int, BoundaryLabel>> ends;
  for (size_t s = 0; s < gold.token_spans.size(); ++s) {
    const auto& spans = gold.token_spans[s];
    for (size_t t = 0; t < spans.size(); ++t) {
      BoundaryLabel b = BoundaryLabel::end_token;
      if (t < gold.is_mwt[s].size() && gold.is_mwt[s][t]) b = BoundaryLabel::end_mwt;
      if (t + 1 == spans.size()) b = BoundaryLabel::end_sentence;
      ends.emplace_back(spans[t].second, b);
    }
  }
  std::sort(ends.begin(), ends.end());
  Projection p;
  p.labels.assign(seq.size(), BoundaryLabel::inside);
  size_t e = 0;
  for (size_t k = 0; k < seq.size(); ++k) {
    const auto [a, b] = seq.offsets[k];
    while (e < ends.size() && ends[e].first <= a) ++e;
    bool split = false;
    for (; e < ends.size() && ends[e].first <= b; ++e) {
      if (ends[e].first < b) split = true;
      p.labels[k] = std::max(p.labels[k], ends[e].second);
    }
    if (split) ++p.mismatches;
  }
  return p;
}

std::vector<SplitterExample> make_examples(const std::vector<conllu::TreebankSentence>& sentences,
                                           const subword::Vocab& vocab, int window,
                                           size_t* mismatches) {
  if (window < 1) throw UsageError("splitter window must be positive");
  auto rebuilt = conllu::reconstruct_text(sentences);
  GoldSegmentation gold;
  gold.token_spans = std::move(rebuilt.token_spans);
  for (const auto& s : sentences) {
    std::vector<bool> flags;
    for (const auto& t : conllu::tokens(s)) flags.push_back(t.is_mwt);
    gold.is_mwt.push_back(std::move(flags));
  }
  const auto seq = subword::tokenize(vocab, std::u32string_view(rebuilt.text));
  const auto projection = project_labels(seq, gold);
  if (mismatches != nullptr) *mismatches = projection.mismatches;

  std::vector<SplitterExample> out;
  const int n = static_cast<int>(seq.size());
  const int stride = std::max(1, window / 4);
  for (int begin = 0; begin < n; begin += stride) {
    const int b = std::max(0, std::min(begin, n - window));
    const subword::PieceRange range{b, std::min(n, b + window)};
    SplitterExample ex;
    ex.seq = slice(seq, range);
    for (int i = range.begin; i < range.end; ++i) {
      ex.labels.push_back(static_cast<int>(projection.labels[static_cast<size_t>(i)]));
    }
    out.push_back(std::move(ex));
    if (range.end == n) break;
  }
  return out;
}

nn::Var loss(nn::Graph& g, const encoder::EncodedVars& enc, const SplitterHead& head,
             const SplitterExample& example) {
  nn::Var ce = nn::cross_entropy(head.logits(g, enc.reps), example.labels);
  return nn::scale(ce, 1.0 / static_cast<double>(std::max<size_t>(1, example.labels.size())));
}

}  // namespace plug::splitter
