#pragma once

// BIOES named entity tagging over tokens: feed-forward emissions and a
// constrained linear-chain CRF.

#include <string>
#include <string_view>
#include <vector>

#include "plug/crf.hpp"
#include "plug/encoder.hpp"
#include "plug/labels.hpp"

namespace plug::ner {

struct EntitySpan {
  std::string type;
  int start = 0;  // inclusive token indices
  int end = 0;
  bool operator==(const EntitySpan&) const = default;
  auto operator<=>(const EntitySpan&) const = default;
};

struct SpanDecode {
  std::vector<EntitySpan> spans;
  // Illegal tag runs that had to be truncated or reinterpreted.
  size_t repairs = 0;
};

SpanDecode bioes_to_spans(const std::vector<std::string>& tags);
std::vector<std::string> spans_to_bioes(const std::vector<EntitySpan>& spans, size_t length);
// IOB1/IOB2 to BIOES; tags already carrying E- or S- pass through.
std::vector<std::string> to_bioes(const std::vector<std::string>& tags);

// Two tab-separated columns (token, tag), blank line between sentences.
struct NerSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  bool operator==(const NerSentence&) const = default;
};
std::vector<NerSentence> parse_corpus(std::string_view text);
std::string serialize_corpus(const std::vector<NerSentence>& sentences);
std::vector<NerSentence> read_corpus(const std::string& path);

// {O} plus B-/I-/E-/S- for every entity type seen, in type order.
LabelSet label_set(const std::vector<NerSentence>& corpus);

class NerHead {
 public:
  static NerHead init(LabelSet labels, int dim, int hidden, uint64_t seed);
  void bind();

  nn::Var emissions(nn::Graph& g, nn::Var tokens) const { return emission_(g, tokens); }
  nn::Var transition_scores(nn::Graph& g) const { return g.param(*transitions_); }
  nn::Parameter& transitions() { return *transitions_; }
  const nn::Parameter& transitions() const { return *transitions_; }
  // Learned transitions plus the hard constraint mask.
  nn::Matrix effective_transitions() const { return transitions_->value + mask_; }
  const nn::Matrix& mask() const { return mask_; }

  nn::ParamStore params;
  LabelSet labels;

 private:
  nn::FeedForward emission_;
  nn::Parameter* transitions_ = nullptr;
  nn::Matrix mask_;
};

struct NerExample {
  std::vector<std::string> tokens;
  subword::WordpieceSeq seq;
  std::vector<int> gold;
};

NerExample make_example(const NerSentence& sentence, const subword::Vocab& vocab,
                        const NerHead& head);

nn::Var loss(nn::Graph& g, const encoder::EncodedVars& enc, const NerHead& head,
             const NerExample& example);

// enc must come from tokenize_units over the sentence's tokens.
std::vector<std::string> predict(const encoder::EncodedText& enc, int tokens, const NerHead& head);

}  // namespace plug::ner
