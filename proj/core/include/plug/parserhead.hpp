#pragma once

// Joint UPOS/XPOS/UFeats tagging and biaffine dependency parsing over the
// words of one sentence.

#include <string>
#include <vector>

#include "plug/conllu.hpp"
#include "plug/encoder.hpp"
#include "plug/labels.hpp"

namespace plug::parse {

// Mean of the piece rows belonging to each unit. piece_to_unit[k] names the
// unit of piece k; every unit in [0, units) must own at least one piece.
nn::Matrix word_vectors(const nn::Matrix& reps, const std::vector<int>& piece_to_unit, int units);
nn::Var word_vectors(nn::Graph& g, nn::Var reps, const std::vector<int>& piece_to_unit, int units);

// S(j, i) = h_i^T U d_j + w_head . h_i + w_dep . d_j + b for heads rows
// 0..N and dependents 1..N. head: (N+1) x a, dep: N x a, u: a x a,
// w_head: 1 x a, w_dep: 1 x a, b: 1 x 1. Returns N x (N+1).
nn::Var biaffine_arcs(nn::Graph& g, nn::Var head, nn::Var dep, nn::Var u, nn::Var w_head,
                      nn::Var w_dep, nn::Var b);

struct TagVocabs {
  LabelSet upos;
  LabelSet xpos;
  LabelSet feats;
  LabelSet deprel;
  bool xpos_enabled = true;

  static TagVocabs build(const std::vector<conllu::TreebankSentence>& sentences);
};

struct TagParseConfig {
  int hidden = 32;     // tagger and FFN_dep hidden width
  int arc_dim = 32;
  int label_dim = 16;
};

class TagParseHead {
 public:
  static TagParseHead init(TagVocabs vocabs, int dim, const TagParseConfig& config, uint64_t seed);
  // Re-attaches every block to params (after loading).
  void bind();

  struct Outputs {
    nn::Var upos, xpos, feats;  // N x classes
    nn::Var arcs;               // N x (N+1)
    nn::Var label_head;         // (N+1) x label_dim
    nn::Var label_dep;          // N x label_dim
  };
  // words: N x dim, cls: 1 x dim.
  Outputs forward(nn::Graph& g, nn::Var words, nn::Var cls) const;
  // N x deprel classes for the arcs heads[j - 1] -> j.
  nn::Var label_scores(nn::Graph& g, const Outputs& out, std::span<const int> heads) const;

  nn::ParamStore params;
  TagVocabs vocabs;
  TagParseConfig config;

 private:
  nn::FeedForward upos_, xpos_, feats_, dep_;
  nn::Linear arc_head_, arc_dep_, label_head_, label_dep_, label_pair_;
  nn::Parameter* arc_u_ = nullptr;
  nn::Parameter* arc_w_head_ = nullptr;
  nn::Parameter* arc_w_dep_ = nullptr;
  nn::Parameter* arc_b_ = nullptr;
  nn::Parameter* label_u_ = nullptr;
};

struct TagParseExample {
  std::vector<std::string> forms;
  subword::WordpieceSeq seq;
  std::vector<int> upos, xpos, feats, heads, deprels;  // -1 = unknown / ignored
};

TagParseExample make_example(const conllu::TreebankSentence& sentence, const subword::Vocab& vocab,
                             const TagVocabs& vocabs);

nn::Var loss(nn::Graph& g, const encoder::EncodedVars& enc, const TagParseHead& head,
             const TagParseExample& example);

struct ParseResult {
  std::vector<std::string> upos, xpos, feats, deprel;
  std::vector<int> heads;
  nn::Matrix arc_scores;
};

// enc must come from tokenize_units over the sentence's words.
ParseResult parse_sentence(const encoder::EncodedText& enc, int words, const TagParseHead& head);

}  // namespace plug::parse
