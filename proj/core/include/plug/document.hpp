#pragma once

// Annotated output: text -> sentences -> tokens -> (expanded) words, with
// JSON and CoNLL-U views of the same content.

#include <string>
#include <utility>
#include <vector>

#include "plug/conllu.hpp"

namespace plug::doc {

using Span = std::pair<int, int>;  // [start, end) code point offsets

// Empty strings and head < 0 mean "not annotated".
struct Word {
  int id = 0;
  std::string text;
  std::string lemma;
  std::string upos;
  std::string xpos;
  std::string feats;
  int head = -1;
  std::string deprel;
  bool operator==(const Word&) const = default;
};

struct Token {
  std::string text;
  Span span{0, 0};
  // One word for a plain token; two or more for a multi-word token.
  std::vector<Word> words;
  std::string ner;
  bool space_after = true;

  bool is_mwt() const { return words.size() > 1; }
  // "3" or "3-4".
  std::string id() const;
  bool operator==(const Token&) const = default;
};

struct Sentence {
  int id = 0;
  std::string text;
  Span span{0, 0};
  std::vector<Token> tokens;
  size_t word_count() const;
  bool operator==(const Sentence&) const = default;
};

struct Document {
  std::string text;
  std::string language;
  std::vector<Sentence> sentences;
  std::vector<std::string> notices;  // e.g. components skipped for lack of a bundle
  bool operator==(const Document&) const = default;
};

std::string to_json(const Document& d, int indent = 2);
Document from_json(std::string_view json);

// Word rows carry "_" for missing fields; NER tags ride in token MISC as
// NER=<tag>, spacing as SpaceAfter=No.
std::vector<conllu::TreebankSentence> to_conllu(const Document& d);
// Text and spans are rebuilt from token surfaces and SpaceAfter.
Document from_conllu(const std::vector<conllu::TreebankSentence>& sentences);

}  // namespace plug::doc
