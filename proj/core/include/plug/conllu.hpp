#pragma once

// CoNLL-U reading, validation and writing.
//
// Ten tab-separated columns per word line, "#" comment lines, a blank line
// after every sentence, "_" for empty fields and "i-j" range lines for
// multi-word tokens. Empty nodes ("3.1") are dropped on read.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "plug/error.hpp"

namespace plug::conllu {

inline constexpr int kNoHead = -1;

struct WordRow {
  int id = 0;
  std::string form = "_";
  std::string lemma = "_";
  std::string upos = "_";
  std::string xpos = "_";
  std::string feats = "_";
  int head = kNoHead;  // kNoHead serializes as "_"
  std::string deprel = "_";
  std::string deps = "_";
  std::string misc = "_";

  bool operator==(const WordRow&) const = default;
};

struct MwtRange {
  int start = 0;
  int end = 0;
  std::string form;
  std::string misc = "_";

  bool operator==(const MwtRange&) const = default;
};

struct TreebankSentence {
  std::vector<std::string> comments;  // full lines, including the leading "#"
  std::vector<WordRow> rows;
  std::vector<MwtRange> mwt_ranges;

  bool operator==(const TreebankSentence&) const = default;

  // Value of a "# key = value" comment, if present.
  std::optional<std::string> comment_value(std::string_view key) const;
  void set_comment(std::string_view key, std::string_view value);
};

// One surface token: either a plain word or an MWT range with its words.
struct TokenView {
  int first_word = 0;  // 0-based index into rows
  int last_word = 0;   // inclusive
  std::string form;
  std::string misc;
  bool is_mwt = false;
};

std::vector<TokenView> tokens(const TreebankSentence& sentence);

class ConlluError : public DataError {
 public:
  ConlluError(size_t line, const std::string& message);
  size_t line() const { return line_; }

 private:
  size_t line_;
};

struct ParseOptions {
  // Several words attached to node 0 occur in some released treebanks; they
  // are accepted with a warning unless this is false.
  bool allow_multiple_roots = true;
  // Check that heads form a tree when every head is filled in.
  bool check_trees = true;
};

std::vector<TreebankSentence> parse(std::string_view text, const ParseOptions& options = {},
                                    std::vector<std::string>* warnings = nullptr);

std::string serialize(const std::vector<TreebankSentence>& sentences);

// Normal form used by the round-trip guarantee: BOM stripped, trailing
// whitespace removed from every line, runs of blank lines collapsed, and the
// text terminated by exactly one blank line after the last sentence.
std::string canonicalize(std::string_view text);

struct TreeCheck {
  bool allow_multiple_roots = false;
};

// Returns an empty list iff heads form a single tree rooted at node 0.
std::vector<std::string> validate_tree(const TreebankSentence& sentence,
                                       const TreeCheck& check = {});

// Structural invariants required before serialization; empty when valid.
std::vector<std::string> check_invariants(const TreebankSentence& sentence);

// FEATS column helpers. Pairs are sorted case-insensitively by name.
std::string canonical_feats(std::string_view feats);

bool space_after(std::string_view misc);
std::string set_space_after(std::string_view misc, bool space_after);

// Raw text rebuilt from token surfaces joined by single spaces, honoring
// SpaceAfter=No. Sentences are separated by one space.
struct ReconstructedText {
  std::u32string text;
  // Per sentence, per token: [start, end) code point offsets into text.
  std::vector<std::vector<std::pair<int, int>>> token_spans;
};

ReconstructedText reconstruct_text(const std::vector<TreebankSentence>& sentences);

std::vector<TreebankSentence> read_file(const std::string& path, const ParseOptions& options = {},
                                        std::vector<std::string>* warnings = nullptr);

}  // namespace plug::conllu
