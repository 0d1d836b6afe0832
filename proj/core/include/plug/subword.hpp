#pragma once

// Byte-pair-encoding subword vocabulary, greedy longest-match tokenization
// with code point offsets, and fixed-length chunking.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace plug::subword {

inline constexpr int kBos = 0;  // <s>
inline constexpr int kEos = 1;  // </s>
inline constexpr int kPad = 2;  // <pad>
inline constexpr int kUnk = 3;  // <unk>
inline constexpr int kNumSpecials = 4;

// Prefix marking a piece that continues a whitespace-delimited substring.
inline constexpr std::string_view kContinuation = "##";

class Vocab {
 public:
  Vocab();

  // Learns merges until the vocabulary holds target_size pieces or no pair
  // is left. Every corpus character is kept in both its word-initial and
  // continuation form. Merges never cross a punctuation boundary.
  // Throws DataError if target_size cannot hold the character alphabet.
  static Vocab train(std::string_view corpus, int target_size, uint64_t seed = 0);

  // One piece per line; the line number is the id and lines 0-3 hold the
  // specials.
  static Vocab from_text(std::string_view lines);
  static Vocab load(const std::string& path);
  std::string to_text() const;
  void save(const std::string& path) const;

  int size() const { return static_cast<int>(pieces_.size()); }
  const std::string& piece(int id) const { return pieces_.at(static_cast<size_t>(id)); }
  const std::vector<std::string>& pieces() const { return pieces_; }
  std::optional<int> find(std::string_view piece) const;
  size_t max_piece_chars() const { return max_piece_chars_; }

  bool operator==(const Vocab& other) const { return pieces_ == other.pieces_; }

 private:
  void add(std::string piece);

  std::vector<std::string> pieces_;
  std::unordered_map<std::string, int> index_;
  size_t max_piece_chars_ = 1;
};

struct WordpieceSeq {
  std::vector<int> ids;
  // [start, end) code point offsets into the tokenized text.
  std::vector<std::pair<int, int>> offsets;
  // Index of the whitespace-delimited substring each piece came from.
  std::vector<int> space_split_index;

  size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
};

WordpieceSeq tokenize(const Vocab& vocab, std::u32string_view text);
WordpieceSeq tokenize(const Vocab& vocab, std::string_view utf8);

// Tokenizes pre-split units (words or tokens) as if joined by single spaces;
// space_split_index then equals the unit index.
WordpieceSeq tokenize_units(const Vocab& vocab, const std::vector<std::string>& units);

// Rebuilds text from the covered spans, restoring the original gaps.
std::u32string detokenize(const WordpieceSeq& seq, std::u32string_view original);

struct PieceRange {
  int begin = 0;  // inclusive, 0-based piece index
  int end = 0;    // exclusive

  int size() const { return end - begin; }
  bool operator==(const PieceRange&) const = default;
};

// Consecutive non-overlapping ranges of at most max_len - 2 pieces, leaving
// room for the <s> and </s> sentinels added per chunk.
std::vector<PieceRange> chunk(size_t piece_count, int max_len);

}  // namespace plug::subword
