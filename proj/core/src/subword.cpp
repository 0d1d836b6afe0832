#include "plug/subword.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "plug/error.hpp"
#include "plug/text.hpp"

namespace plug::subword {

namespace {

constexpr size_t kMaxSegmentTypes = 400000;

// A maximal run of non-punctuation characters or a single punctuation mark.
struct Segment {
  std::u32string chars;
  bool initial = false;

  bool operator<(const Segment& o) const {
    return std::tie(chars, initial) < std::tie(o.chars, o.initial);
  }
};

template <typename F>
void for_each_substring(std::u32string_view text, F&& f) {
  size_t i = 0;
  int index = 0;
  while (i < text.size()) {
    if (text::is_space(text[i])) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < text.size() && !text::is_space(text[j])) ++j;
    f(i, j, index++);
    i = j;
  }
}

std::map<Segment, int64_t> count_segments(std::u32string_view text) {
  std::map<Segment, int64_t> counts;
  for_each_substring(text, [&](size_t b, size_t e, int) {
    size_t i = b;
    while (i < e) {
      size_t j = i + 1;
      if (!text::is_punct(text[i])) {
        while (j < e && !text::is_punct(text[j])) ++j;
      }
      ++counts[Segment{std::u32string(text.substr(i, j - i)), i == b}];
      i = j;
    }
  });
  return counts;
}

std::string form(std::u32string_view surface, bool initial) {
  std::string out = initial ? std::string() : std::string(kContinuation);
  return out + text::encode(surface);
}

uint64_t pair_key(int a, int b) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) | static_cast<uint32_t>(b);
}

}  // namespace

Vocab::Vocab() {
  for (const char* s : {"<s>", "</s>", "<pad>", "<unk>"}) add(s);
}

void Vocab::add(std::string piece) {
  const auto [it, inserted] = index_.emplace(piece, static_cast<int>(pieces_.size()));
  if (!inserted) throw DataError("duplicate vocabulary piece '" + piece + "'");
  std::string_view body(piece);
  if (pieces_.size() >= kNumSpecials && body.substr(0, kContinuation.size()) == kContinuation &&
      body.size() > kContinuation.size()) {
    body.remove_prefix(kContinuation.size());
  }
  max_piece_chars_ = std::max(max_piece_chars_, text::decode(body).size());
  pieces_.push_back(std::move(piece));
}

std::optional<int> Vocab::find(std::string_view piece) const {
  const auto it = index_.find(std::string(piece));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocab Vocab::train(std::string_view corpus, int target_size, uint64_t seed) {
  const auto text = text::decode(text::strip_bom(corpus));
  auto segment_counts = count_segments(text);
  if (segment_counts.empty()) throw DataError("cannot train a vocabulary on an empty corpus");

  std::vector<std::pair<Segment, int64_t>> types(segment_counts.begin(), segment_counts.end());
  if (types.size() > kMaxSegmentTypes) {
    std::mt19937_64 rng(seed);
    std::shuffle(types.begin(), types.end(), rng);
    types.resize(kMaxSegmentTypes);
    std::sort(types.begin(), types.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  }

  std::set<char32_t> alphabet;
  for (const auto& [seg, n] : types) alphabet.insert(seg.chars.begin(), seg.chars.end());
  const auto needed = kNumSpecials + 2 * static_cast<int>(alphabet.size());
  if (target_size < needed) {
    throw DataError("target size " + std::to_string(target_size) + " cannot hold the " +
                    std::to_string(alphabet.size()) + "-character alphabet (need " +
                    std::to_string(needed) + ")");
  }

  Vocab vocab;
  std::vector<std::u32string> symbols;
  std::unordered_map<std::u32string, int> symbol_ids;
  auto intern = [&](const std::u32string& s) {
    const auto [it, inserted] = symbol_ids.emplace(s, static_cast<int>(symbols.size()));
    if (inserted) symbols.push_back(s);
    return it->second;
  };
  for (char32_t c : alphabet) {
    const std::u32string s(1, c);
    intern(s);
    vocab.add(form(s, true));
    vocab.add(form(s, false));
  }

  struct Word {
    std::vector<int> symbols;
    int64_t freq = 0;
    bool initial = false;
  };
  std::vector<Word> words;
  words.reserve(types.size());
  for (const auto& [seg, n] : types) {
    Word w;
    w.freq = n;
    w.initial = seg.initial;
    for (char32_t c : seg.chars) w.symbols.push_back(symbol_ids.at(std::u32string(1, c)));
    words.push_back(std::move(w));
  }

  std::unordered_map<uint64_t, int64_t> counts;
  std::unordered_map<uint64_t, std::vector<int>> where;
  for (int wi = 0; wi < static_cast<int>(words.size()); ++wi) {
    const auto& w = words[wi];
    for (size_t k = 0; k + 1 < w.symbols.size(); ++k) {
      const auto key = pair_key(w.symbols[k], w.symbols[k + 1]);
      counts[key] += w.freq;
      where[key].push_back(wi);
    }
  }

  // Highest count first; ties go to the lexicographically smallest pair.
  struct Entry {
    int64_t count;
    uint64_t key;
  };
  auto left = [](uint64_t key) { return static_cast<int>(key >> 32); };
  auto right = [](uint64_t key) { return static_cast<int>(key & 0xFFFFFFFFu); };
  auto by_rank = [&](const Entry& a, const Entry& b) {
    if (a.count != b.count) return a.count > b.count;
    if (a.key == b.key) return false;
    const auto& la = symbols[left(a.key)];
    const auto& lb = symbols[left(b.key)];
    if (la != lb) return la < lb;
    return symbols[right(a.key)] < symbols[right(b.key)];
  };
  std::set<Entry, decltype(by_rank)> queue(by_rank);
  for (const auto& [key, n] : counts) queue.insert({n, key});

  while (!queue.empty() && vocab.size() < target_size) {
    const Entry best = *queue.begin();
    if (best.count <= 0) break;
    const int a = left(best.key);
    const int b = right(best.key);
    const std::u32string merged = symbols[a] + symbols[b];

    // Positional forms this merge would introduce, in first-seen order.
    std::vector<std::string> new_forms;
    auto& affected = where[best.key];
    std::sort(affected.begin(), affected.end());
    affected.erase(std::unique(affected.begin(), affected.end()), affected.end());
    for (int wi : affected) {
      const auto& w = words[wi];
      for (size_t k = 0; k + 1 < w.symbols.size(); ++k) {
        if (w.symbols[k] == a && w.symbols[k + 1] == b) {
          auto f = form(merged, w.initial && k == 0);
          if (!vocab.find(f) && std::find(new_forms.begin(), new_forms.end(), f) == new_forms.end()) {
            new_forms.push_back(std::move(f));
          }
          ++k;
        }
      }
    }
    std::sort(new_forms.begin(), new_forms.end(), [](const std::string& x, const std::string& y) {
      const bool cx = x.rfind(kContinuation, 0) == 0;
      const bool cy = y.rfind(kContinuation, 0) == 0;
      return std::tie(cx, x) < std::tie(cy, y);
    });
    if (vocab.size() + static_cast<int>(new_forms.size()) > target_size) break;
    for (auto& f : new_forms) vocab.add(std::move(f));
    const int merged_id = intern(merged);

    std::unordered_map<uint64_t, int64_t> before;
    auto touch = [&](uint64_t key, int64_t delta) {
      auto& c = counts[key];
      if (!before.count(key)) before.emplace(key, c);
      c += delta;
    };
    const std::vector<int> visit = affected;
    for (int wi : visit) {
      auto& w = words[wi];
      bool present = false;
      for (size_t k = 0; k + 1 < w.symbols.size(); ++k) {
        if (w.symbols[k] == a && w.symbols[k + 1] == b) present = true;
      }
      if (!present) continue;
      for (size_t k = 0; k + 1 < w.symbols.size(); ++k) {
        touch(pair_key(w.symbols[k], w.symbols[k + 1]), -w.freq);
      }
      std::vector<int> rewritten;
      for (size_t k = 0; k < w.symbols.size(); ++k) {
        if (k + 1 < w.symbols.size() && w.symbols[k] == a && w.symbols[k + 1] == b) {
          rewritten.push_back(merged_id);
          ++k;
        } else {
          rewritten.push_back(w.symbols[k]);
        }
      }
      w.symbols = std::move(rewritten);
      for (size_t k = 0; k + 1 < w.symbols.size(); ++k) {
        const auto key = pair_key(w.symbols[k], w.symbols[k + 1]);
        touch(key, w.freq);
        where[key].push_back(wi);
      }
    }
    for (const auto& [key, old] : before) {
      queue.erase(Entry{old, key});
      const auto now = counts[key];
      if (now > 0) queue.insert({now, key});
    }
    where.erase(best.key);
  }
  return vocab;
}

Vocab Vocab::from_text(std::string_view lines) {
  lines = text::strip_bom(lines);
  std::vector<std::string> pieces;
  size_t pos = 0;
  while (pos < lines.size()) {
    size_t eol = lines.find('\n', pos);
    if (eol == std::string_view::npos) eol = lines.size();
    auto line = lines.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pieces.emplace_back(line);
    pos = eol + 1;
  }
  Vocab v;
  if (pieces.size() < kNumSpecials) throw DataError("vocabulary file lacks the special pieces");
  for (int i = 0; i < kNumSpecials; ++i) {
    if (pieces[i] != v.pieces_[i]) {
      throw DataError("vocabulary line " + std::to_string(i) + " must be " + v.pieces_[i]);
    }
  }
  for (size_t i = kNumSpecials; i < pieces.size(); ++i) {
    if (pieces[i].empty()) throw DataError("empty vocabulary piece at line " + std::to_string(i));
    v.add(pieces[i]);
  }
  return v;
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocabulary " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

std::string Vocab::to_text() const {
  std::string out;
  for (const auto& p : pieces_) {
    out += p;
    out += '\n';
  }
  return out;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary " + path);
  out << to_text();
}

namespace {

void tokenize_span(const Vocab& vocab, std::u32string_view text, size_t b, size_t e,
                   int split_index, int offset_base, WordpieceSeq& out) {
  size_t p = b;
  while (p < e) {
    const bool initial = p == b;
    const size_t longest = std::min(e - p, vocab.max_piece_chars());
    bool matched = false;
    for (size_t len = longest; len >= 1; --len) {
      if (const auto id = vocab.find(form(text.substr(p, len), initial))) {
        out.ids.push_back(*id);
        out.offsets.emplace_back(offset_base + static_cast<int>(p),
                                 offset_base + static_cast<int>(p + len));
        out.space_split_index.push_back(split_index);
        p += len;
        matched = true;
        break;
      }
    }
    if (!matched) {
      out.ids.push_back(kUnk);
      out.offsets.emplace_back(offset_base + static_cast<int>(p), offset_base + static_cast<int>(p + 1));
      out.space_split_index.push_back(split_index);
      ++p;
    }
  }
}

}  // namespace

WordpieceSeq tokenize(const Vocab& vocab, std::u32string_view text) {
  WordpieceSeq out;
  for_each_substring(text, [&](size_t b, size_t e, int index) {
    tokenize_span(vocab, text, b, e, index, 0, out);
  });
  return out;
}

WordpieceSeq tokenize(const Vocab& vocab, std::string_view utf8) {
  return tokenize(vocab, text::decode(utf8));
}

WordpieceSeq tokenize_units(const Vocab& vocab, const std::vector<std::string>& units) {
  WordpieceSeq out;
  int base = 0;
  for (size_t u = 0; u < units.size(); ++u) {
    const auto chars = text::decode(units[u]);
    for_each_substring(chars, [&](size_t b, size_t e, int) {
      tokenize_span(vocab, chars, b, e, static_cast<int>(u), base, out);
    });
    base += static_cast<int>(chars.size()) + 1;
  }
  return out;
}

std::u32string detokenize(const WordpieceSeq& seq, std::u32string_view original) {
  std::u32string out;
  size_t cursor = 0;
  for (const auto& [b, e] : seq.offsets) {
    out.append(original.substr(cursor, static_cast<size_t>(b) - cursor));
    out.append(original.substr(static_cast<size_t>(b), static_cast<size_t>(e - b)));
    cursor = static_cast<size_t>(e);
  }
  out.append(original.substr(std::min(cursor, original.size())));
  return out;
}

std::vector<PieceRange> chunk(size_t piece_count, int max_len) {
  if (max_len < 3) throw UsageError("max_len must leave room for content besides <s> and </s>");
  std::vector<PieceRange> out;
  const int width = max_len - 2;
  const int k = static_cast<int>(piece_count);
  for (int b = 0; b < k; b += width) out.push_back({b, std::min(k, b + width)});
  return out;
}

}  // namespace plug::subword
