#include "plug/conllu.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "plug/text.hpp"

namespace plug::conllu {

namespace {

std::string_view rstrip(std::string_view s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' ||
                        s.back() == '\n' || s.back() == '\f' || s.back() == '\v')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::optional<int> to_int(std::string_view s) {
  if (s.empty() || s.front() == '+' || s.front() == '-') return std::nullopt;
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

struct PendingSentence {
  TreebankSentence sentence;
  size_t first_line = 0;
  std::vector<size_t> row_lines;
  std::vector<size_t> range_lines;

  bool empty() const { return sentence.rows.empty() && sentence.comments.empty(); }
};

void finish(PendingSentence& pending, const ParseOptions& options,
            std::vector<std::string>* warnings, std::vector<TreebankSentence>& out) {
  auto& s = pending.sentence;
  if (s.rows.empty()) {
    if (!s.mwt_ranges.empty()) {
      throw ConlluError(pending.range_lines.front(), "multi-word token range without words");
    }
    // Comment-only blocks carry no annotation; keep nothing.
    pending = {};
    return;
  }
  const int n = static_cast<int>(s.rows.size());
  for (size_t k = 0; k < s.mwt_ranges.size(); ++k) {
    const auto& r = s.mwt_ranges[k];
    if (r.end > n) {
      throw ConlluError(pending.range_lines[k],
                        "multi-word token range " + std::to_string(r.start) + "-" +
                            std::to_string(r.end) + " covers missing word IDs");
    }
    if (k > 0 && r.start <= s.mwt_ranges[k - 1].end) {
      throw ConlluError(pending.range_lines[k], "overlapping multi-word token ranges");
    }
  }
  size_t filled = 0;
  for (size_t i = 0; i < s.rows.size(); ++i) {
    const int head = s.rows[i].head;
    if (head == kNoHead) continue;
    ++filled;
    if (head > n) {
      throw ConlluError(pending.row_lines[i], "head " + std::to_string(head) +
                                                  " out of range 0.." + std::to_string(n));
    }
  }
  if (filled != 0 && filled != s.rows.size()) {
    throw ConlluError(pending.first_line, "HEAD column is only partially filled");
  }
  if (filled != 0 && options.check_trees) {
    const auto violations = validate_tree(s, TreeCheck{.allow_multiple_roots = true});
    if (!violations.empty()) throw ConlluError(pending.first_line, violations.front());
    const auto roots = std::count_if(s.rows.begin(), s.rows.end(),
                                     [](const WordRow& r) { return r.head == 0; });
    if (roots > 1) {
      if (!options.allow_multiple_roots) {
        throw ConlluError(pending.first_line, "multiple root attachments");
      }
      if (warnings != nullptr) {
        warnings->push_back("line " + std::to_string(pending.first_line) +
                            ": multiple root attachments");
      }
    }
  }
  out.push_back(std::move(s));
  pending = {};
}

}  // namespace

ConlluError::ConlluError(size_t line, const std::string& message)
    : DataError("line " + std::to_string(line) + ": " + message), line_(line) {}

std::optional<std::string> TreebankSentence::comment_value(std::string_view key) const {
  for (const auto& line : comments) {
    std::string_view body(line);
    body.remove_prefix(1);
    while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
    if (body.substr(0, key.size()) != key) continue;
    body.remove_prefix(key.size());
    while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
    if (body.empty() || body.front() != '=') continue;
    body.remove_prefix(1);
    if (!body.empty() && body.front() == ' ') body.remove_prefix(1);
    return std::string(body);
  }
  return std::nullopt;
}

void TreebankSentence::set_comment(std::string_view key, std::string_view value) {
  const std::string line = "# " + std::string(key) + " = " + std::string(value);
  for (auto& existing : comments) {
    const auto prefix = "# " + std::string(key) + " =";
    if (existing.rfind(prefix, 0) == 0) {
      existing = line;
      return;
    }
  }
  comments.push_back(line);
}

std::vector<TokenView> tokens(const TreebankSentence& sentence) {
  std::vector<TokenView> out;
  size_t next_range = 0;
  const int n = static_cast<int>(sentence.rows.size());
  for (int i = 0; i < n;) {
    const int id = i + 1;
    if (next_range < sentence.mwt_ranges.size() && sentence.mwt_ranges[next_range].start == id) {
      const auto& r = sentence.mwt_ranges[next_range++];
      out.push_back({i, r.end - 1, r.form, r.misc, true});
      i = r.end;
    } else {
      const auto& row = sentence.rows[i];
      out.push_back({i, i, row.form, row.misc, false});
      ++i;
    }
  }
  return out;
}

std::vector<TreebankSentence> parse(std::string_view input, const ParseOptions& options,
                                    std::vector<std::string>* warnings) {
  input = text::strip_bom(input);
  std::vector<TreebankSentence> out;
  PendingSentence pending;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos <= input.size()) {
    size_t eol = input.find('\n', pos);
    const bool last = eol == std::string_view::npos;
    if (last) eol = input.size();
    std::string_view line = input.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::string_view trimmed = rstrip(line);
    if (trimmed.empty()) {
      if (!pending.empty()) finish(pending, options, warnings, out);
      if (last) break;
      continue;
    }
    if (pending.empty()) pending.first_line = line_no;
    if (trimmed.front() == '#') {
      if (!pending.sentence.rows.empty()) {
        throw ConlluError(line_no, "comment line inside a sentence");
      }
      pending.sentence.comments.emplace_back(trimmed);
      if (last) break;
      continue;
    }
    const auto fields = split(trimmed, '\t');
    if (fields.size() != 10) {
      throw ConlluError(line_no, "expected 10 tab-separated fields, got " +
                                     std::to_string(fields.size()));
    }
    for (const auto& f : fields) {
      if (f.empty()) throw ConlluError(line_no, "empty field (use \"_\")");
    }
    const std::string_view id = fields[0];
    if (id.find('.') != std::string_view::npos) {
      const auto dot = id.find('.');
      if (!to_int(id.substr(0, dot)) || !to_int(id.substr(dot + 1))) {
        throw ConlluError(line_no, "malformed empty node ID '" + std::string(id) + "'");
      }
      if (last) break;
      continue;
    }
    auto& s = pending.sentence;
    const int expected = static_cast<int>(s.rows.size()) + 1;
    if (const auto dash = id.find('-'); dash != std::string_view::npos) {
      const auto a = to_int(id.substr(0, dash));
      const auto b = to_int(id.substr(dash + 1));
      if (!a || !b) throw ConlluError(line_no, "non-integer ID '" + std::string(id) + "'");
      if (*a > *b) throw ConlluError(line_no, "range start exceeds end in '" + std::string(id) + "'");
      if (!s.mwt_ranges.empty() && *a <= s.mwt_ranges.back().end) {
        throw ConlluError(line_no, "overlapping multi-word token ranges");
      }
      if (*a != expected) {
        throw ConlluError(line_no, "range '" + std::string(id) +
                                       "' must precede its first word " + std::to_string(expected));
      }
      s.mwt_ranges.push_back({*a, *b, std::string(fields[1]), std::string(fields[9])});
      pending.range_lines.push_back(line_no);
      if (last) break;
      continue;
    }
    const auto word_id = to_int(id);
    if (!word_id) throw ConlluError(line_no, "non-integer ID '" + std::string(id) + "'");
    if (*word_id != expected) {
      throw ConlluError(line_no, "word IDs must be consecutive: expected " +
                                     std::to_string(expected) + ", got " + std::string(id));
    }
    WordRow row;
    row.id = *word_id;
    row.form = fields[1];
    row.lemma = fields[2];
    row.upos = fields[3];
    row.xpos = fields[4];
    row.feats = canonical_feats(fields[5]);
    if (fields[6] == "_") {
      row.head = kNoHead;
    } else {
      const auto head = to_int(fields[6]);
      if (!head) throw ConlluError(line_no, "non-integer HEAD '" + std::string(fields[6]) + "'");
      row.head = *head;
    }
    row.deprel = fields[7];
    row.deps = fields[8];
    row.misc = fields[9];
    s.rows.push_back(std::move(row));
    pending.row_lines.push_back(line_no);
    if (last) break;
  }
  if (!pending.empty()) finish(pending, options, warnings, out);
  return out;
}

std::vector<std::string> check_invariants(const TreebankSentence& s) {
  std::vector<std::string> v;
  const int n = static_cast<int>(s.rows.size());
  for (int i = 0; i < n; ++i) {
    const auto& r = s.rows[i];
    if (r.id != i + 1) v.push_back("word IDs are not 1..N consecutive at position " + std::to_string(i + 1));
    for (const std::string* f : {&r.form, &r.lemma, &r.upos, &r.xpos, &r.feats, &r.deprel,
                                 &r.deps, &r.misc}) {
      if (f->empty()) v.push_back("empty field in word " + std::to_string(r.id));
      if (f->find_first_of("\t\n\r") != std::string::npos) {
        v.push_back("tab or newline inside a field of word " + std::to_string(r.id));
      }
    }
    if (r.head != kNoHead && (r.head < 0 || r.head > n)) {
      v.push_back("head of word " + std::to_string(r.id) + " out of range 0.." + std::to_string(n));
    }
    if (r.feats != canonical_feats(r.feats)) {
      v.push_back("feats of word " + std::to_string(r.id) + " are not in canonical order");
    }
  }
  int prev_end = 0;
  for (const auto& m : s.mwt_ranges) {
    if (m.start > m.end) v.push_back("multi-word token range start exceeds end");
    if (m.start < 1 || m.end > n) v.push_back("multi-word token range covers missing word IDs");
    if (m.start <= prev_end) v.push_back("overlapping multi-word token ranges");
    if (m.form.empty() || m.form.find_first_of("\t\n\r") != std::string::npos ||
        m.misc.empty() || m.misc.find_first_of("\t\n\r") != std::string::npos) {
      v.push_back("malformed multi-word token field");
    }
    prev_end = m.end;
  }
  for (const auto& c : s.comments) {
    if (c.empty() || c.front() != '#' || c.find('\n') != std::string::npos) {
      v.push_back("comment lines must start with '#'");
    }
  }
  return v;
}

std::string serialize(const std::vector<TreebankSentence>& sentences) {
  std::ostringstream os;
  for (const auto& s : sentences) {
    if (const auto violations = check_invariants(s); !violations.empty()) {
      throw DataError("cannot serialize sentence: " + violations.front());
    }
    for (const auto& c : s.comments) os << c << '\n';
    size_t next_range = 0;
    for (const auto& r : s.rows) {
      if (next_range < s.mwt_ranges.size() && s.mwt_ranges[next_range].start == r.id) {
        const auto& m = s.mwt_ranges[next_range++];
        os << m.start << '-' << m.end << '\t' << m.form << "\t_\t_\t_\t_\t_\t_\t_\t" << m.misc
           << '\n';
      }
      os << r.id << '\t' << r.form << '\t' << r.lemma << '\t' << r.upos << '\t' << r.xpos << '\t'
         << r.feats << '\t';
      if (r.head == kNoHead) {
        os << '_';
      } else {
        os << r.head;
      }
      os << '\t' << r.deprel << '\t' << r.deps << '\t' << r.misc << '\n';
    }
    os << '\n';
  }
  return os.str();
}

std::string canonicalize(std::string_view input) {
  input = text::strip_bom(input);
  std::string out;
  bool pending_blank = false;
  size_t pos = 0;
  while (pos < input.size()) {
    size_t eol = input.find('\n', pos);
    if (eol == std::string_view::npos) eol = input.size();
    const auto line = rstrip(input.substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty()) {
      pending_blank = !out.empty();
      continue;
    }
    if (pending_blank) out += '\n';
    pending_blank = false;
    out.append(line);
    out += '\n';
  }
  if (!out.empty()) out += '\n';
  return out;
}

std::vector<std::string> validate_tree(const TreebankSentence& s, const TreeCheck& check) {
  std::vector<std::string> v;
  const int n = static_cast<int>(s.rows.size());
  std::vector<int> head(n + 1, 0);
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const int h = s.rows[i].head;
    if (h == kNoHead) {
      v.push_back("word " + std::to_string(i + 1) + " has no head");
      return v;
    }
    if (h < 0 || h > n) {
      v.push_back("head of word " + std::to_string(i + 1) + " out of range");
      return v;
    }
    if (h == i + 1) {
      v.push_back("word " + std::to_string(i + 1) + " is its own head");
    }
    head[i + 1] = h;
    if (h == 0) ++roots;
  }
  if (roots == 0) v.push_back("no node attached to root");
  if (roots > 1 && !check.allow_multiple_roots) v.push_back("multiple root attachments");
  // 0 = unvisited, 1 = on current path, 2 = reaches root
  std::vector<int> state(n + 1, 0);
  state[0] = 2;
  for (int start = 1; start <= n; ++start) {
    std::vector<int> path;
    int cur = start;
    while (state[cur] == 0) {
      state[cur] = 1;
      path.push_back(cur);
      cur = head[cur];
    }
    if (state[cur] == 1 && cur != head[cur]) {
      // cur is on the current path: the suffix from cur is a cycle.
      std::string report = "cycle:";
      auto it = std::find(path.begin(), path.end(), cur);
      std::vector<int> cycle(it, path.end());
      std::sort(cycle.begin(), cycle.end());
      for (int w : cycle) report += " " + std::to_string(w);
      v.push_back(report);
    }
    for (int w : path) state[w] = 2;
  }
  return v;
}

std::string canonical_feats(std::string_view feats) {
  if (feats.empty() || feats == "_") return "_";
  auto parts = split(feats, '|');
  std::vector<std::string> pairs(parts.begin(), parts.end());
  std::stable_sort(pairs.begin(), pairs.end(), [](const std::string& a, const std::string& b) {
    const auto ka = lower_ascii(a.substr(0, a.find('=')));
    const auto kb = lower_ascii(b.substr(0, b.find('=')));
    return ka < kb;
  });
  std::string out;
  for (const auto& p : pairs) {
    if (!out.empty()) out += '|';
    out += p;
  }
  return out;
}

bool space_after(std::string_view misc) {
  for (const auto& part : split(misc, '|')) {
    if (part == "SpaceAfter=No") return false;
  }
  return true;
}

std::string set_space_after(std::string_view misc, bool value) {
  std::string out;
  if (misc != "_") {
    for (const auto& part : split(misc, '|')) {
      if (part == "SpaceAfter=No" || part.empty()) continue;
      if (!out.empty()) out += '|';
      out += part;
    }
  }
  if (!value) {
    if (!out.empty()) out += '|';
    out += "SpaceAfter=No";
  }
  return out.empty() ? "_" : out;
}

ReconstructedText reconstruct_text(const std::vector<TreebankSentence>& sentences) {
  ReconstructedText out;
  bool need_space = false;
  for (const auto& s : sentences) {
    auto& spans = out.token_spans.emplace_back();
    for (const auto& tok : tokens(s)) {
      if (need_space) out.text.push_back(U' ');
      const auto form = text::decode(tok.form);
      const int start = static_cast<int>(out.text.size());
      out.text += form;
      spans.emplace_back(start, static_cast<int>(out.text.size()));
      need_space = space_after(tok.misc);
    }
  }
  return out;
}

std::vector<TreebankSentence> read_file(const std::string& path, const ParseOptions& options,
                                        std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse(buffer.str(), options, warnings);
  } catch (const ConlluError& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace plug::conllu
