#include "plug/ner.hpp"

#include <set>
#include <sstream>

#include "plug/error.hpp"
#include "plug/parserhead.hpp"
#include "plug/tensor_io.hpp"
#include "plug/text.hpp"

namespace plug::ner {

namespace {

char prefix_of(const std::string& tag) { return tag == "O" || tag.size() < 2 ? 'O' : tag[0]; }
std::string type_of(const std::string& tag) { return tag.size() > 2 ? tag.substr(2) : ""; }

}  // namespace

SpanDecode bioes_to_spans(const std::vector<std::string>& tags) {
  SpanDecode out;
  int open = -1;
  std::string open_type;
  auto close = [&](int end) {
    out.spans.push_back({open_type, open, end});
    open = -1;
  };
  for (int t = 0; t < static_cast<int>(tags.size()); ++t) {
    const char p = prefix_of(tags[t]);
    const auto type = type_of(tags[t]);
    const bool continues = open >= 0 && type == open_type && (p == 'I' || p == 'E');
    if (open >= 0 && !continues) {
      close(t - 1);
      ++out.repairs;
    }
    switch (p) {
      case 'S':
        out.spans.push_back({type, t, t});
        break;
      case 'B':
        open = t;
        open_type = type;
        break;
      case 'I':
        if (open < 0) {
          ++out.repairs;
          open = t;
          open_type = type;
        }
        break;
      case 'E':
        if (open < 0) {
          ++out.repairs;
          out.spans.push_back({type, t, t});
        } else {
          close(t);
        }
        break;
      default:
        break;
    }
  }
  if (open >= 0) {
    close(static_cast<int>(tags.size()) - 1);
    ++out.repairs;
  }
  return out;
}

std::vector<std::string> spans_to_bioes(const std::vector<EntitySpan>& spans, size_t length) {
  std::vector<std::string> tags(length, "O");
  for (const auto& s : spans) {
    if (s.start < 0 || s.end < s.start || static_cast<size_t>(s.end) >= length) {
      throw UsageError("entity span outside the sentence");
    }
    if (s.start == s.end) {
      tags[static_cast<size_t>(s.start)] = "S-" + s.type;
      continue;
    }
    tags[static_cast<size_t>(s.start)] = "B-" + s.type;
    for (int t = s.start + 1; t < s.end; ++t) tags[static_cast<size_t>(t)] = "I-" + s.type;
    tags[static_cast<size_t>(s.end)] = "E-" + s.type;
  }
  return tags;
}

std::vector<std::string> to_bioes(const std::vector<std::string>& tags) {
  for (const auto& t : tags) {
    const char p = prefix_of(t);
    if (p == 'E' || p == 'S') return tags;
  }
  // Entity runs: a B always starts one, an I starts one unless it continues
  // the same type.
  std::vector<EntitySpan> spans;
  for (size_t t = 0; t < tags.size(); ++t) {
    const char p = prefix_of(tags[t]);
    if (p == 'O') continue;
    if (p != 'B' && p != 'I') throw DataError("unseen tag scheme: '" + tags[t] + "'");
    const auto type = type_of(tags[t]);
    const bool extend = p == 'I' && !spans.empty() && spans.back().end + 1 == static_cast<int>(t) &&
                        spans.back().type == type;
    if (extend) {
      spans.back().end = static_cast<int>(t);
    } else {
      spans.push_back({type, static_cast<int>(t), static_cast<int>(t)});
    }
  }
  return spans_to_bioes(spans, tags.size());
}

std::vector<NerSentence> parse_corpus(std::string_view raw) {
  std::vector<NerSentence> out;
  NerSentence current;
  size_t line_no = 0;
  std::string_view text = text::strip_bom(raw);
  size_t pos = 0;
  while (pos <= text.size()) {
    const size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      if (!current.tokens.empty()) out.push_back(std::move(current));
      current = {};
      continue;
    }
    const size_t tab = line.find('\t');
    if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos) {
      throw DataError("line " + std::to_string(line_no) + ": expected token<TAB>tag");
    }
    current.tokens.emplace_back(line.substr(0, tab));
    current.tags.emplace_back(line.substr(tab + 1));
    if (current.tokens.back().empty() || current.tags.back().empty()) {
      throw DataError("line " + std::to_string(line_no) + ": empty token or tag");
    }
  }
  if (!current.tokens.empty()) out.push_back(std::move(current));
  return out;
}

std::string serialize_corpus(const std::vector<NerSentence>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    for (size_t i = 0; i < s.tokens.size(); ++i) out += s.tokens[i] + "\t" + s.tags[i] + "\n";
    out += "\n";
  }
  return out;
}

std::vector<NerSentence> read_corpus(const std::string& path) {
  try {
    return parse_corpus(io::read_file(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

LabelSet label_set(const std::vector<NerSentence>& corpus) {
  std::set<std::string> types;
  for (const auto& s : corpus) {
    for (const auto& t : s.tags) {
      const char p = prefix_of(t);
      if (p == 'O' && t == "O") continue;
      if (std::string("BIES").find(p) == std::string::npos || t.size() < 3 || t[1] != '-') {
        throw DataError("unseen tag scheme: '" + t + "'");
      }
      types.insert(type_of(t));
    }
  }
  std::vector<std::string> names{"O"};
  for (const auto& type : types) {
    for (const char* p : {"B-", "I-", "E-", "S-"}) names.push_back(p + type);
  }
  return LabelSet(std::move(names));
}

NerHead NerHead::init(LabelSet labels, int dim, int hidden, uint64_t seed) {
  if (labels.empty()) throw DataError("empty NER label set");
  nn::Rng rng(seed);
  NerHead h;
  h.labels = std::move(labels);
  nn::Linear::init(h.params, "ner.emission.hidden", dim, hidden, rng);
  nn::Linear::init_zero(h.params, "ner.emission.out", hidden, h.labels.size());
  h.params.add("ner.transitions", nn::zeros(h.labels.size() + 2, h.labels.size() + 2));
  h.bind();
  return h;
}

void NerHead::bind() {
  emission_ = nn::FeedForward::bind(params, "ner.emission");
  transitions_ = &params.at("ner.transitions");
  mask_ = crf::constraint_mask(labels.names());
}

NerExample make_example(const NerSentence& sentence, const subword::Vocab& vocab,
                        const NerHead& head) {
  NerExample ex;
  ex.tokens = sentence.tokens;
  for (const auto& t : to_bioes(sentence.tags)) {
    const int id = head.labels.id(t);
    if (id < 0) throw DataError("tag '" + t + "' is not in the NER label set");
    ex.gold.push_back(id);
  }
  ex.seq = subword::tokenize_units(vocab, ex.tokens);
  return ex;
}

nn::Var loss(nn::Graph& g, const encoder::EncodedVars& enc, const NerHead& head,
             const NerExample& example) {
  const int n = static_cast<int>(example.tokens.size());
  nn::Var tokens = parse::word_vectors(g, enc.reps, example.seq.space_split_index, n);
  nn::Var e = head.emissions(g, tokens);
  nn::Var nll = crf::nll(g, e, head.transition_scores(g), head.mask(), example.gold);
  return nn::scale(nll, 1.0 / std::max(1, n));
}

std::vector<std::string> predict(const encoder::EncodedText& enc, int tokens, const NerHead& head) {
  if (tokens == 0) return {};
  nn::Graph g;
  nn::Var t = g.constant(parse::word_vectors(enc.reps, enc.seq.space_split_index, tokens));
  const auto best = crf::viterbi(head.emissions(g, t).value(), head.effective_transitions());
  std::vector<std::string> out;
  for (int id : best.path) out.push_back(head.labels.name(id));
  return out;
}

}  // namespace plug::ner
