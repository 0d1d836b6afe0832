#include "plug/scorer.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>

#include "json.hpp"
#include "plug/error.hpp"
#include "plug/text.hpp"

namespace plug::eval {

namespace {

struct Span {
  int start = 0;
  int end = 0;
};

struct Word {
  Span span;
  bool multiword = false;
  int parent = -1;  // flattened index of the head word, -1 for the root
  const conllu::WordRow* row = nullptr;
};

struct Loaded {
  std::u32string chars;
  std::vector<Span> tokens;
  std::vector<Span> sentences;
  std::vector<Word> words;
};

std::u32string without_spaces(const std::string& form) {
  std::u32string out;
  for (char32_t c : text::decode(form)) {
    if (!text::is_space(c)) out.push_back(c);
  }
  return out;
}

Loaded load(const std::vector<conllu::TreebankSentence>& sentences) {
  Loaded d;
  for (const auto& s : sentences) {
    const int first_word = static_cast<int>(d.words.size());
    const int sentence_start = static_cast<int>(d.chars.size());
    for (const auto& t : conllu::tokens(s)) {
      const auto form = without_spaces(t.form);
      const Span span{static_cast<int>(d.chars.size()), static_cast<int>(d.chars.size() + form.size())};
      d.chars += form;
      d.tokens.push_back(span);
      for (int w = t.first_word; w <= t.last_word; ++w) {
        Word word;
        word.span = span;
        word.multiword = t.is_mwt;
        word.row = &s.rows[static_cast<size_t>(w)];
        d.words.push_back(word);
      }
    }
    for (int w = first_word; w < static_cast<int>(d.words.size()); ++w) {
      const int head = d.words[static_cast<size_t>(w)].row->head;
      d.words[static_cast<size_t>(w)].parent = head > 0 ? first_word + head - 1 : -1;
    }
    if (!s.rows.empty()) d.sentences.push_back({sentence_start, static_cast<int>(d.chars.size())});
  }
  return d;
}

Metric spans_score(const std::vector<Span>& gold, const std::vector<Span>& system) {
  Metric m;
  m.gold = static_cast<long>(gold.size());
  m.system = static_cast<long>(system.size());
  size_t gi = 0, si = 0;
  while (gi < gold.size() && si < system.size()) {
    if (system[si].start < gold[gi].start) {
      ++si;
    } else if (gold[gi].start < system[si].start) {
      ++gi;
    } else {
      m.correct += gold[gi].end == system[si].end;
      ++gi;
      ++si;
    }
  }
  return m;
}

bool beyond_end(const std::vector<Word>& words, size_t i, int end) {
  if (i >= words.size()) return true;
  if (words[i].multiword) return words[i].span.start >= end;
  return words[i].span.end > end;
}

int extend_end(const Word& w, int end) {
  return w.multiword && w.span.end > end ? w.span.end : end;
}

std::string lower_form(const Word& w) { return text::lower(w.row->form); }

struct Alignment {
  std::vector<std::pair<int, int>> pairs;  // (system, gold)
  std::map<int, int> system_to_gold;
};

Alignment align_words(const std::vector<Word>& system, const std::vector<Word>& gold) {
  Alignment a;
  auto add = [&](size_t s, size_t g) {
    a.pairs.emplace_back(static_cast<int>(s), static_cast<int>(g));
    a.system_to_gold[static_cast<int>(s)] = static_cast<int>(g);
  };
  size_t si = 0, gi = 0;
  while (si < system.size() && gi < gold.size()) {
    if (system[si].multiword || gold[gi].multiword) {
      // Smallest region covering the multi-word token on either side.
      int end = 0;
      if (gold[gi].multiword) {
        end = gold[gi].span.end;
        if (!system[si].multiword && system[si].span.start < gold[gi].span.start) ++si;
      } else {
        end = system[si].span.end;
        if (!gold[gi].multiword && gold[gi].span.start < system[si].span.start) ++gi;
      }
      const size_t gs = gi, ss = si;
      while (!beyond_end(gold, gi, end) || !beyond_end(system, si, end)) {
        if (gi < gold.size() && (si >= system.size() || gold[gi].span.start <= system[si].span.start)) {
          end = extend_end(gold[gi], end);
          ++gi;
        } else {
          end = extend_end(system[si], end);
          ++si;
        }
      }
      if (si > ss && gi > gs) {
        const size_t ng = gi - gs, ns = si - ss;
        std::vector<std::vector<int>> lcs(ng, std::vector<int>(ns, 0));
        for (size_t g = ng; g-- > 0;) {
          for (size_t s = ns; s-- > 0;) {
            if (lower_form(gold[gs + g]) == lower_form(system[ss + s])) {
              lcs[g][s] = 1 + (g + 1 < ng && s + 1 < ns ? lcs[g + 1][s + 1] : 0);
            }
            lcs[g][s] = std::max(lcs[g][s], g + 1 < ng ? lcs[g + 1][s] : 0);
            lcs[g][s] = std::max(lcs[g][s], s + 1 < ns ? lcs[g][s + 1] : 0);
          }
        }
        size_t g = 0, s = 0;
        while (g < ng && s < ns) {
          if (lower_form(gold[gs + g]) == lower_form(system[ss + s])) {
            add(ss + s, gs + g);
            ++g;
            ++s;
          } else if (lcs[g][s] == (g + 1 < ng ? lcs[g + 1][s] : 0)) {
            ++g;
          } else {
            ++s;
          }
        }
      }
    } else if (gold[gi].span.start == system[si].span.start && gold[gi].span.end == system[si].span.end) {
      add(si, gi);
      ++gi;
      ++si;
    } else if (gold[gi].span.start <= system[si].span.start) {
      ++gi;
    } else {
      ++si;
    }
  }
  return a;
}

std::string universal_relation(const std::string& deprel) { return deprel.substr(0, deprel.find(':')); }

long round_ratio(long num, long den) {
  // round_half_up(10000 * num / den) in hundredths of a percent
  if (den == 0) return 0;
  return (2 * 10000 * num + den) / (2 * den);
}

void check_text(const Loaded& system, const Loaded& gold) {
  if (system.chars == gold.chars) return;
  size_t i = 0;
  while (i < system.chars.size() && i < gold.chars.size() && system.chars[i] == gold.chars[i]) ++i;
  throw DataError("system and gold text differ at non-whitespace character " + std::to_string(i) +
                  ": system '" + text::encode(system.chars.substr(i, 20)) + "', gold '" +
                  text::encode(gold.chars.substr(i, 20)) + "'");
}

}  // namespace

double Metric::precision() const { return system ? static_cast<double>(correct) / system : 0.0; }
double Metric::recall() const { return gold ? static_cast<double>(correct) / gold : 0.0; }
double Metric::f1() const {
  return system + gold ? 2.0 * static_cast<double>(correct) / static_cast<double>(system + gold) : 0.0;
}
long Metric::precision_hundredths() const { return round_ratio(correct, system); }
long Metric::recall_hundredths() const { return round_ratio(correct, gold); }
long Metric::f1_hundredths() const { return round_ratio(2 * correct, system + gold); }
long Metric::aligned_accuracy_hundredths() const { return round_ratio(correct, aligned); }

std::string format_hundredths(long value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%ld.%02ld", value / 100, value % 100);
  return buf;
}

const Metric& ScoreReport::at(const std::string& name) const {
  for (const auto& [n, m] : metrics) {
    if (n == name) return m;
  }
  if (name == "NER" && has_ner) return ner;
  throw UsageError("no metric named " + name);
}

WordAlignment align(const std::vector<conllu::TreebankSentence>& system,
                    const std::vector<conllu::TreebankSentence>& gold) {
  const auto s = load(system);
  const auto g = load(gold);
  check_text(s, g);
  WordAlignment out;
  out.pairs = align_words(s.words, g.words).pairs;
  return out;
}

ScoreReport score(const std::vector<conllu::TreebankSentence>& system,
                  const std::vector<conllu::TreebankSentence>& gold) {
  const auto s = load(system);
  const auto g = load(gold);
  check_text(s, g);
  const auto a = align_words(s.words, g.words);
  ScoreReport r;
  r.metrics.emplace_back("Tokens", spans_score(g.tokens, s.tokens));
  r.metrics.emplace_back("Sentences", spans_score(g.sentences, s.sentences));

  auto word_metric = [&](auto same) {
    Metric m;
    m.gold = static_cast<long>(g.words.size());
    m.system = static_cast<long>(s.words.size());
    m.aligned = static_cast<long>(a.pairs.size());
    for (const auto& [si, gi] : a.pairs) {
      m.correct += same(s.words[static_cast<size_t>(si)], g.words[static_cast<size_t>(gi)]) ? 1 : 0;
    }
    return m;
  };
  // Gold index of the system word's head: -1 root, -2 unaligned.
  auto system_parent = [&](const Word& w) {
    if (w.parent < 0) return -1;
    auto it = a.system_to_gold.find(w.parent);
    return it == a.system_to_gold.end() ? -2 : it->second;
  };
  r.metrics.emplace_back("Words", word_metric([](const Word&, const Word&) { return true; }));
  r.metrics.emplace_back("UPOS", word_metric([](const Word& x, const Word& y) { return x.row->upos == y.row->upos; }));
  r.metrics.emplace_back("XPOS", word_metric([](const Word& x, const Word& y) { return x.row->xpos == y.row->xpos; }));
  r.metrics.emplace_back("UFeats", word_metric([](const Word& x, const Word& y) {
                           return conllu::canonical_feats(x.row->feats) == conllu::canonical_feats(y.row->feats);
                         }));
  r.metrics.emplace_back("Lemmas", word_metric([](const Word& x, const Word& y) {
                           return y.row->lemma == "_" || x.row->lemma == y.row->lemma;
                         }));
  r.metrics.emplace_back("UAS", word_metric([&](const Word& x, const Word& y) {
                           return system_parent(x) == y.parent;
                         }));
  r.metrics.emplace_back("LAS", word_metric([&](const Word& x, const Word& y) {
                           return system_parent(x) == y.parent &&
                                  universal_relation(x.row->deprel) == universal_relation(y.row->deprel);
                         }));
  return r;
}

Metric score_ner(const std::vector<std::vector<ner::EntitySpan>>& system,
                 const std::vector<std::vector<ner::EntitySpan>>& gold) {
  if (system.size() != gold.size()) throw DataError("NER system and gold sentence counts differ");
  Metric m;
  for (size_t i = 0; i < gold.size(); ++i) {
    m.gold += static_cast<long>(gold[i].size());
    m.system += static_cast<long>(system[i].size());
    auto g = gold[i];
    std::sort(g.begin(), g.end());
    for (const auto& span : system[i]) {
      auto it = std::lower_bound(g.begin(), g.end(), span);
      if (it != g.end() && *it == span) {
        ++m.correct;
        g.erase(it);
      }
    }
  }
  return m;
}

std::string ScoreReport::table() const {
  std::string out =
      "Metric     | Precision |    Recall |  F1 Score | AligndAcc\n"
      "-----------+-----------+-----------+-----------+-----------\n";
  auto row = [&](const std::string& name, const Metric& m, bool aligned) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-11s|%10s |%10s |%10s |", name.c_str(),
                  format_hundredths(m.precision_hundredths()).c_str(),
                  format_hundredths(m.recall_hundredths()).c_str(),
                  format_hundredths(m.f1_hundredths()).c_str());
    out += buf;
    if (aligned) {
      std::snprintf(buf, sizeof buf, "%10s", format_hundredths(m.aligned_accuracy_hundredths()).c_str());
      out += buf;
    }
    out += "\n";
  };
  for (const auto& [name, m] : metrics) {
    row(name, m, name != "Tokens" && name != "Sentences" && name != "Words");
  }
  if (has_ner) row("NER", ner, false);
  return out;
}

std::string ScoreReport::json() const {
  nlohmann::ordered_json j;
  auto entry = [](const Metric& m) {
    nlohmann::ordered_json e;
    e["precision"] = static_cast<double>(m.precision_hundredths()) / 100.0;
    e["recall"] = static_cast<double>(m.recall_hundredths()) / 100.0;
    e["f1"] = static_cast<double>(m.f1_hundredths()) / 100.0;
    e["gold"] = m.gold;
    e["system"] = m.system;
    e["correct"] = m.correct;
    return e;
  };
  for (const auto& [name, m] : metrics) j[name] = entry(m);
  if (has_ner) j["NER"] = entry(ner);
  return j.dump(2);
}

}  // namespace plug::eval
