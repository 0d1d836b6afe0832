#include "toy.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <optional>
#include <set>

#include "plug/text.hpp"

namespace toy {

namespace {

using plug::conllu::TreebankSentence;
using plug::conllu::WordRow;
using Rng = std::mt19937_64;

struct Lexicon {
  std::vector<std::string> nouns, verbs, adjectives, persons, places;
};

std::string syllables(Rng& rng, int n) {
  static const std::string consonants = "bdfgklmnprstvz";
  static const std::string vowels = "aeiou";
  std::string s;
  for (int i = 0; i < n; ++i) {
    s += consonants[rng() % consonants.size()];
    s += vowels[rng() % vowels.size()];
  }
  return s;
}

const Lexicon& lexicon() {
  static const Lexicon lex = [] {
    Lexicon l;
    Rng rng(20240607);
    std::set<std::string> used{"la", "un", "de", "an", "por", "del", "al", "lai", "uni"};
    auto fresh = [&](int syl, const std::string& tail) {
      for (;;) {
        auto s = syllables(rng, syl) + tail;
        if (used.insert(s).second) return s;
      }
    };
    for (int i = 0; i < 30; ++i) l.nouns.push_back(fresh(2, i % 3 == 0 ? "n" : ""));
    for (int i = 0; i < 20; ++i) l.verbs.push_back(fresh(2, ""));
    for (int i = 0; i < 12; ++i) l.adjectives.push_back(fresh(2, "r"));
    for (int i = 0; i < 8; ++i) {
      auto p = fresh(2, "");
      p[0] = static_cast<char>(p[0] - 'a' + 'A');
      l.persons.push_back(p);
    }
    for (int i = 0; i < 6; ++i) {
      auto p = fresh(3, "");
      p[0] = static_cast<char>(p[0] - 'a' + 'A');
      l.places.push_back(p);
    }
    return l;
  }();
  return lex;
}

struct Word {
  std::string form{}, lemma{}, upos{}, xpos{}, feats{}, deprel{};
  int head = -1;  // index into the sentence word list, -1 = root
  std::string ner = "O";
};

struct Builder {
  const Language& lang;
  Rng& rng;
  std::vector<Word> words;

  int add(Word w) {
    words.push_back(std::move(w));
    return static_cast<int>(words.size()) - 1;
  }
  std::string xp(const std::string& tag) const { return lang.xpos_prefix + tag; }
  bool coin(double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; }
  template <class T>
  const T& pick(const std::vector<T>& v) { return v[rng() % v.size()]; }
};

// A phrase: its words in surface order and the index of its head word.
struct Phrase {
  std::vector<int> words;
  int head = -1;
};

Phrase noun_phrase(Builder& b, bool allow_name) {
  Phrase p;
  const auto& lex = lexicon();
  if (allow_name && b.coin(0.25)) {
    Word w{.form = b.pick(lex.persons), .lemma = "", .upos = "PROPN", .xpos = b.xp("NNP"), .feats = "_"};
    w.lemma = w.form;
    w.ner = "S-PER";
    p.head = b.add(w);
    p.words = {p.head};
    return p;
  }
  const bool plural = b.coin(0.35);
  const bool definite = b.coin(0.6);
  Word det{.form = definite ? "la" : "un", .lemma = definite ? "la" : "un", .upos = "DET",
           .xpos = b.xp("DT"),
           .feats = std::string("Definite=") + (definite ? "Def" : "Ind") + "|Number=" +
                    (plural ? "Plur" : "Sing") + "|PronType=Art"};
  if (plural) det.form += "i";
  const auto& stem = b.pick(lex.nouns);
  Word noun{.form = plural ? stem + "i" : stem, .lemma = stem, .upos = "NOUN",
            .xpos = b.xp(plural ? "NNS" : "NN"), .feats = plural ? "Number=Plur" : "Number=Sing"};
  const int d = b.add(det);
  const int n = b.add(noun);
  int a = -1;
  if (b.coin(0.35)) {
    const auto& astem = b.pick(lex.adjectives);
    Word adj{.form = astem + (plural ? "oi" : "o"), .lemma = astem + "o", .upos = "ADJ",
             .xpos = b.xp("JJ"), .feats = plural ? "Number=Plur" : "Number=Sing"};
    a = b.add(adj);
  }
  p.words.push_back(d);
  if (a >= 0 && !b.lang.adjective_after_noun) p.words.push_back(a);
  p.words.push_back(n);
  if (a >= 0 && b.lang.adjective_after_noun) p.words.push_back(a);
  if (b.lang.determiner_heads_noun) {
    b.words[n].head = d;
    b.words[n].deprel = "compound";
    p.head = d;
  } else {
    b.words[d].head = n;
    b.words[d].deprel = "det";
    p.head = n;
  }
  if (a >= 0) {
    b.words[a].head = n;
    b.words[a].deprel = "amod";
  }
  return p;
}

Phrase prepositional_phrase(Builder& b) {
  Phrase p;
  const auto& lex = lexicon();
  static const std::vector<std::string> preps{"de", "an", "por"};
  const auto& prep = b.pick(preps);
  const int c = b.add(Word{.form = prep, .lemma = prep, .upos = "ADP", .xpos = b.xp("IN"), .feats = "_"});
  Phrase np;
  if (b.coin(0.2)) {
    // Two-word place name.
    const int first = b.add(Word{.form = b.pick(lex.places), .lemma = "", .upos = "PROPN",
                                 .xpos = b.xp("NNP"), .feats = "_"});
    const int second = b.add(Word{.form = b.pick(lex.persons), .lemma = "", .upos = "PROPN",
                                  .xpos = b.xp("NNP"), .feats = "_"});
    b.words[first].lemma = b.words[first].form;
    b.words[second].lemma = b.words[second].form;
    b.words[first].ner = "B-LOC";
    b.words[second].ner = "E-LOC";
    b.words[second].head = first;
    b.words[second].deprel = "flat";
    np.words = {first, second};
    np.head = first;
  } else {
    np = noun_phrase(b, false);
  }
  p.words.push_back(c);
  p.words.insert(p.words.end(), np.words.begin(), np.words.end());
  if (b.lang.case_marker_heads_noun) {
    b.words[np.head].head = c;
    b.words[np.head].deprel = "pobj";
    p.head = c;
  } else {
    b.words[c].head = np.head;
    b.words[c].deprel = "case";
    p.head = np.head;
  }
  return p;
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

struct Generated {
  TreebankSentence sentence;
  plug::ner::NerSentence ner;
};

Generated sentence(const Language& lang, Rng& rng, int index) {
  Builder b{lang, rng, {}};
  const auto& lex = lexicon();
  const bool past = b.coin(0.4);
  const auto& vstem = b.pick(lex.verbs);
  const int v = b.add(Word{.form = vstem + (past ? "eth" : "a"), .lemma = vstem + "ar", .upos = "VERB",
                           .xpos = b.xp(past ? "VBD" : "VBZ"),
                           .feats = std::string("Person=3|Tense=") + (past ? "Past" : "Pres")});
  Phrase subj = noun_phrase(b, true);
  b.words[subj.head].head = v;
  b.words[subj.head].deprel = "nsubj";
  std::vector<Phrase> order;
  Phrase verb{{v}, v};
  std::optional<Phrase> obj;
  if (b.coin(0.7)) {
    obj = noun_phrase(b, true);
    b.words[obj->head].head = v;
    b.words[obj->head].deprel = lang.object_relation;
  }
  std::optional<Phrase> pp;
  if (b.coin(0.6)) {
    pp = prepositional_phrase(b);
    b.words[pp->head].head = v;
    b.words[pp->head].deprel = "obl";
  }
  switch (lang.order) {
    case Order::svo:
      order = {subj, verb};
      if (obj) order.push_back(*obj);
      if (pp) order.push_back(*pp);
      break;
    case Order::sov:
      order = {subj};
      if (pp) order.push_back(*pp);
      if (obj) order.push_back(*obj);
      order.push_back(verb);
      break;
    case Order::vso:
      order = {verb, subj};
      if (obj) order.push_back(*obj);
      if (pp) order.push_back(*pp);
      break;
    case Order::ovs:
      if (obj) order.push_back(*obj);
      order.push_back(verb);
      order.push_back(subj);
      if (pp) order.push_back(*pp);
      break;
  }
  static const std::vector<std::string> marks{".", ".", ".", ".", "!", "?"};
  const auto& mark = b.pick(marks);
  const int punct = b.add(Word{.form = mark, .lemma = mark, .upos = "PUNCT", .xpos = b.xp("PUNCT"), .feats = "_"});
  b.words[punct].head = v;
  b.words[punct].deprel = "punct";
  order.push_back(Phrase{{punct}, punct});

  std::vector<int> surface;
  for (const auto& p : order) surface.insert(surface.end(), p.words.begin(), p.words.end());
  std::vector<int> position(b.words.size());
  for (size_t i = 0; i < surface.size(); ++i) position[static_cast<size_t>(surface[i])] = static_cast<int>(i);

  Generated g;
  auto& s = g.sentence;
  for (size_t i = 0; i < surface.size(); ++i) {
    const auto& w = b.words[static_cast<size_t>(surface[i])];
    WordRow r;
    r.id = static_cast<int>(i) + 1;
    r.form = i == 0 ? capitalize(w.form) : w.form;
    r.lemma = w.lemma;
    r.upos = w.upos;
    r.xpos = w.xpos;
    r.feats = w.feats;
    r.head = w.head < 0 ? 0 : position[static_cast<size_t>(w.head)] + 1;
    r.deprel = w.head < 0 ? "root" : w.deprel;
    s.rows.push_back(r);
  }
  // Contractions de+la -> del, an+la -> al.
  for (size_t i = 0; i + 1 < s.rows.size(); ++i) {
    const auto first = plug::text::lower(s.rows[i].form);
    if (s.rows[i + 1].form != "la" || (first != "de" && first != "an")) continue;
    if (!s.mwt_ranges.empty() && s.mwt_ranges.back().end >= s.rows[i].id) continue;
    std::string form = first == "de" ? "del" : "al";
    if (i == 0) form = capitalize(form);
    s.mwt_ranges.push_back({s.rows[i].id, s.rows[i + 1].id, form, "_"});
  }
  // Punctuation attaches to the previous token.
  auto toks = plug::conllu::tokens(s);
  if (toks.size() >= 2) {
    const auto& before = toks[toks.size() - 2];
    if (before.is_mwt) {
      for (auto& r : s.mwt_ranges) {
        if (r.start == before.first_word + 1) r.misc = "SpaceAfter=No";
      }
    } else {
      s.rows[static_cast<size_t>(before.last_word)].misc = "SpaceAfter=No";
    }
  }
  toks = plug::conllu::tokens(s);
  std::string text;
  for (size_t t = 0; t < toks.size(); ++t) {
    text += toks[t].form;
    if (t + 1 < toks.size() && plug::conllu::space_after(toks[t].misc)) text += " ";
    g.ner.tokens.push_back(toks[t].form);
    g.ner.tags.push_back(toks[t].is_mwt ? "O" : b.words[static_cast<size_t>(surface[static_cast<size_t>(toks[t].first_word)])].ner);
  }
  s.set_comment("sent_id", lang.code + "-" + std::to_string(index + 1));
  s.set_comment("text", text);
  return g;
}

}  // namespace

Corpus generate(const Language& lang, int sentences, uint64_t seed) {
  Rng rng(seed);
  Corpus c;
  for (int i = 0; i < sentences; ++i) {
    auto g = sentence(lang, rng, i);
    c.sentences.push_back(std::move(g.sentence));
    c.ner.push_back(std::move(g.ner));
  }
  return c;
}

std::vector<std::string> pretraining_text(int toy_sentences, int background_sentences, uint64_t seed) {
  std::vector<std::string> out;
  const std::vector<Language> langs{
      {.code = "p1", .order = Order::svo},
      {.code = "p2", .order = Order::sov, .adjective_after_noun = false},
      {.code = "p3", .order = Order::vso},
  };
  for (size_t l = 0; l < langs.size(); ++l) {
    const auto c = generate(langs[l], toy_sentences / static_cast<int>(langs.size()), seed + l);
    for (const auto& s : c.sentences) out.push_back(*s.comment_value("text"));
  }
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::string> words;
  for (int i = 0; i < 12000; ++i) words.push_back(syllables(rng, 2 + static_cast<int>(rng() % 4)));
  // Zipf-like draw so frequent pairs exist for the merges.
  std::vector<double> weights;
  for (size_t i = 0; i < words.size(); ++i) weights.push_back(1.0 / static_cast<double>(i + 10));
  std::discrete_distribution<size_t> pick(weights.begin(), weights.end());
  for (int i = 0; i < background_sentences; ++i) {
    std::string s;
    const int n = 5 + static_cast<int>(rng() % 8);
    for (int k = 0; k < n; ++k) {
      if (k) s += ' ';
      s += words[pick(rng)];
    }
    out.push_back(s + " .");
  }
  return out;
}

}  // namespace toy

namespace toy {

Base make_base(const BaseOptions& options) {
  const auto lines = pretraining_text(options.toy_sentences, options.background_sentences, options.seed);
  std::string corpus;
  for (const auto& line : lines) corpus += line + "\n";
  // Multi-sentence documents so that later positions see training too.
  std::vector<std::string> text;
  Rng rng(options.seed);
  for (size_t i = 0; i < lines.size();) {
    const size_t n = 1 + rng() % static_cast<size_t>(options.max_doc_sentences);
    std::string d;
    for (size_t k = 0; k < n && i < lines.size(); ++k, ++i) d += (d.empty() ? "" : " ") + lines[i];
    text.push_back(std::move(d));
  }
  Base b;
  b.vocab = plug::subword::Vocab::train(corpus, options.vocab_size, options.seed);
  b.encoder = plug::encoder::BaseEncoder::init({.vocab_size = b.vocab.size()}, options.seed);
  plug::encoder::pretrain(b.encoder, b.vocab, text,
                          {.epochs = options.pretrain_epochs, .seed = options.seed,
                           .max_sentences = options.pretrain_documents});
  b.file_bytes = plug::io::encode(b.encoder.to_tensor_file());
  b.checksum = plug::io::content_checksum(b.file_bytes);
  return b;
}

}  // namespace toy
