#include "plug/pipeline.hpp"

#include <chrono>
#include <cstdio>

#include "json.hpp"
#include "plug/error.hpp"
#include "plug/text.hpp"

namespace plug::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

ComponentTiming* slot(TimingReport* t, const std::string& name) {
  if (t == nullptr) return nullptr;
  for (auto& [n, c] : t->components) {
    if (n == name) return &c;
  }
  t->components.emplace_back(name, ComponentTiming{});
  return &t->components.back().second;
}

void add_time(TimingReport* t, const std::string& name, double s, size_t tokens) {
  if (auto* c = slot(t, name)) {
    c->seconds += s;
    c->tokens += tokens;
  }
}

void mark_skipped(TimingReport* t, const std::string& name) {
  if (auto* c = slot(t, name)) c->skipped = true;
}

std::string strip_namespace(const std::string& tag, const std::vector<std::string>& namespaces) {
  for (const auto& ns : namespaces) {
    const auto prefix = ns + ":";
    if (tag.rfind(prefix, 0) == 0) return tag.substr(prefix.size());
  }
  return tag;
}

doc::Word make_word(int id, std::string text) {
  doc::Word w;
  w.id = id;
  w.text = std::move(text);
  return w;
}

size_t token_count(const doc::Document& d) {
  size_t n = 0;
  for (const auto& s : d.sentences) n += s.tokens.size();
  return n;
}

}  // namespace

size_t MemoryReport::total() const {
  size_t t = encoder_bytes;
  for (const auto& [l, b] : bundle_bytes) t += b;
  return t;
}

std::string MemoryReport::to_text() const {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s %12zu bytes (shared, %zu live)\n", "encoder", encoder_bytes,
                encoder_instances);
  out += buf;
  for (const auto& [lang, bytes] : bundle_bytes) {
    std::snprintf(buf, sizeof buf, "%-12s %12zu bytes\n", lang.c_str(), bytes);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%-12s %12zu bytes\n", "total", total());
  return out + buf;
}

double ComponentTiming::tokens_per_second() const {
  return seconds > 0.0 ? static_cast<double>(tokens) / seconds : 0.0;
}

std::string TimingReport::to_text() const {
  std::string out = "component        seconds     tokens/s\n";
  char buf[160];
  auto row = [&](const std::string& name, const ComponentTiming& c) {
    if (c.skipped) {
      std::snprintf(buf, sizeof buf, "%-12s %11s %12s\n", name.c_str(), "skipped", "-");
    } else {
      std::snprintf(buf, sizeof buf, "%-12s %11.4f %12.1f\n", name.c_str(), c.seconds, c.tokens_per_second());
    }
    out += buf;
  };
  for (const auto& [n, c] : components) row(n, c);
  row("end-to-end", total);
  return out;
}

std::string TimingReport::to_json() const {
  nlohmann::ordered_json j;
  auto entry = [](const ComponentTiming& c) {
    nlohmann::ordered_json e;
    e["skipped"] = c.skipped;
    e["seconds"] = c.seconds;
    e["tokens"] = c.tokens;
    e["tokens_per_second"] = c.tokens_per_second();
    return e;
  };
  for (const auto& [n, c] : components) j[n] = entry(c);
  j["end_to_end"] = entry(total);
  return j.dump(2);
}

Pipeline::Pipeline(std::shared_ptr<const encoder::BaseEncoder> encoder,
                   std::shared_ptr<const subword::Vocab> vocab, PipelineOptions options)
    : options_(options), encoder_(std::move(encoder)), vocab_(std::move(vocab)) {
  if (!encoder_ || !vocab_) throw UsageError("pipeline needs an encoder and a vocabulary");
  if (encoder_->config().vocab_size != vocab_->size()) {
    throw DataError("vocabulary size does not match the encoder");
  }
}

Pipeline Pipeline::load(const std::string& dir, const std::vector<std::string>& languages,
                        PipelineOptions options) {
  const auto manifest = pkg::read_manifest(dir);
  auto base = pkg::load_base(dir, manifest);
  Pipeline p(base.encoder, base.vocab, options);
  p.dir_ = dir;
  p.manifest_ = manifest;
  for (const auto& lang : languages) p.resident(lang);
  return p;
}

void Pipeline::add_bundle(pkg::LanguageBundle bundle, size_t bytes) {
  const auto lang = bundle.language;
  if (bytes == 0) bytes = pkg::encode_bundle(bundle).size();
  evict_for(bytes, lang);
  registry_.remove_language(lang);
  for (const auto& [component, set] : bundle.adapters) {
    registry_.register_adapter(set.language() == lang ? set.clone() : set.clone_as(lang));
  }
  bundle.adapters.clear();  // the registry owns them now
  bundles_.insert_or_assign(lang, Resident{std::move(bundle), bytes, ++clock_});
}

void Pipeline::evict_for(size_t incoming, const std::string& keep) {
  if (options_.bundle_budget_bytes == 0) return;
  auto resident_bytes = [&] {
    size_t t = 0;
    for (const auto& [l, r] : bundles_) t += l == keep ? 0 : r.bytes;
    return t;
  };
  while (!bundles_.empty() && resident_bytes() + incoming > options_.bundle_budget_bytes) {
    auto victim = bundles_.end();
    for (auto it = bundles_.begin(); it != bundles_.end(); ++it) {
      if (it->first == keep) continue;
      if (victim == bundles_.end() || it->second.last_used < victim->second.last_used) victim = it;
    }
    if (victim == bundles_.end()) break;
    registry_.remove_language(victim->first);
    bundles_.erase(victim);
  }
}

Pipeline::Resident& Pipeline::resident(const std::string& language) {
  auto it = bundles_.find(language);
  if (it == bundles_.end()) {
    if (dir_.empty() || manifest_.find(language) == nullptr) {
      throw UsageError("language '" + language + "' is not available in this pipeline");
    }
    auto bundle = pkg::load_bundle(dir_, manifest_, language);
    add_bundle(std::move(bundle), manifest_.find(language)->bytes);
    it = bundles_.find(language);
  }
  it->second.last_used = ++clock_;
  return it->second;
}

std::vector<std::string> Pipeline::loaded_languages() const {
  std::vector<std::string> out;
  for (const auto& [l, r] : bundles_) out.push_back(l);
  return out;
}

std::vector<std::string> Pipeline::available_languages() const {
  std::vector<std::string> out = loaded_languages();
  for (const auto& e : manifest_.languages) {
    if (!bundles_.count(e.language)) out.push_back(e.language);
  }
  return out;
}

MemoryReport Pipeline::memory_report() const {
  MemoryReport m;
  m.encoder_bytes = manifest_.encoder_bytes;
  if (m.encoder_bytes == 0) m.encoder_bytes = io::encode(encoder_->to_tensor_file()).size();
  for (const auto& [l, r] : bundles_) m.bundle_bytes[l] = r.bytes;
  m.encoder_instances = pkg::live_encoder_count();
  return m;
}

encoder::EncodedText Pipeline::encode_for(const std::string& language, const pkg::LanguageBundle&,
                                          encoder::Component component, const subword::WordpieceSeq& seq,
                                          TimingReport* timing) {
  const auto start = Clock::now();
  encoder::EncodedText out;
  if (registry_.contains(language, component)) {
    registry_.activate(language, component);
    out = encoder::encode(*encoder_, registry_, seq);
  } else {
    registry_.deactivate();
    out = encoder::encode(*encoder_, nullptr, seq);
  }
  add_time(timing, "encoder", seconds_since(start), 0);
  return out;
}

doc::Document Pipeline::annotate(const std::string& language, std::string_view text) {
  return annotate_impl(language, text, nullptr);
}

doc::Document Pipeline::annotate_impl(const std::string& language, std::string_view raw,
                                      TimingReport* timing) {
  auto& r = resident(language);
  doc::Document d;
  d.language = language;
  d.text = std::string(raw);
  const auto cps = text::decode(raw);
  const auto start = Clock::now();
  if (!r.bundle.splitter) {
    // Without a splitter: one sentence, whitespace-delimited tokens.
    d.notices.push_back("splitter skipped: bundle has no splitter");
    mark_skipped(timing, "splitter");
    doc::Sentence s;
    size_t i = 0;
    while (i < cps.size()) {
      while (i < cps.size() && text::is_space(cps[i])) ++i;
      const size_t b = i;
      while (i < cps.size() && !text::is_space(cps[i])) ++i;
      if (i > b) {
        doc::Token t;
        t.span = {static_cast<int>(b), static_cast<int>(i)};
        t.text = text::encode(cps.substr(b, i - b));
        t.space_after = i == cps.size() || text::is_space(cps[i]);
        s.tokens.push_back(std::move(t));
      }
    }
    if (!s.tokens.empty()) d.sentences.push_back(std::move(s));
  } else {
    const auto seq = subword::tokenize(*vocab_, std::u32string_view(cps));
    if (!seq.empty()) {
      std::vector<splitter::BoundaryLabel> labels;
      for (const auto& w : splitter::windows(seq.size(), r.bundle.splitter->window)) {
        const auto enc = encode_for(language, r.bundle, encoder::Component::splitter,
                                    splitter::slice(seq, w.range), timing);
        const auto part = splitter::predict_boundaries(enc, *r.bundle.splitter);
        labels.insert(labels.end(), part.begin() + (w.keep.begin - w.range.begin),
                      part.begin() + (w.keep.end - w.range.begin));
      }
      const auto seg = splitter::aggregate(labels, seq, cps);
      for (const auto& sentence : seg.sentences) {
        doc::Sentence s;
        for (const auto& st : sentence) {
          doc::Token t;
          t.text = st.surface;
          t.span = {st.start, st.end};
          t.space_after = st.end == static_cast<int>(cps.size()) || text::is_space(cps[static_cast<size_t>(st.end)]);
          // Flag for the MWT stage; replaced by real words there.
          t.words.push_back(make_word(st.is_mwt ? -1 : 0, st.surface));
          s.tokens.push_back(std::move(t));
        }
        d.sentences.push_back(std::move(s));
      }
    }
    add_time(timing, "splitter", seconds_since(start), 0);
  }
  run_stages(language, d, r.bundle.splitter.has_value(), timing);
  return d;
}

doc::Document Pipeline::annotate_pretokenized(const std::string& language,
                                              const std::vector<std::vector<std::string>>& sentences) {
  resident(language);
  doc::Document d;
  d.language = language;
  std::u32string all;
  for (const auto& sentence : sentences) {
    if (sentence.empty()) continue;
    doc::Sentence s;
    for (const auto& tok : sentence) {
      if (!all.empty()) all.push_back(U' ');
      const auto cps = text::decode(tok);
      doc::Token t;
      t.text = tok;
      t.span = {static_cast<int>(all.size()), static_cast<int>(all.size() + cps.size())};
      all += cps;
      s.tokens.push_back(std::move(t));
    }
    d.sentences.push_back(std::move(s));
  }
  d.text = text::encode(all);
  d.notices.push_back("splitter bypassed: pretokenized input");
  run_stages(language, d, false, nullptr);
  return d;
}

void Pipeline::run_stages(const std::string& language, doc::Document& d, bool from_splitter,
                          TimingReport* timing) {
  auto& bundle = resident(language).bundle;
  const auto cps = text::decode(d.text);
  const size_t tokens = token_count(d);

  // Sentence ids, texts and spans.
  for (size_t i = 0; i < d.sentences.size(); ++i) {
    auto& s = d.sentences[i];
    s.id = static_cast<int>(i) + 1;
    s.span = {s.tokens.front().span.first, s.tokens.back().span.second};
    s.text = text::encode(cps.substr(static_cast<size_t>(s.span.first),
                                     static_cast<size_t>(s.span.second - s.span.first)));
  }

  // MWT expansion and word ids.
  auto start = Clock::now();
  const bool expand = from_splitter && bundle.mwt.has_value();
  if (!bundle.mwt) {
    d.notices.push_back("mwt skipped: bundle has no MWT expander");
    mark_skipped(timing, "mwt");
  }
  for (auto& s : d.sentences) {
    int next_id = 1;
    for (auto& t : s.tokens) {
      const bool flagged = !t.words.empty() && t.words.front().id < 0;
      std::vector<std::string> forms{t.text};
      if (expand && flagged) {
        auto expanded = seq2seq::expand_mwt(*bundle.mwt, t.text);
        // A single-word expansion keeps the surface form.
        if (expanded.size() > 1) forms = std::move(expanded);
      }
      t.words.clear();
      for (auto& f : forms) t.words.push_back(make_word(next_id++, std::move(f)));
    }
  }
  if (bundle.mwt) add_time(timing, "mwt", seconds_since(start), tokens);

  // Tagging and parsing.
  start = Clock::now();
  if (bundle.tagparse) {
    for (auto& s : d.sentences) {
      std::vector<doc::Word*> words;
      std::vector<std::string> forms;
      for (auto& t : s.tokens) {
        for (auto& w : t.words) {
          words.push_back(&w);
          forms.push_back(w.text);
        }
      }
      const auto seq = subword::tokenize_units(*vocab_, forms);
      const auto enc = encode_for(language, bundle, encoder::Component::tagparse, seq, timing);
      const auto parsed = parse::parse_sentence(enc, static_cast<int>(forms.size()), *bundle.tagparse);
      for (size_t i = 0; i < words.size(); ++i) {
        words[i]->upos = parsed.upos[i];
        words[i]->xpos = strip_namespace(parsed.xpos[i], bundle.xpos_namespaces);
        words[i]->feats = parsed.feats[i];
        words[i]->head = parsed.heads[i];
        words[i]->deprel = parsed.deprel[i];
      }
    }
    add_time(timing, "tagparse", seconds_since(start), tokens);
  } else {
    d.notices.push_back("tagparse skipped: bundle has no tagger/parser");
    mark_skipped(timing, "tagparse");
  }

  // Lemmas.
  start = Clock::now();
  if (bundle.lemma) {
    for (auto& s : d.sentences) {
      for (auto& t : s.tokens) {
        for (auto& w : t.words) {
          w.lemma = bundle.lemma->transduce(w.text, w.upos.empty() ? "_" : w.upos).output;
        }
      }
    }
    add_time(timing, "lemma", seconds_since(start), tokens);
  } else {
    d.notices.push_back("lemma skipped: bundle has no lemmatizer");
    mark_skipped(timing, "lemma");
  }

  // Entities over tokens.
  start = Clock::now();
  if (bundle.ner) {
    for (auto& s : d.sentences) {
      std::vector<std::string> surfaces;
      for (const auto& t : s.tokens) surfaces.push_back(t.text);
      const auto seq = subword::tokenize_units(*vocab_, surfaces);
      const auto enc = encode_for(language, bundle, encoder::Component::ner, seq, timing);
      const auto tags = ner::predict(enc, static_cast<int>(surfaces.size()), *bundle.ner);
      for (size_t i = 0; i < tags.size(); ++i) s.tokens[i].ner = tags[i];
    }
    add_time(timing, "ner", seconds_since(start), tokens);
  } else {
    d.notices.push_back("ner skipped: bundle has no NER model");
    mark_skipped(timing, "ner");
  }
  registry_.deactivate();
}

TimingReport Pipeline::timing_report(const std::string& language, const std::vector<std::string>& texts) {
  if (texts.empty()) throw UsageError("timing needs a nonempty corpus");
  TimingReport t;
  for (const char* n : {"encoder", "splitter", "mwt", "tagparse", "lemma", "ner"}) slot(&t, n);
  const auto start = Clock::now();
  size_t tokens = 0;
  for (const auto& text : texts) tokens += token_count(annotate_impl(language, text, &t));
  t.total.seconds = seconds_since(start);
  t.total.tokens = tokens;
  for (auto& [n, c] : t.components) {
    if (!c.skipped && c.tokens == 0) c.tokens = tokens;
  }
  return t;
}

}  // namespace plug::pipeline
