#include "plug/document.hpp"

#include "json.hpp"
#include "plug/error.hpp"
#include "plug/text.hpp"

namespace plug::doc {

using nlohmann::ordered_json;

namespace {

void put_word_fields(ordered_json& j, const Word& w) {
  if (!w.upos.empty()) j["upos"] = w.upos;
  if (!w.xpos.empty()) j["xpos"] = w.xpos;
  if (!w.feats.empty()) j["feats"] = w.feats;
  if (w.head >= 0) j["head"] = w.head;
  if (!w.deprel.empty()) j["deprel"] = w.deprel;
  if (!w.lemma.empty()) j["lemma"] = w.lemma;
}

Word word_from(const ordered_json& j, int id, std::string text) {
  Word w;
  w.id = id;
  w.text = std::move(text);
  w.upos = j.value("upos", "");
  w.xpos = j.value("xpos", "");
  w.feats = j.value("feats", "");
  w.head = j.value("head", -1);
  w.deprel = j.value("deprel", "");
  w.lemma = j.value("lemma", "");
  return w;
}

std::string or_blank(const std::string& s) { return s.empty() ? "_" : s; }
std::string from_blank(const std::string& s) { return s == "_" ? "" : s; }

std::string misc_value(const std::string& misc, std::string_view key) {
  if (misc == "_") return "";
  size_t pos = 0;
  while (pos <= misc.size()) {
    const size_t bar = misc.find('|', pos);
    const std::string item = misc.substr(pos, bar == std::string::npos ? std::string::npos : bar - pos);
    if (item.size() > key.size() && item.compare(0, key.size(), key) == 0 && item[key.size()] == '=') {
      return item.substr(key.size() + 1);
    }
    if (bar == std::string::npos) break;
    pos = bar + 1;
  }
  return "";
}

}  // namespace

std::string Token::id() const {
  if (words.empty()) return "?";
  if (words.size() == 1) return std::to_string(words.front().id);
  return std::to_string(words.front().id) + "-" + std::to_string(words.back().id);
}

size_t Sentence::word_count() const {
  size_t n = 0;
  for (const auto& t : tokens) n += t.words.size();
  return n;
}

std::string to_json(const Document& d, int indent) {
  ordered_json j;
  j["text"] = d.text;
  if (!d.language.empty()) j["language"] = d.language;
  j["sentences"] = ordered_json::array();
  for (const auto& s : d.sentences) {
    ordered_json js;
    js["id"] = s.id;
    js["text"] = s.text;
    js["span"] = {s.span.first, s.span.second};
    js["tokens"] = ordered_json::array();
    for (const auto& t : s.tokens) {
      ordered_json jt;
      jt["id"] = t.is_mwt() ? ordered_json(t.id()) : ordered_json(t.words.front().id);
      jt["text"] = t.text;
      jt["span"] = {t.span.first, t.span.second};
      if (t.is_mwt()) {
        jt["expanded"] = ordered_json::array();
        for (const auto& w : t.words) {
          ordered_json jw;
          jw["id"] = w.id;
          jw["text"] = w.text;
          put_word_fields(jw, w);
          jt["expanded"].push_back(std::move(jw));
        }
      } else {
        put_word_fields(jt, t.words.front());
      }
      if (!t.ner.empty()) jt["ner"] = t.ner;
      if (!t.space_after) jt["space_after"] = false;
      js["tokens"].push_back(std::move(jt));
    }
    j["sentences"].push_back(std::move(js));
  }
  if (!d.notices.empty()) j["notices"] = d.notices;
  return j.dump(indent);
}

Document from_json(std::string_view json) {
  Document d;
  try {
    const auto j = ordered_json::parse(json);
    d.text = j.at("text").get<std::string>();
    d.language = j.value("language", "");
    if (j.contains("notices")) d.notices = j.at("notices").get<std::vector<std::string>>();
    for (const auto& js : j.at("sentences")) {
      Sentence s;
      s.id = js.at("id").get<int>();
      s.text = js.at("text").get<std::string>();
      s.span = {js.at("span").at(0).get<int>(), js.at("span").at(1).get<int>()};
      for (const auto& jt : js.at("tokens")) {
        Token t;
        t.text = jt.at("text").get<std::string>();
        t.span = {jt.at("span").at(0).get<int>(), jt.at("span").at(1).get<int>()};
        t.ner = jt.value("ner", "");
        t.space_after = jt.value("space_after", true);
        if (jt.contains("expanded")) {
          for (const auto& jw : jt.at("expanded")) {
            t.words.push_back(word_from(jw, jw.at("id").get<int>(), jw.at("text").get<std::string>()));
          }
        } else {
          t.words.push_back(word_from(jt, jt.at("id").get<int>(), t.text));
        }
        s.tokens.push_back(std::move(t));
      }
      d.sentences.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad document JSON: ") + e.what());
  }
  return d;
}

std::vector<conllu::TreebankSentence> to_conllu(const Document& d) {
  std::vector<conllu::TreebankSentence> out;
  for (const auto& s : d.sentences) {
    conllu::TreebankSentence ts;
    ts.set_comment("sent_id", std::to_string(s.id));
    ts.set_comment("text", s.text);
    for (const auto& t : s.tokens) {
      std::string misc = "_";
      if (!t.ner.empty()) misc = "NER=" + t.ner;
      if (!t.space_after) misc = conllu::set_space_after(misc, false);
      if (t.is_mwt()) {
        ts.mwt_ranges.push_back({t.words.front().id, t.words.back().id, t.text, misc});
        misc = "_";
      }
      for (const auto& w : t.words) {
        conllu::WordRow r;
        r.id = w.id;
        r.form = w.text;
        r.lemma = or_blank(w.lemma);
        r.upos = or_blank(w.upos);
        r.xpos = or_blank(w.xpos);
        r.feats = or_blank(w.feats);
        r.head = w.head >= 0 ? w.head : conllu::kNoHead;
        r.deprel = or_blank(w.deprel);
        r.misc = misc;
        ts.rows.push_back(std::move(r));
      }
    }
    out.push_back(std::move(ts));
  }
  return out;
}

Document from_conllu(const std::vector<conllu::TreebankSentence>& sentences) {
  Document d;
  const auto rebuilt = conllu::reconstruct_text(sentences);
  d.text = text::encode(rebuilt.text);
  for (size_t i = 0; i < sentences.size(); ++i) {
    const auto& ts = sentences[i];
    Sentence s;
    const auto id = ts.comment_value("sent_id");
    s.id = static_cast<int>(i) + 1;
    if (id) {
      try {
        s.id = std::stoi(*id);
      } catch (const std::exception&) {
      }
    }
    const auto toks = conllu::tokens(ts);
    const auto& spans = rebuilt.token_spans[i];
    for (size_t k = 0; k < toks.size(); ++k) {
      const auto& tv = toks[k];
      Token t;
      t.text = tv.form;
      t.span = spans[k];
      t.space_after = conllu::space_after(tv.misc);
      for (int w = tv.first_word; w <= tv.last_word; ++w) {
        const auto& r = ts.rows[static_cast<size_t>(w)];
        Word word;
        word.id = r.id;
        word.text = r.form;
        word.lemma = from_blank(r.lemma);
        word.upos = from_blank(r.upos);
        word.xpos = from_blank(r.xpos);
        word.feats = from_blank(r.feats);
        word.head = r.head;
        word.deprel = from_blank(r.deprel);
        t.words.push_back(std::move(word));
        if (!tv.is_mwt) t.ner = misc_value(r.misc, "NER");
      }
      if (tv.is_mwt) t.ner = misc_value(tv.misc, "NER");
      s.tokens.push_back(std::move(t));
    }
    if (!spans.empty()) {
      s.span = {spans.front().first, spans.back().second};
      s.text = text::encode(rebuilt.text.substr(static_cast<size_t>(s.span.first),
                                                static_cast<size_t>(s.span.second - s.span.first)));
    }
    d.sentences.push_back(std::move(s));
  }
  return d;
}

}  // namespace plug::doc
