#include "plug/trainer.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "plug/error.hpp"
#include "plug/neural/optim.hpp"

namespace plug::train {

namespace {

using encoder::Component;

uint64_t mix(uint64_t seed, std::string_view a, std::string_view b) {
  uint64_t h = 1469598103934665603ULL ^ seed;
  for (char c : a) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
  h = (h ^ 0xff) * 1099511628211ULL;
  for (char c : b) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
  return h;
}

void say(const TrainConfig& c, const std::string& line) {
  if (c.log) c.log(line);
}

// Mini-batch Adam over adapter and head parameters; the encoder contributes
// no trainable parameters.
template <class Example, class LossFn>
void fit(const encoder::BaseEncoder& base, encoder::AdapterSet* adapter, nn::ParamStore& head,
         const std::vector<Example>& data, int epochs, const TrainConfig& config, uint64_t seed,
         const std::string& label, LossFn loss) {
  if (data.empty() || epochs <= 0) return;
  std::vector<nn::Parameter*> params = head.trainable();
  if (adapter != nullptr) {
    for (auto* p : adapter->params().trainable()) params.push_back(p);
  }
  head.zero_grad();
  if (adapter != nullptr) adapter->params().zero_grad();
  nn::Adam adam(nn::AdamConfig{.lr = config.lr});
  nn::Rng rng(seed);
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const size_t batch = static_cast<size_t>(std::max(1, config.batch));
  const long steps_per_epoch = static_cast<long>((data.size() + batch - 1) / batch);
  const long total = steps_per_epoch * epochs;
  for (int e = 0; e < epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    for (size_t b = 0; b < order.size(); b += batch) {
      const size_t end = std::min(order.size(), b + batch);
      for (size_t i = b; i < end; ++i) {
        const auto& ex = data[order[i]];
        nn::Graph g;
        const auto enc = encoder::encode_graph(g, base, adapter, ex.seq);
        nn::Var l = loss(g, enc, ex);
        sum += l.scalar();
        g.backward(nn::scale(l, 1.0 / static_cast<double>(end - b)));
      }
      adam.step(params, nn::warmup_schedule(adam.steps(), total));
    }
    if (e == 0 || e + 1 == epochs || (e + 1) % 10 == 0) {
      say(config, label + " epoch " + std::to_string(e + 1) + "/" + std::to_string(epochs) +
                      " loss " + std::to_string(sum / static_cast<double>(data.size())));
    }
  }
}

struct Group {
  std::string language;  // bundle language, or "multi" for the shared model
  std::vector<const TreebankData*> treebanks;
};

std::vector<conllu::TreebankSentence> sentences_of(const Group& g, bool namespace_xpos) {
  std::vector<conllu::TreebankSentence> out;
  for (const auto* tb : g.treebanks) {
    for (auto s : tb->sentences) {
      if (namespace_xpos) {
        for (auto& w : s.rows) {
          if (w.xpos != "_") w.xpos = tb->name + ":" + w.xpos;
        }
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<ner::NerSentence> ner_of(const Group& g) {
  std::vector<ner::NerSentence> out;
  for (const auto* tb : g.treebanks) out.insert(out.end(), tb->ner.begin(), tb->ner.end());
  return out;
}

// Encoder-side components for one group: adapters (unless no_adapters) and
// heads, stored into bundle.
void train_encoder_side(const encoder::BaseEncoder& base, const subword::Vocab& vocab,
                        const Group& group, const TrainConfig& config, pkg::LanguageBundle& bundle,
                        TrainResult& result) {
  const bool with_adapters = config.mode != pkg::TrainMode::no_adapters;
  const bool multilingual = config.mode == pkg::TrainMode::multilingual;
  const int dim = base.config().dim;
  auto make_adapter = [&](Component c) {
    return encoder::AdapterSet::init(group.language, c, dim, config.bottleneck, base.config().layers,
                                     mix(config.seed, group.language, encoder::name(c)));
  };
  const auto sentences = sentences_of(group, multilingual);
  const std::string tag = "[" + group.language + "] ";

  if (config.components.count("splitter")) {
    size_t mismatches = 0;
    const auto examples = splitter::make_examples(sentences, vocab, config.splitter_window, &mismatches);
    result.splitter_mismatches += mismatches;
    say(config, tag + "splitter: " + std::to_string(examples.size()) + " windows, " +
                    std::to_string(mismatches) + " pieces split by a gold boundary");
    auto head = splitter::SplitterHead::init(dim, config.splitter_hidden,
                                             mix(config.seed, group.language, "splitter-head"));
    std::optional<encoder::AdapterSet> adapter;
    if (with_adapters) adapter = make_adapter(Component::splitter);
    fit(base, adapter ? &*adapter : nullptr, head.params, examples, config.splitter_epochs, config,
        mix(config.seed, group.language, "splitter-order"), tag + "splitter",
        [&head](nn::Graph& g, const encoder::EncodedVars& enc, const splitter::SplitterExample& ex) {
          return splitter::loss(g, enc, head, ex);
        });
    head.window = std::min(config.splitter_window, base.config().max_len - 2);
    if (adapter) bundle.adapters.insert_or_assign(Component::splitter, std::move(*adapter));
    bundle.splitter = std::move(head);
  }

  if (config.components.count("tagparse")) {
    auto vocabs = parse::TagVocabs::build(sentences);
    auto head = parse::TagParseHead::init(vocabs, dim, config.tagparse,
                                          mix(config.seed, group.language, "tagparse-head"));
    std::vector<parse::TagParseExample> examples;
    for (const auto& s : sentences) {
      if (!s.rows.empty()) examples.push_back(parse::make_example(s, vocab, head.vocabs));
    }
    say(config, tag + "tagparse: " + std::to_string(examples.size()) + " sentences");
    std::optional<encoder::AdapterSet> adapter;
    if (with_adapters) adapter = make_adapter(Component::tagparse);
    fit(base, adapter ? &*adapter : nullptr, head.params, examples, config.tagparse_epochs, config,
        mix(config.seed, group.language, "tagparse-order"), tag + "tagparse",
        [&head](nn::Graph& g, const encoder::EncodedVars& enc, const parse::TagParseExample& ex) {
          return parse::loss(g, enc, head, ex);
        });
    if (adapter) bundle.adapters.insert_or_assign(Component::tagparse, std::move(*adapter));
    bundle.tagparse = std::move(head);
  }

  if (config.components.count("ner")) {
    const auto corpus = ner_of(group);
    if (corpus.empty()) {
      say(config, tag + "ner: no NER corpus, skipped");
    } else {
      std::vector<ner::NerSentence> converted;
      for (auto s : corpus) {
        s.tags = ner::to_bioes(s.tags);
        converted.push_back(std::move(s));
      }
      auto head = ner::NerHead::init(ner::label_set(converted), dim, config.ner_hidden,
                                     mix(config.seed, group.language, "ner-head"));
      std::vector<ner::NerExample> examples;
      for (const auto& s : converted) examples.push_back(ner::make_example(s, vocab, head));
      say(config, tag + "ner: " + std::to_string(examples.size()) + " sentences");
      std::optional<encoder::AdapterSet> adapter;
      if (with_adapters) adapter = make_adapter(Component::ner);
      fit(base, adapter ? &*adapter : nullptr, head.params, examples, config.ner_epochs, config,
          mix(config.seed, group.language, "ner-order"), tag + "ner",
          [&head](nn::Graph& g, const encoder::EncodedVars& enc, const ner::NerExample& ex) {
            return ner::loss(g, enc, head, ex);
          });
      if (adapter) bundle.adapters.insert_or_assign(Component::ner, std::move(*adapter));
      bundle.ner = std::move(head);
    }
  }
}

// Character transducers never touch the encoder and are trained per
// language in every mode.
void train_transducers(const std::vector<conllu::TreebankSentence>& sentences, const std::string& language,
                       const TrainConfig& config, pkg::LanguageBundle& bundle) {
  const std::string tag = "[" + language + "] ";
  if (config.components.count("mwt")) {
    std::vector<seq2seq::TransducerPair> pairs;
    for (const auto& s : sentences) {
      for (const auto& r : s.mwt_ranges) {
        std::string words;
        for (int id = r.start; id <= r.end; ++id) {
          if (!words.empty()) words += ' ';
          words += s.rows[static_cast<size_t>(id - 1)].form;
        }
        pairs.push_back({r.form, "_", words});
      }
    }
    if (pairs.empty()) {
      say(config, tag + "mwt: treebank has no multi-word tokens, skipped");
    } else {
      auto c = config.mwt;
      c.seed = mix(config.seed, language, "mwt");
      bundle.mwt = seq2seq::Transducer::train(pairs, c);
      say(config, tag + "mwt: " + std::to_string(pairs.size()) + " pairs, " +
                      std::to_string(bundle.mwt->dictionary().size()) + " dictionary entries");
    }
  }
  if (config.components.count("lemma")) {
    std::vector<seq2seq::TransducerPair> pairs;
    for (const auto& s : sentences) {
      for (const auto& w : s.rows) {
        if (w.lemma != "_") pairs.push_back({w.form, w.upos, w.lemma});
      }
    }
    if (pairs.empty()) {
      say(config, tag + "lemma: no lemmas in the treebank, skipped");
    } else {
      auto c = config.lemma;
      c.seed = mix(config.seed, language, "lemma");
      bundle.lemma = seq2seq::Transducer::train(pairs, c);
      say(config, tag + "lemma: " + std::to_string(pairs.size()) + " pairs, " +
                      std::to_string(bundle.lemma->dictionary().size()) + " dictionary entries");
    }
  }
}

}  // namespace

TrainResult train(const encoder::BaseEncoder& base, const subword::Vocab& vocab,
                  const std::string& encoder_checksum, const std::vector<TreebankData>& data,
                  const TrainConfig& config) {
  if (data.empty()) throw UsageError("no treebanks given");
  if (vocab.size() != base.config().vocab_size) throw DataError("vocabulary does not match the encoder");
  for (const auto& tb : data) {
    if (tb.sentences.empty()) throw DataError("treebank '" + tb.name + "' has no sentences");
  }
  if (config.mode == pkg::TrainMode::multilingual && data.size() < 2) {
    throw UsageError("multilingual mode needs at least two treebanks");
  }
  const auto before = io::encode(base.to_tensor_file());

  std::map<std::string, Group> by_language;
  for (const auto& tb : data) {
    auto& g = by_language[tb.language];
    g.language = tb.language;
    g.treebanks.push_back(&tb);
  }
  TrainResult result;
  std::map<std::string, pkg::LanguageBundle> bundles;
  for (const auto& [lang, g] : by_language) {
    auto& b = bundles[lang];
    b.language = lang;
    b.mode = config.mode;
    b.encoder_checksum = encoder_checksum;
  }
  if (config.mode == pkg::TrainMode::multilingual) {
    Group all;
    all.language = "multi";
    for (const auto& tb : data) all.treebanks.push_back(&tb);
    pkg::LanguageBundle shared;
    train_encoder_side(base, vocab, all, config, shared, result);
    std::vector<std::string> namespaces;
    for (const auto& tb : data) namespaces.push_back(tb.name);
    for (auto& [lang, b] : bundles) {
      for (const auto& [c, set] : shared.adapters) b.adapters.emplace(c, set.clone_as(lang));
      if (shared.splitter) {
        splitter::SplitterHead h;
        h.params = shared.splitter->params.clone();
        h.window = shared.splitter->window;
        h.bind();
        b.splitter = std::move(h);
      }
      if (shared.tagparse) {
        parse::TagParseHead h;
        h.params = shared.tagparse->params.clone();
        h.vocabs = shared.tagparse->vocabs;
        h.config = shared.tagparse->config;
        h.bind();
        b.tagparse = std::move(h);
      }
      if (shared.ner) {
        ner::NerHead h;
        h.params = shared.ner->params.clone();
        h.labels = shared.ner->labels;
        h.bind();
        b.ner = std::move(h);
      }
      b.xpos_namespaces = namespaces;
    }
  } else {
    for (auto& [lang, g] : by_language) train_encoder_side(base, vocab, g, config, bundles[lang], result);
  }
  for (auto& [lang, g] : by_language) {
    train_transducers(sentences_of(g, false), lang, config, bundles[lang]);
  }
  if (io::encode(base.to_tensor_file()) != before) {
    throw std::logic_error("base encoder changed during training");
  }
  for (auto& [lang, b] : bundles) result.bundles.push_back(std::move(b));
  return result;
}

void merge_into(pkg::LanguageBundle& target, pkg::LanguageBundle update) {
  if (target.language != update.language) throw UsageError("bundle languages differ");
  target.mode = update.mode;
  target.encoder_checksum = update.encoder_checksum;
  if (update.splitter) {
    target.adapters.erase(Component::splitter);
    target.splitter = std::move(update.splitter);
  }
  if (update.tagparse) {
    target.adapters.erase(Component::tagparse);
    target.tagparse = std::move(update.tagparse);
    target.xpos_namespaces = update.xpos_namespaces;
  }
  if (update.ner) {
    target.adapters.erase(Component::ner);
    target.ner = std::move(update.ner);
  }
  for (auto& [c, set] : update.adapters) target.adapters.insert_or_assign(c, std::move(set));
  if (update.mwt) target.mwt = std::move(update.mwt);
  if (update.lemma) target.lemma = std::move(update.lemma);
}

}  // namespace plug::train
