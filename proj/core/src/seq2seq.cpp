#include "plug/seq2seq.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "json.hpp"
#include "plug/error.hpp"
#include "plug/neural/optim.hpp"
#include "plug/text.hpp"

namespace plug::seq2seq {

namespace {

constexpr int kBos = 0;
constexpr int kEos = 1;
constexpr int kUnk = 2;
constexpr int kCharBase = 3;

// At least two characters, each either an uppercase letter or one of the
// digits and marks found in acronyms ("NASA", "U.S.", "F-16").
bool acronym_like(std::u32string_view s) {
  if (s.size() < 2) return false;
  bool upper = false;
  for (char32_t c : s) {
    if (text::lower(std::u32string(1, c))[0] != c) {
      upper = true;
    } else if (!((c >= U'0' && c <= U'9') || c == U'.' || c == U'-')) {
      return false;
    }
  }
  return upper;
}

}  // namespace

std::string_view name(Source s) {
  switch (s) {
    case Source::dictionary: return "dictionary";
    case Source::model: return "model";
    case Source::identity: return "identity";
  }
  return "?";
}

std::string Transducer::key(std::string_view input) const {
  return config_.lowercase_keys ? text::lower(input) : std::string(input);
}

int Transducer::char_id(char32_t c) const {
  auto it = char_index_.find(c);
  return it == char_index_.end() ? kUnk : it->second;
}

int Transducer::tag_id(std::string_view tag) const {
  const int id = tags_.id(std::string(tag));
  return id < 0 ? tags_.size() : id;  // last row: unseen tag
}

Transducer Transducer::build(const std::vector<TransducerPair>& pairs,
                             const TransducerConfig& config) {
  if (pairs.empty()) throw DataError("empty transducer training set");
  Transducer t;
  t.config_ = config;
  std::map<std::pair<std::string, std::string>, std::map<std::string, long>> counts;
  std::map<std::string, long> tag_counts;
  std::set<char32_t> alphabet;
  for (const auto& p : pairs) {
    if (p.input.empty() || p.output.empty()) throw DataError("empty transducer input or output");
    ++counts[{t.key(p.input), p.tag}][p.output];
    ++tag_counts[p.tag];
    for (char32_t c : text::decode(p.input)) alphabet.insert(c);
    for (char32_t c : text::decode(p.output)) alphabet.insert(c);
  }
  for (const auto& [k, outs] : counts) {
    // Most frequent output; std::map order makes ties go to the smallest.
    const std::string* best = nullptr;
    long best_count = 0;
    for (const auto& [out, c] : outs) {
      if (c > best_count) {
        best = &out;
        best_count = c;
      }
    }
    t.dictionary_.emplace(k, *best);
  }
  for (const auto& p : pairs) {
    auto it = t.dictionary_.find({t.key(p.input), p.tag});
    if (it->second == p.output) t.training_.push_back(p);
  }
  // One entry per distinct (input, tag, output).
  std::sort(t.training_.begin(), t.training_.end(), [](const auto& a, const auto& b) {
    return std::tie(a.input, a.tag, a.output) < std::tie(b.input, b.tag, b.output);
  });
  t.training_.erase(std::unique(t.training_.begin(), t.training_.end(),
                                [](const auto& a, const auto& b) {
                                  return a.input == b.input && a.tag == b.tag && a.output == b.output;
                                }),
                    t.training_.end());
  t.chars_.assign(alphabet.begin(), alphabet.end());
  for (size_t i = 0; i < t.chars_.size(); ++i) t.char_index_[t.chars_[i]] = static_cast<int>(i) + kCharBase;
  t.tags_ = LabelSet::from_counts(tag_counts);

  nn::Rng rng(config.seed);
  const int n_chars = static_cast<int>(t.chars_.size()) + kCharBase;
  t.params_.add("chars", nn::uniform(n_chars, config.char_dim, 0.1, rng));
  t.params_.add("tags", nn::uniform(t.tags_.size() + 1, config.tag_dim, 0.1, rng));
  nn::GruCell::init(t.params_, "enc", config.char_dim, config.hidden, rng);
  nn::GruCell::init(t.params_, "dec", config.char_dim + config.tag_dim + config.hidden, config.hidden,
                    rng);
  t.params_.add("attn", nn::glorot(config.hidden, config.hidden, rng));
  nn::Linear::init(t.params_, "out", 2 * config.hidden, n_chars, rng);
  t.bind();
  return t;
}

void Transducer::bind() {
  char_embedding_ = &params_.at("chars");
  tag_embedding_ = &params_.at("tags");
  encoder_ = nn::GruCell::bind(params_, "enc");
  decoder_ = nn::GruCell::bind(params_, "dec");
  attention_ = &params_.at("attn");
  output_ = nn::Linear::bind(params_, "out");
}

Transducer Transducer::train(const std::vector<TransducerPair>& pairs,
                             const TransducerConfig& config) {
  auto t = build(pairs, config);
  t.fit(config.epochs);
  return t;
}

std::vector<nn::Var> Transducer::encode_states(nn::Graph& g, std::u32string_view input) const {
  std::vector<int> ids;
  for (char32_t c : input) ids.push_back(char_id(c));
  ids.push_back(kEos);
  nn::Var emb = nn::embedding(g, *char_embedding_, ids);
  nn::Var h = g.constant(nn::Matrix::Zero(1, config_.hidden));
  std::vector<nn::Var> states;
  for (int i = 0; i < static_cast<int>(ids.size()); ++i) {
    h = encoder_(g, nn::rows(emb, i, 1), h);
    states.push_back(h);
  }
  return states;
}

nn::Var Transducer::pair_loss(nn::Graph& g, std::u32string_view input, std::string_view tag,
                              std::u32string_view output) const {
  const auto states = encode_states(g, input);
  nn::Var memory = nn::concat_rows(states);
  const int tag_index = tag_id(tag);
  nn::Var tag_vec = nn::embedding(g, *tag_embedding_, std::span<const int>(&tag_index, 1));
  nn::Var attn = g.param(*attention_);
  std::vector<int> prev{kBos};
  std::vector<int> targets;
  for (char32_t c : output) {
    prev.push_back(char_id(c));
    targets.push_back(char_id(c));
  }
  targets.push_back(kEos);
  nn::Var prev_emb = nn::embedding(g, *char_embedding_, prev);
  nn::Var h = states.back();
  nn::Var ctx = g.constant(nn::Matrix::Zero(1, config_.hidden));
  std::vector<nn::Var> logits;
  for (size_t t = 0; t < targets.size(); ++t) {
    const std::vector<nn::Var> in{nn::rows(prev_emb, static_cast<int>(t), 1), tag_vec, ctx};
    h = decoder_(g, nn::concat_cols(in), h);
    nn::Var weights = nn::softmax_rows(nn::matmul_nt(nn::matmul(h, attn), memory));
    ctx = nn::matmul(weights, memory);
    const std::vector<nn::Var> both{h, ctx};
    logits.push_back(output_(g, nn::concat_cols(both)));
  }
  nn::Var ce = nn::cross_entropy(nn::concat_rows(logits), targets);
  return nn::scale(ce, 1.0 / static_cast<double>(targets.size()));
}

void Transducer::fit(int epochs) {
  if (training_.empty() || epochs <= 0) return;
  nn::Rng rng(config_.seed + 1);
  nn::Adam adam(nn::AdamConfig{.lr = config_.lr});
  std::vector<size_t> order(training_.size());
  std::iota(order.begin(), order.end(), 0);
  const auto trainable = params_.trainable();
  const size_t batch = static_cast<size_t>(std::max(1, config_.batch));
  for (int e = 0; e < epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t b = 0; b < order.size(); b += batch) {
      const size_t end = std::min(order.size(), b + batch);
      for (size_t i = b; i < end; ++i) {
        const auto& p = training_[order[i]];
        nn::Graph g;
        nn::Var l = pair_loss(g, text::decode(p.input), p.tag, text::decode(p.output));
        g.backward(nn::scale(l, 1.0 / static_cast<double>(end - b)));
      }
      adam.step(trainable);
    }
  }
}

std::u32string Transducer::decode(std::u32string_view input, std::string_view tag) const {
  nn::Graph g;
  const auto states = encode_states(g, input);
  nn::Var memory = nn::concat_rows(states);
  const int tag_index = tag_id(tag);
  nn::Var tag_vec = nn::embedding(g, *tag_embedding_, std::span<const int>(&tag_index, 1));
  nn::Var attn = g.param(*attention_);
  nn::Var h = states.back();
  nn::Var ctx = g.constant(nn::Matrix::Zero(1, config_.hidden));
  int prev = kBos;
  std::u32string out;
  const size_t cap = 2 * input.size() + 5;
  for (size_t t = 0; t < cap; ++t) {
    nn::Var prev_emb = nn::embedding(g, *char_embedding_, std::span<const int>(&prev, 1));
    const std::vector<nn::Var> in{prev_emb, tag_vec, ctx};
    h = decoder_(g, nn::concat_cols(in), h);
    nn::Var weights = nn::softmax_rows(nn::matmul_nt(nn::matmul(h, attn), memory));
    ctx = nn::matmul(weights, memory);
    const std::vector<nn::Var> both{h, ctx};
    const auto& logits = output_(g, nn::concat_cols(both)).value();
    int best = 0;
    for (int c = 1; c < logits.cols(); ++c) {
      if (logits(0, c) > logits(0, best)) best = c;
    }
    if (best == kEos) break;
    if (best >= kCharBase) out.push_back(chars_[static_cast<size_t>(best - kCharBase)]);
    prev = best;
  }
  return out;
}

Transduction Transducer::transduce(std::string_view input, std::string_view tag) const {
  Transduction r;
  r.input = std::string(input);
  auto it = dictionary_.find({key(input), std::string(tag)});
  if (it != dictionary_.end()) {
    r.output = it->second;
    r.source = Source::dictionary;
    return r;
  }
  const auto cps = text::decode(input);
  if (config_.lowercase_keys && acronym_like(cps)) {
    r.output = r.input;
    r.source = Source::identity;
    return r;
  }
  const auto decoded = text::strip_spaces(decode(cps, tag));
  if (decoded.empty() || cps.empty()) {
    r.output = r.input;
    r.source = Source::identity;
    return r;
  }
  r.output = text::encode(decoded);
  r.source = Source::model;
  return r;
}

std::string Transducer::metadata_json() const {
  nlohmann::json j;
  std::vector<uint32_t> cps(chars_.begin(), chars_.end());
  j["chars"] = cps;
  j["tags"] = tags_.names();
  nlohmann::json dict = nlohmann::json::array();
  for (const auto& [k, v] : dictionary_) dict.push_back({k.first, k.second, v});
  j["dictionary"] = dict;
  j["config"] = {{"char_dim", config_.char_dim}, {"tag_dim", config_.tag_dim},
                 {"hidden", config_.hidden},     {"lowercase_keys", config_.lowercase_keys}};
  return j.dump();
}

void Transducer::append_tensors(io::TensorFile& file, const std::string& prefix) const {
  for (const auto* p : params_.all()) file.tensors.emplace_back(prefix + p->name, p->value);
}

Transducer Transducer::restore(std::string_view metadata_json, const io::TensorFile& file,
                               const std::string& prefix) {
  Transducer t;
  try {
    const auto j = nlohmann::json::parse(metadata_json);
    for (uint32_t c : j.at("chars").get<std::vector<uint32_t>>()) t.chars_.push_back(static_cast<char32_t>(c));
    t.tags_ = LabelSet(j.at("tags").get<std::vector<std::string>>());
    for (const auto& e : j.at("dictionary")) {
      t.dictionary_.emplace(std::make_pair(e.at(0).get<std::string>(), e.at(1).get<std::string>()),
                            e.at(2).get<std::string>());
    }
    const auto& c = j.at("config");
    t.config_.char_dim = c.at("char_dim").get<int>();
    t.config_.tag_dim = c.at("tag_dim").get<int>();
    t.config_.hidden = c.at("hidden").get<int>();
    t.config_.lowercase_keys = c.at("lowercase_keys").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad transducer metadata: ") + e.what());
  }
  for (size_t i = 0; i < t.chars_.size(); ++i) t.char_index_[t.chars_[i]] = static_cast<int>(i) + kCharBase;
  io::load_into(file, t.params_, prefix);
  for (const char* required : {"chars", "tags", "attn"}) {
    if (!t.params_.contains(required)) throw DataError("transducer tensor '" + std::string(required) + "' missing");
  }
  t.params_.set_frozen(false);
  t.bind();
  return t;
}

std::vector<std::string> expand_mwt(const Transducer& model, std::string_view surface) {
  const auto out = text::decode(model.transduce(surface, "_").output);
  std::vector<std::string> words;
  std::u32string cur;
  for (char32_t c : out) {
    if (c == kWordSeparator) {
      if (!cur.empty()) words.push_back(text::encode(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) words.push_back(text::encode(cur));
  if (words.empty()) words.emplace_back(surface);
  return words;
}

}  // namespace plug::seq2seq
