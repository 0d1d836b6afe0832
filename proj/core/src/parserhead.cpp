#include "plug/parserhead.hpp"

#include <map>

#include "plug/arborescence.hpp"
#include "plug/error.hpp"

namespace plug::parse {

namespace {

nn::Matrix averaging_matrix(const std::vector<int>& piece_to_unit, int units) {
  nn::Matrix a = nn::Matrix::Zero(units, static_cast<Eigen::Index>(piece_to_unit.size()));
  std::vector<int> count(static_cast<size_t>(units), 0);
  for (int u : piece_to_unit) {
    if (u < 0 || u >= units) throw DataError("piece aligned to a unit outside the sentence");
    ++count[static_cast<size_t>(u)];
  }
  for (int u = 0; u < units; ++u) {
    if (count[static_cast<size_t>(u)] == 0) {
      throw DataError("empty word alignment for unit " + std::to_string(u));
    }
  }
  for (size_t k = 0; k < piece_to_unit.size(); ++k) {
    const int u = piece_to_unit[k];
    a(u, static_cast<Eigen::Index>(k)) = 1.0 / count[static_cast<size_t>(u)];
  }
  return a;
}

int argmax_row(const nn::Matrix& m, Eigen::Index r) {
  int best = 0;
  for (int c = 1; c < m.cols(); ++c) {
    if (m(r, c) > m(r, best)) best = c;
  }
  return best;
}

// Blocks self-attachment in the head-selection softmax.
constexpr double kMasked = -1e30;

}  // namespace

nn::Matrix word_vectors(const nn::Matrix& reps, const std::vector<int>& piece_to_unit, int units) {
  if (static_cast<Eigen::Index>(piece_to_unit.size()) != reps.rows()) {
    throw UsageError("alignment must cover every piece");
  }
  return averaging_matrix(piece_to_unit, units) * reps;
}

nn::Var word_vectors(nn::Graph& g, nn::Var reps, const std::vector<int>& piece_to_unit, int units) {
  if (static_cast<Eigen::Index>(piece_to_unit.size()) != reps.rows()) {
    throw UsageError("alignment must cover every piece");
  }
  return nn::matmul(g.constant(averaging_matrix(piece_to_unit, units)), reps);
}

nn::Var biaffine_arcs(nn::Graph& g, nn::Var head, nn::Var dep, nn::Var u, nn::Var w_head,
                      nn::Var w_dep, nn::Var b) {
  const auto n = dep.rows();
  nn::Var bilinear = nn::matmul_nt(dep, nn::matmul(head, u));   // d_j . (U^T h_i)
  nn::Var head_term = nn::matmul_nt(w_head, head);              // 1 x (N+1)
  nn::Var dep_term = nn::add_row(nn::matmul_nt(dep, w_dep), b);  // N x 1
  nn::Var spread = nn::matmul(dep_term, g.constant(nn::Matrix::Ones(1, n + 1)));
  return nn::add(nn::add_row(bilinear, head_term), spread);
}

TagVocabs TagVocabs::build(const std::vector<conllu::TreebankSentence>& sentences) {
  std::map<std::string, long> upos, xpos, feats, deprel;
  bool any_xpos = false;
  for (const auto& s : sentences) {
    for (const auto& w : s.rows) {
      ++upos[w.upos];
      ++xpos[w.xpos];
      ++feats[conllu::canonical_feats(w.feats)];
      ++deprel[w.deprel];
      any_xpos = any_xpos || w.xpos != "_";
    }
  }
  TagVocabs v;
  v.upos = LabelSet::from_counts(upos);
  v.xpos = LabelSet::from_counts(xpos);
  v.feats = LabelSet::from_counts(feats);
  v.deprel = LabelSet::from_counts(deprel);
  v.xpos_enabled = any_xpos;
  return v;
}

TagParseHead TagParseHead::init(TagVocabs vocabs, int dim, const TagParseConfig& config,
                                uint64_t seed) {
  if (vocabs.upos.empty() || vocabs.deprel.empty()) throw DataError("empty tag inventory");
  nn::Rng rng(seed);
  TagParseHead h;
  h.vocabs = std::move(vocabs);
  h.config = config;
  auto tagger = [&](const std::string& name, int classes) {
    nn::Linear::init(h.params, name + ".hidden", dim, config.hidden, rng);
    nn::Linear::init_zero(h.params, name + ".out", config.hidden, classes);
  };
  tagger("tagparse.upos", h.vocabs.upos.size());
  if (h.vocabs.xpos_enabled) tagger("tagparse.xpos", h.vocabs.xpos.size());
  tagger("tagparse.feats", h.vocabs.feats.size());
  nn::FeedForward::init(h.params, "tagparse.dep", dim, config.hidden, dim, rng);
  nn::Linear::init(h.params, "tagparse.arc_head", dim, config.arc_dim, rng);
  nn::Linear::init(h.params, "tagparse.arc_dep", dim, config.arc_dim, rng);
  h.params.add("tagparse.arc_u", nn::zeros(config.arc_dim, config.arc_dim));
  h.params.add("tagparse.arc_w_head", nn::zeros(1, config.arc_dim));
  h.params.add("tagparse.arc_w_dep", nn::zeros(1, config.arc_dim));
  h.params.add("tagparse.arc_b", nn::zeros(1, 1));
  nn::Linear::init(h.params, "tagparse.label_head", dim, config.label_dim, rng);
  nn::Linear::init(h.params, "tagparse.label_dep", dim, config.label_dim, rng);
  const int labels = h.vocabs.deprel.size();
  h.params.add("tagparse.label_u", nn::zeros(config.label_dim * config.label_dim, labels));
  nn::Linear::init_zero(h.params, "tagparse.label_pair", 2 * config.label_dim, labels);
  h.bind();
  return h;
}

void TagParseHead::bind() {
  upos_ = nn::FeedForward::bind(params, "tagparse.upos");
  if (vocabs.xpos_enabled) xpos_ = nn::FeedForward::bind(params, "tagparse.xpos");
  feats_ = nn::FeedForward::bind(params, "tagparse.feats");
  dep_ = nn::FeedForward::bind(params, "tagparse.dep");
  arc_head_ = nn::Linear::bind(params, "tagparse.arc_head");
  arc_dep_ = nn::Linear::bind(params, "tagparse.arc_dep");
  arc_u_ = &params.at("tagparse.arc_u");
  arc_w_head_ = &params.at("tagparse.arc_w_head");
  arc_w_dep_ = &params.at("tagparse.arc_w_dep");
  arc_b_ = &params.at("tagparse.arc_b");
  label_head_ = nn::Linear::bind(params, "tagparse.label_head");
  label_dep_ = nn::Linear::bind(params, "tagparse.label_dep");
  label_u_ = &params.at("tagparse.label_u");
  label_pair_ = nn::Linear::bind(params, "tagparse.label_pair");
  config.arc_dim = static_cast<int>(arc_u_->value.rows());
  config.label_dim = label_head_.out();
  config.hidden = upos_.hidden.out();
}

TagParseHead::Outputs TagParseHead::forward(nn::Graph& g, nn::Var words, nn::Var cls) const {
  Outputs out;
  out.upos = upos_(g, words);
  if (vocabs.xpos_enabled) out.xpos = xpos_(g, words);
  out.feats = feats_(g, words);
  const std::vector<nn::Var> parts{cls, dep_(g, words)};
  nn::Var r_dep = nn::concat_rows(parts);  // (N+1) x dim, row 0 = root
  const int n = static_cast<int>(words.rows());
  nn::Var dependents = nn::rows(r_dep, 1, n);
  nn::Var h = nn::relu(arc_head_(g, r_dep));
  nn::Var d = nn::relu(arc_dep_(g, dependents));
  out.arcs = biaffine_arcs(g, h, d, g.param(*arc_u_), g.param(*arc_w_head_), g.param(*arc_w_dep_),
                           g.param(*arc_b_));
  out.label_head = nn::relu(label_head_(g, r_dep));
  out.label_dep = nn::relu(label_dep_(g, dependents));
  return out;
}

nn::Var TagParseHead::label_scores(nn::Graph& g, const Outputs& out,
                                   std::span<const int> heads) const {
  nn::Var hg = nn::gather_rows(out.label_head, heads);
  nn::Var bilinear = nn::matmul(nn::outer_rows(out.label_dep, hg), g.param(*label_u_));
  const std::vector<nn::Var> pair{hg, out.label_dep};
  return nn::add(bilinear, label_pair_(g, nn::concat_cols(pair)));
}

TagParseExample make_example(const conllu::TreebankSentence& sentence, const subword::Vocab& vocab,
                             const TagVocabs& vocabs) {
  TagParseExample ex;
  for (const auto& w : sentence.rows) {
    ex.forms.push_back(w.form);
    ex.upos.push_back(vocabs.upos.id(w.upos));
    ex.xpos.push_back(vocabs.xpos_enabled ? vocabs.xpos.id(w.xpos) : -1);
    ex.feats.push_back(vocabs.feats.id(conllu::canonical_feats(w.feats)));
    ex.heads.push_back(w.head);
    ex.deprels.push_back(vocabs.deprel.id(w.deprel));
  }
  ex.seq = subword::tokenize_units(vocab, ex.forms);
  return ex;
}

nn::Var loss(nn::Graph& g, const encoder::EncodedVars& enc, const TagParseHead& head,
             const TagParseExample& example) {
  const int n = static_cast<int>(example.forms.size());
  nn::Var words = word_vectors(g, enc.reps, example.seq.space_split_index, n);
  const auto out = head.forward(g, words, enc.cls.front());
  std::vector<nn::Var> terms{nn::cross_entropy(out.upos, example.upos),
                             nn::cross_entropy(out.feats, example.feats)};
  if (head.vocabs.xpos_enabled) terms.push_back(nn::cross_entropy(out.xpos, example.xpos));
  bool have_heads = true;
  for (int h : example.heads) have_heads = have_heads && h >= 0 && h <= n;
  if (have_heads) {
    nn::Matrix mask = nn::Matrix::Zero(n, n + 1);
    for (int j = 0; j < n; ++j) mask(j, j + 1) = kMasked;
    nn::Var arcs = nn::add(out.arcs, g.constant(mask));
    terms.push_back(nn::cross_entropy(arcs, example.heads));
    terms.push_back(nn::cross_entropy(head.label_scores(g, out, example.heads), example.deprels));
  }
  nn::Var total = terms.front();
  for (size_t i = 1; i < terms.size(); ++i) total = nn::add(total, terms[i]);
  return nn::scale(total, 1.0 / std::max(1, n));
}

ParseResult parse_sentence(const encoder::EncodedText& enc, int words, const TagParseHead& head) {
  ParseResult r;
  if (words == 0) return r;
  nn::Graph g;
  nn::Var w = g.constant(word_vectors(enc.reps, enc.seq.space_split_index, words));
  nn::Var cls = g.constant(nn::Matrix(enc.cls.front()));
  const auto out = head.forward(g, w, cls);
  for (int i = 0; i < words; ++i) {
    r.upos.push_back(head.vocabs.upos.name(argmax_row(out.upos.value(), i)));
    r.xpos.push_back(head.vocabs.xpos_enabled ? head.vocabs.xpos.name(argmax_row(out.xpos.value(), i))
                                              : "_");
    r.feats.push_back(head.vocabs.feats.name(argmax_row(out.feats.value(), i)));
  }
  r.arc_scores = out.arcs.value();
  r.heads = chu_liu_edmonds(r.arc_scores);
  const auto labels = head.label_scores(g, out, r.heads).value();
  // "root" is reserved for the single child of node 0 when the inventory has it.
  const int root_label = head.vocabs.deprel.id("root");
  for (int i = 0; i < words; ++i) {
    int best = -1;
    if (root_label >= 0 && r.heads[static_cast<size_t>(i)] == 0) {
      best = root_label;
    } else {
      for (int c = 0; c < labels.cols(); ++c) {
        if (c == root_label) continue;
        if (best < 0 || labels(i, c) > labels(i, best)) best = c;
      }
      if (best < 0) best = argmax_row(labels, i);
    }
    r.deprel.push_back(head.vocabs.deprel.name(best));
  }
  return r;
}

}  // namespace plug::parse
