#include "plug/neural/layers.hpp"

#include <cmath>

#include "plug/error.hpp"

namespace plug::nn {

Linear Linear::init(ParamStore& store, const std::string& name, int in, int out, Rng& rng) {
  Linear l;
  l.weight = &store.add(name + ".w", glorot(in, out, rng));
  l.bias = &store.add(name + ".b", zeros(1, out));
  return l;
}

Linear Linear::init_zero(ParamStore& store, const std::string& name, int in, int out) {
  Linear l;
  l.weight = &store.add(name + ".w", zeros(in, out));
  l.bias = &store.add(name + ".b", zeros(1, out));
  return l;
}

Linear Linear::bind(ParamStore& store, const std::string& name) {
  return {&store.at(name + ".w"), &store.at(name + ".b")};
}

Var Linear::operator()(Graph& g, Var x) const {
  return add_row(matmul(x, g.param(*weight)), g.param(*bias));
}

FeedForward FeedForward::init(ParamStore& store, const std::string& name, int in, int hidden,
                              int out, Rng& rng) {
  return {Linear::init(store, name + ".hidden", in, hidden, rng),
          Linear::init(store, name + ".out", hidden, out, rng)};
}

FeedForward FeedForward::bind(ParamStore& store, const std::string& name) {
  return {Linear::bind(store, name + ".hidden"), Linear::bind(store, name + ".out")};
}

Var FeedForward::operator()(Graph& g, Var x) const { return output(g, relu(hidden(g, x))); }

LayerNorm LayerNorm::init(ParamStore& store, const std::string& name, int dim) {
  return {&store.add(name + ".gain", Matrix::Ones(1, dim)), &store.add(name + ".bias", zeros(1, dim))};
}

LayerNorm LayerNorm::bind(ParamStore& store, const std::string& name) {
  return {&store.at(name + ".gain"), &store.at(name + ".bias")};
}

Var LayerNorm::operator()(Graph& g, Var x) const {
  return layer_norm(x, g.param(*gain), g.param(*bias));
}

MultiHeadAttention MultiHeadAttention::init(ParamStore& store, const std::string& name, int dim,
                                            int heads, Rng& rng) {
  if (heads <= 0 || dim % heads != 0) throw UsageError("model dim must be divisible by head count");
  MultiHeadAttention a;
  a.query = Linear::init(store, name + ".q", dim, dim, rng);
  a.key = Linear::init(store, name + ".k", dim, dim, rng);
  a.value = Linear::init(store, name + ".v", dim, dim, rng);
  a.output = Linear::init(store, name + ".o", dim, dim, rng);
  a.heads = heads;
  return a;
}

MultiHeadAttention MultiHeadAttention::bind(ParamStore& store, const std::string& name, int heads) {
  MultiHeadAttention a;
  a.query = Linear::bind(store, name + ".q");
  a.key = Linear::bind(store, name + ".k");
  a.value = Linear::bind(store, name + ".v");
  a.output = Linear::bind(store, name + ".o");
  a.heads = heads;
  if (heads <= 0 || a.query.out() % heads != 0) {
    throw UsageError("model dim must be divisible by head count");
  }
  return a;
}

Var MultiHeadAttention::operator()(Graph& g, Var x) const {
  const int dim = query.out();
  const int head_dim = dim / heads;
  const double scale_by = 1.0 / std::sqrt(static_cast<double>(head_dim));
  Var q = query(g, x);
  Var k = key(g, x);
  Var v = value(g, x);
  std::vector<Var> per_head;
  per_head.reserve(static_cast<size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Var qh = cols(q, h * head_dim, head_dim);
    Var kh = cols(k, h * head_dim, head_dim);
    Var vh = cols(v, h * head_dim, head_dim);
    Var weights = softmax_rows(scale(matmul_nt(qh, kh), scale_by));
    per_head.push_back(matmul(weights, vh));
  }
  return output(g, heads == 1 ? per_head.front() : concat_cols(per_head));
}

TransformerLayer TransformerLayer::init(ParamStore& store, const std::string& name, int dim,
                                        int heads, int ffn_dim, Rng& rng) {
  TransformerLayer l;
  l.attention = MultiHeadAttention::init(store, name + ".attn", dim, heads, rng);
  l.attention_norm = LayerNorm::init(store, name + ".attn_norm", dim);
  l.ffn = FeedForward::init(store, name + ".ffn", dim, ffn_dim, dim, rng);
  l.ffn_norm = LayerNorm::init(store, name + ".ffn_norm", dim);
  return l;
}

TransformerLayer TransformerLayer::bind(ParamStore& store, const std::string& name, int heads) {
  TransformerLayer l;
  l.attention = MultiHeadAttention::bind(store, name + ".attn", heads);
  l.attention_norm = LayerNorm::bind(store, name + ".attn_norm");
  l.ffn = FeedForward::bind(store, name + ".ffn");
  l.ffn_norm = LayerNorm::bind(store, name + ".ffn_norm");
  return l;
}

Var TransformerLayer::operator()(Graph& g, Var x, const Hook& hook) const {
  Var attended = attention_norm(g, add(x, attention(g, x)));
  Var r = ffn_norm(g, add(attended, ffn(g, attended)));
  return hook ? hook(g, r) : r;
}

GruCell GruCell::init(ParamStore& store, const std::string& name, int in, int hidden, Rng& rng) {
  GruCell c;
  c.input = Linear::init(store, name + ".x", in, 3 * hidden, rng);
  c.state = Linear::init(store, name + ".h", hidden, 3 * hidden, rng);
  c.hidden = hidden;
  return c;
}

GruCell GruCell::bind(ParamStore& store, const std::string& name) {
  GruCell c;
  c.input = Linear::bind(store, name + ".x");
  c.state = Linear::bind(store, name + ".h");
  c.hidden = c.state.in();
  return c;
}

Var GruCell::operator()(Graph& g, Var x, Var h) const {
  Var gx = input(g, x);
  Var gh = state(g, h);
  Var z = sigmoid(add(cols(gx, 0, hidden), cols(gh, 0, hidden)));
  Var r = sigmoid(add(cols(gx, hidden, hidden), cols(gh, hidden, hidden)));
  Var n = tanh(add(cols(gx, 2 * hidden, hidden), mul(r, cols(gh, 2 * hidden, hidden))));
  return add(mul(one_minus(z), n), mul(z, h));
}

}  // namespace plug::nn
