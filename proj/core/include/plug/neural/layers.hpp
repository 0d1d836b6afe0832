#pragma once

// Parameterized building blocks. Each block stores pointers into a
// ParamStore; init() creates the parameters, bind() re-attaches to an
// existing store (after loading or cloning).

#include <functional>
#include <string>

#include "plug/neural/graph.hpp"

namespace plug::nn {

struct Linear {
  Parameter* weight = nullptr;  // in x out
  Parameter* bias = nullptr;    // 1 x out

  static Linear init(ParamStore& store, const std::string& name, int in, int out, Rng& rng);
  static Linear init_zero(ParamStore& store, const std::string& name, int in, int out);
  static Linear bind(ParamStore& store, const std::string& name);
  Var operator()(Graph& g, Var x) const;
  int in() const { return static_cast<int>(weight->value.rows()); }
  int out() const { return static_cast<int>(weight->value.cols()); }
};

// Linear -> ReLU -> Linear.
struct FeedForward {
  Linear hidden;
  Linear output;

  static FeedForward init(ParamStore& store, const std::string& name, int in, int hidden, int out,
                          Rng& rng);
  static FeedForward bind(ParamStore& store, const std::string& name);
  Var operator()(Graph& g, Var x) const;
};

struct LayerNorm {
  Parameter* gain = nullptr;
  Parameter* bias = nullptr;

  static LayerNorm init(ParamStore& store, const std::string& name, int dim);
  static LayerNorm bind(ParamStore& store, const std::string& name);
  Var operator()(Graph& g, Var x) const;
};

struct MultiHeadAttention {
  Linear query, key, value, output;
  int heads = 1;

  static MultiHeadAttention init(ParamStore& store, const std::string& name, int dim, int heads,
                                 Rng& rng);
  static MultiHeadAttention bind(ParamStore& store, const std::string& name, int heads);
  // Scaled dot-product self-attention over the rows of x (T x dim).
  Var operator()(Graph& g, Var x) const;
};

// Post-norm encoder layer: attention -> AddNorm -> feed-forward -> AddNorm.
// The hook, when set, receives the final AddNorm output and its result
// becomes the layer output; adapters attach here.
struct TransformerLayer {
  MultiHeadAttention attention;
  LayerNorm attention_norm;
  FeedForward ffn;
  LayerNorm ffn_norm;

  using Hook = std::function<Var(Graph&, Var)>;

  static TransformerLayer init(ParamStore& store, const std::string& name, int dim, int heads,
                               int ffn_dim, Rng& rng);
  static TransformerLayer bind(ParamStore& store, const std::string& name, int heads);
  Var operator()(Graph& g, Var x, const Hook& hook = {}) const;
};

// Gated recurrent unit over a single 1 x in input row.
struct GruCell {
  Linear input;   // in -> 3 * hidden (update, reset, candidate)
  Linear state;   // hidden -> 3 * hidden
  int hidden = 0;

  static GruCell init(ParamStore& store, const std::string& name, int in, int hidden, Rng& rng);
  static GruCell bind(ParamStore& store, const std::string& name);
  Var operator()(Graph& g, Var x, Var h) const;
};

}  // namespace plug::nn
