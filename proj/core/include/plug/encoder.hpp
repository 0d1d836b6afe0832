#pragma once

// Shared multilingual encoder with per-(language, component) adapters.
//
// The base encoder is a small post-norm transformer whose weights are frozen
// after pretraining and shared by every pipeline and language. Each layer
// exposes a hook after its feed-forward AddNorm; an active AdapterSet injects
//
//   h = Up(ReLU(Down(LayerNorm(r)))) + r
//
// there, with an adapter-private LayerNorm and the raw hook input r on the
// residual path.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "plug/neural/layers.hpp"
#include "plug/subword.hpp"
#include "plug/tensor_io.hpp"

namespace plug::encoder {

enum class Component { splitter, tagparse, ner };

std::string_view name(Component c);
Component component_from_name(std::string_view name);
inline constexpr Component kAllComponents[] = {Component::splitter, Component::tagparse,
                                               Component::ner};

struct EncoderConfig {
  int vocab_size = 0;
  int dim = 64;
  int layers = 2;
  int heads = 4;
  int ffn_dim = 128;
  int max_len = 512;  // wordpieces per chunk, sentinels included
};

class BaseEncoder {
 public:
  BaseEncoder() = default;
  static BaseEncoder init(const EncoderConfig& config, uint64_t seed);

  const EncoderConfig& config() const { return config_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  // Forward over one chunk of ids that already carries the <s> and </s>
  // sentinels. Returns chunk length x dim. hook(g, layer, r) replaces each
  // layer output when set.
  using LayerHook = std::function<nn::Var(nn::Graph&, int, nn::Var)>;
  nn::Var forward_chunk(nn::Graph& g, std::span<const int> ids, const LayerHook& hook = {}) const;

  // Embedding table, for tied output projections during pretraining.
  nn::Parameter& token_embedding() const { return *token_embedding_; }

  io::TensorFile to_tensor_file() const;
  static BaseEncoder from_tensor_file(const io::TensorFile& file);

 private:
  void bind();

  EncoderConfig config_;
  nn::ParamStore params_;
  nn::Parameter* token_embedding_ = nullptr;
  nn::Parameter* position_embedding_ = nullptr;
  nn::LayerNorm embedding_norm_;
  std::vector<nn::TransformerLayer> layers_;
};

struct AdapterLayer {
  nn::LayerNorm norm;
  nn::Linear down;  // dim -> bottleneck
  nn::Linear up;    // bottleneck -> dim
};

// Applies one adapter to the hook input r (rows are positions).
nn::Var adapter_forward(nn::Graph& g, nn::Var r, const AdapterLayer& layer);

class AdapterSet {
 public:
  AdapterSet() = default;
  // Up starts at zero so an untrained adapter is the identity.
  static AdapterSet init(std::string language, Component component, int dim, int bottleneck,
                         int layers, uint64_t seed);

  const std::string& language() const { return language_; }
  Component component() const { return component_; }
  int bottleneck() const { return bottleneck_; }
  int layer_count() const { return static_cast<int>(layers_.size()); }
  const AdapterLayer& layer(int i) const { return layers_.at(static_cast<size_t>(i)); }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  size_t parameter_count() const { return params_.scalar_count(); }

  // Tensor names follow adapter.<lang>.<component>.layer<i>.<role>.<w|b>.
  std::string tensor_prefix() const;
  void append_to(io::TensorFile& file) const;
  static AdapterSet from_tensor_file(const io::TensorFile& file, const std::string& language,
                                     Component component);
  AdapterSet clone() const;
  // Copy registered under another language (shared multilingual sets).
  AdapterSet clone_as(std::string language) const;

 private:
  void bind();

  std::string language_;
  Component component_ = Component::splitter;
  int bottleneck_ = 0;
  nn::ParamStore params_;
  std::vector<AdapterLayer> layers_;
};

// Holds every registered AdapterSet over one base encoder and tracks the
// single active one.
class AdapterRegistry {
 public:
  void register_adapter(AdapterSet set);
  bool contains(const std::string& language, Component component) const;
  // Throws UsageError naming the pair when it was never registered.
  const AdapterSet& activate(const std::string& language, Component component);
  void deactivate() { active_ = nullptr; }
  const AdapterSet* active() const { return active_; }
  AdapterSet* find(const std::string& language, Component component);
  size_t size() const { return sets_.size(); }
  void remove_language(const std::string& language);

 private:
  std::map<std::pair<std::string, Component>, AdapterSet> sets_;
  const AdapterSet* active_ = nullptr;
};

struct EncodedText {
  subword::WordpieceSeq seq;
  nn::Matrix reps;                         // one row per wordpiece
  std::vector<Eigen::RowVectorXd> cls;     // <s> output of each chunk
  std::vector<subword::PieceRange> chunks;
};

// Graph-level encoding for training: rows of reps follow seq order; cls has
// one 1 x dim row per chunk. A null adapter runs the plain encoder.
struct EncodedVars {
  nn::Var reps;
  std::vector<nn::Var> cls;
  std::vector<subword::PieceRange> chunks;
};

EncodedVars encode_graph(nn::Graph& g, const BaseEncoder& base, const AdapterSet* adapter,
                         const subword::WordpieceSeq& seq);

EncodedText encode(const BaseEncoder& base, const AdapterSet* adapter,
                   const subword::WordpieceSeq& seq);
// Uses the registry's active set; throws UsageError when none is active.
EncodedText encode(const BaseEncoder& base, const AdapterRegistry& registry,
                   const subword::WordpieceSeq& seq);

struct PretrainConfig {
  int epochs = 4;
  int batch_sentences = 16;
  double mask_rate = 0.15;
  double lr = 2e-3;
  uint64_t seed = 7;
  size_t max_sentences = 4000;
};

struct PretrainReport {
  std::vector<double> epoch_loss;  // mean loss per masked piece
  size_t sentences = 0;
};

// Masked denoising: corrupt 15% of pieces (80% <unk>, 10% random, 10% kept)
// and predict the originals through the tied embedding table. Parameters are
// frozen again on return.
PretrainReport pretrain(BaseEncoder& base, const subword::Vocab& vocab,
                        const std::vector<std::string>& sentences, const PretrainConfig& config);

}  // namespace plug::encoder
