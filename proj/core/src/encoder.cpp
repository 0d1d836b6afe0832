#include "plug/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "plug/error.hpp"
#include "plug/neural/optim.hpp"

namespace plug::encoder {

std::string_view name(Component c) {
  switch (c) {
    case Component::splitter: return "splitter";
    case Component::tagparse: return "tagparse";
    case Component::ner: return "ner";
  }
  return "?";
}

Component component_from_name(std::string_view n) {
  for (auto c : kAllComponents) {
    if (name(c) == n) return c;
  }
  throw UsageError("unknown adapter component '" + std::string(n) + "'");
}

BaseEncoder BaseEncoder::init(const EncoderConfig& config, uint64_t seed) {
  if (config.vocab_size <= subword::kNumSpecials) throw UsageError("encoder needs a vocabulary");
  if (config.max_len < 3) throw UsageError("encoder max_len must be at least 3");
  nn::Rng rng(seed);
  BaseEncoder e;
  e.config_ = config;
  e.params_.add("embed.tokens", nn::uniform(config.vocab_size, config.dim, 0.1, rng));
  e.params_.add("embed.positions", nn::uniform(config.max_len, config.dim, 0.1, rng));
  nn::LayerNorm::init(e.params_, "embed.norm", config.dim);
  for (int l = 0; l < config.layers; ++l) {
    nn::TransformerLayer::init(e.params_, "layer" + std::to_string(l), config.dim, config.heads,
                               config.ffn_dim, rng);
  }
  e.params_.set_frozen(true);
  e.bind();
  return e;
}

void BaseEncoder::bind() {
  token_embedding_ = &params_.at("embed.tokens");
  position_embedding_ = &params_.at("embed.positions");
  embedding_norm_ = nn::LayerNorm::bind(params_, "embed.norm");
  layers_.clear();
  for (int l = 0; l < config_.layers; ++l) {
    layers_.push_back(nn::TransformerLayer::bind(params_, "layer" + std::to_string(l), config_.heads));
  }
}

nn::Var BaseEncoder::forward_chunk(nn::Graph& g, std::span<const int> ids,
                                   const LayerHook& hook) const {
  if (static_cast<int>(ids.size()) > config_.max_len) {
    throw UsageError("chunk longer than the encoder's max_len");
  }
  for (int id : ids) {
    if (id < 0 || id >= config_.vocab_size) {
      throw DataError("piece id " + std::to_string(id) + " outside vocabulary of size " +
                      std::to_string(config_.vocab_size));
    }
  }
  std::vector<int> positions(ids.size());
  std::iota(positions.begin(), positions.end(), 0);
  nn::Var x = nn::add(nn::embedding(g, *token_embedding_, ids),
                      nn::embedding(g, *position_embedding_, positions));
  x = embedding_norm_(g, x);
  for (size_t l = 0; l < layers_.size(); ++l) {
    if (hook) {
      const int index = static_cast<int>(l);
      x = layers_[l](g, x, [&hook, index](nn::Graph& gg, nn::Var r) { return hook(gg, index, r); });
    } else {
      x = layers_[l](g, x);
    }
  }
  return x;
}

io::TensorFile BaseEncoder::to_tensor_file() const {
  io::TensorFile f;
  nlohmann::json meta = {{"kind", "encoder"},
                         {"vocab_size", config_.vocab_size},
                         {"dim", config_.dim},
                         {"layers", config_.layers},
                         {"heads", config_.heads},
                         {"ffn_dim", config_.ffn_dim},
                         {"max_len", config_.max_len}};
  f.metadata = meta.dump();
  io::append(f, params_);
  return f;
}

BaseEncoder BaseEncoder::from_tensor_file(const io::TensorFile& file) {
  const auto meta = nlohmann::json::parse(file.metadata, nullptr, false);
  if (meta.is_discarded() || meta.value("kind", "") != "encoder") {
    throw DataError("tensor file is not an encoder");
  }
  BaseEncoder e;
  e.config_.vocab_size = meta.at("vocab_size");
  e.config_.dim = meta.at("dim");
  e.config_.layers = meta.at("layers");
  e.config_.heads = meta.at("heads");
  e.config_.ffn_dim = meta.at("ffn_dim");
  e.config_.max_len = meta.at("max_len");
  io::load_into(file, e.params_, "");
  e.params_.set_frozen(true);
  try {
    e.bind();
  } catch (const UsageError& err) {
    throw DataError(std::string("encoder file incomplete: ") + err.what());
  }
  return e;
}

nn::Var adapter_forward(nn::Graph& g, nn::Var r, const AdapterLayer& layer) {
  nn::Var c = layer.norm(g, r);
  return nn::add(layer.up(g, nn::relu(layer.down(g, c))), r);
}

AdapterSet AdapterSet::init(std::string language, Component component, int dim, int bottleneck,
                            int layers, uint64_t seed) {
  if (bottleneck <= 0 || bottleneck >= dim) {
    throw UsageError("adapter bottleneck must satisfy 0 < b < dim");
  }
  AdapterSet s;
  s.language_ = std::move(language);
  s.component_ = component;
  s.bottleneck_ = bottleneck;
  nn::Rng rng(seed);
  for (int l = 0; l < layers; ++l) {
    const auto p = "layer" + std::to_string(l);
    nn::LayerNorm::init(s.params_, p + ".norm", dim);
    s.params_.add(p + ".down.w", nn::uniform(dim, bottleneck, 0.05, rng));
    s.params_.add(p + ".down.b", nn::zeros(1, bottleneck));
    nn::Linear::init_zero(s.params_, p + ".up", bottleneck, dim);
  }
  s.bind();
  return s;
}

void AdapterSet::bind() {
  layers_.clear();
  for (int l = 0;; ++l) {
    const auto p = "layer" + std::to_string(l);
    if (!params_.contains(p + ".down.w")) break;
    layers_.push_back({nn::LayerNorm::bind(params_, p + ".norm"), nn::Linear::bind(params_, p + ".down"),
                       nn::Linear::bind(params_, p + ".up")});
  }
  if (!layers_.empty()) bottleneck_ = layers_.front().down.out();
}

std::string AdapterSet::tensor_prefix() const {
  return "adapter." + language_ + "." + std::string(name(component_)) + ".";
}

void AdapterSet::append_to(io::TensorFile& file) const { io::append(file, params_, tensor_prefix()); }

AdapterSet AdapterSet::from_tensor_file(const io::TensorFile& file, const std::string& language,
                                        Component component) {
  AdapterSet s;
  s.language_ = language;
  s.component_ = component;
  io::load_into(file, s.params_, s.tensor_prefix());
  if (s.params_.size() == 0) {
    throw DataError("no adapter tensors for (" + language + ", " + std::string(name(component)) + ")");
  }
  try {
    s.bind();
  } catch (const UsageError& err) {
    throw DataError(std::string("adapter tensors incomplete: ") + err.what());
  }
  return s;
}

AdapterSet AdapterSet::clone() const {
  AdapterSet s;
  s.language_ = language_;
  s.component_ = component_;
  s.bottleneck_ = bottleneck_;
  s.params_ = params_.clone();
  s.bind();
  return s;
}

AdapterSet AdapterSet::clone_as(std::string language) const {
  auto s = clone();
  s.language_ = std::move(language);
  return s;
}

void AdapterRegistry::register_adapter(AdapterSet set) {
  auto key = std::make_pair(set.language(), set.component());
  if (active_ != nullptr && active_->language() == key.first && active_->component() == key.second) {
    active_ = nullptr;
  }
  sets_.insert_or_assign(std::move(key), std::move(set));
}

bool AdapterRegistry::contains(const std::string& language, Component component) const {
  return sets_.count({language, component}) != 0;
}

const AdapterSet& AdapterRegistry::activate(const std::string& language, Component component) {
  const auto it = sets_.find({language, component});
  if (it == sets_.end()) {
    throw UsageError("no adapter registered for (" + language + ", " + std::string(name(component)) +
                     ")");
  }
  active_ = &it->second;
  return it->second;
}

AdapterSet* AdapterRegistry::find(const std::string& language, Component component) {
  const auto it = sets_.find({language, component});
  return it == sets_.end() ? nullptr : &it->second;
}

void AdapterRegistry::remove_language(const std::string& language) {
  if (active_ != nullptr && active_->language() == language) active_ = nullptr;
  for (auto it = sets_.begin(); it != sets_.end();) {
    it = it->first.first == language ? sets_.erase(it) : std::next(it);
  }
}

EncodedVars encode_graph(nn::Graph& g, const BaseEncoder& base, const AdapterSet* adapter,
                         const subword::WordpieceSeq& seq) {
  EncodedVars out;
  out.chunks = subword::chunk(seq.size(), base.config().max_len);
  BaseEncoder::LayerHook hook;
  if (adapter != nullptr) {
    if (adapter->layer_count() != base.config().layers) {
      throw UsageError("adapter layer count does not match the encoder");
    }
    hook = [adapter](nn::Graph& gg, int layer, nn::Var r) {
      return adapter_forward(gg, r, adapter->layer(layer));
    };
  }
  std::vector<nn::Var> parts;
  std::vector<int> ids;
  for (const auto& range : out.chunks) {
    ids.assign(1, subword::kBos);
    ids.insert(ids.end(), seq.ids.begin() + range.begin, seq.ids.begin() + range.end);
    ids.push_back(subword::kEos);
    nn::Var h = base.forward_chunk(g, ids, hook);
    out.cls.push_back(nn::rows(h, 0, 1));
    parts.push_back(nn::rows(h, 1, range.size()));
  }
  if (parts.empty()) {
    out.reps = g.constant(nn::Matrix::Zero(0, base.config().dim));
  } else {
    out.reps = parts.size() == 1 ? parts.front() : nn::concat_rows(parts);
  }
  return out;
}

EncodedText encode(const BaseEncoder& base, const AdapterSet* adapter,
                   const subword::WordpieceSeq& seq) {
  nn::Graph g;
  const auto vars = encode_graph(g, base, adapter, seq);
  EncodedText out;
  out.seq = seq;
  out.reps = vars.reps.value();
  for (const auto& c : vars.cls) out.cls.push_back(c.value().row(0));
  out.chunks = vars.chunks;
  return out;
}

EncodedText encode(const BaseEncoder& base, const AdapterRegistry& registry,
                   const subword::WordpieceSeq& seq) {
  if (registry.active() == nullptr) throw UsageError("no adapter is active");
  return encode(base, registry.active(), seq);
}

PretrainReport pretrain(BaseEncoder& base, const subword::Vocab& vocab,
                        const std::vector<std::string>& sentences, const PretrainConfig& config) {
  PretrainReport report;
  if (vocab.size() != base.config().vocab_size) {
    throw UsageError("vocabulary size does not match the encoder");
  }
  nn::Rng rng(config.seed);
  std::vector<subword::WordpieceSeq> data;
  for (const auto& s : sentences) {
    auto seq = subword::tokenize(vocab, s);
    if (seq.empty()) continue;
    const auto width = static_cast<size_t>(base.config().max_len - 2);
    if (seq.size() > width) {
      seq.ids.resize(width);
      seq.offsets.resize(width);
      seq.space_split_index.resize(width);
    }
    data.push_back(std::move(seq));
  }
  if (data.size() > config.max_sentences) {
    std::shuffle(data.begin(), data.end(), rng);
    data.resize(config.max_sentences);
  }
  report.sentences = data.size();
  if (data.empty()) return report;

  base.params().set_frozen(false);
  nn::ParamStore head;
  auto& out_bias = head.add("mlm.bias", nn::zeros(1, base.config().vocab_size));
  auto out_norm = nn::LayerNorm::init(head, "mlm.norm", base.config().dim);
  std::vector<nn::Parameter*> params = base.params().all();
  for (auto* p : head.all()) params.push_back(p);

  nn::Adam adam({.lr = config.lr});
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> random_piece(subword::kNumSpecials, vocab.size() - 1);
  const long batches_per_epoch =
      static_cast<long>((data.size() + config.batch_sentences - 1) / config.batch_sentences);
  const long total_steps = batches_per_epoch * config.epochs;
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    size_t epoch_targets = 0;
    for (size_t start = 0; start < order.size(); start += config.batch_sentences) {
      nn::Graph g;
      nn::Var table = g.param(base.token_embedding());
      std::vector<nn::Var> losses;
      size_t targets_in_batch = 0;
      for (size_t k = start; k < std::min(order.size(), start + config.batch_sentences); ++k) {
        const auto& seq = data[order[k]];
        auto corrupted = seq;
        std::vector<int> masked_rows;
        std::vector<int> targets;
        for (size_t i = 0; i < seq.size(); ++i) {
          if (coin(rng) >= config.mask_rate) continue;
          masked_rows.push_back(static_cast<int>(i));
          targets.push_back(seq.ids[i]);
          const double u = coin(rng);
          if (u < 0.8) {
            corrupted.ids[i] = subword::kUnk;
          } else if (u < 0.9) {
            corrupted.ids[i] = random_piece(rng);
          }
        }
        if (masked_rows.empty()) continue;
        const auto enc = encode_graph(g, base, nullptr, corrupted);
        nn::Var h = out_norm(g, nn::gather_rows(enc.reps, masked_rows));
        nn::Var logits = nn::add_row(nn::matmul_nt(h, table), g.param(out_bias));
        losses.push_back(nn::cross_entropy(logits, targets));
        targets_in_batch += targets.size();
      }
      if (losses.empty()) continue;
      nn::Var total = losses.size() == 1 ? losses.front() : nn::sum(nn::concat_rows(losses));
      nn::Var loss = nn::scale(total, 1.0 / static_cast<double>(targets_in_batch));
      g.backward(loss);
      adam.step(params, nn::warmup_schedule(step++, total_steps));
      epoch_loss += total.scalar();
      epoch_targets += targets_in_batch;
    }
    report.epoch_loss.push_back(epoch_targets == 0 ? 0.0 : epoch_loss / epoch_targets);
  }
  base.params().set_frozen(true);
  base.params().zero_grad();
  return report;
}

}  // namespace plug::encoder
