#pragma once

// Character-level transduction for MWT expansion and lemmatization: a
// frequency dictionary backed by a GRU encoder-decoder with attention.

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "plug/labels.hpp"
#include "plug/neural/layers.hpp"
#include "plug/tensor_io.hpp"

namespace plug::seq2seq {

enum class Source { dictionary, model, identity };
std::string_view name(Source s);

struct Transduction {
  std::string input;
  std::string output;
  Source source = Source::identity;
};

struct TransducerPair {
  std::string input;
  std::string tag;  // context tag; "_" when unused
  std::string output;
};

struct TransducerConfig {
  int char_dim = 16;
  int tag_dim = 8;
  int hidden = 32;
  int epochs = 30;
  int batch = 16;
  double lr = 3e-3;
  // Lemmatizer mode: dictionary keys are lowercased and fully uppercase
  // unseen inputs are returned unchanged.
  bool lowercase_keys = false;
  uint64_t seed = 11;
};

// Separator between expanded words in MWT outputs.
inline constexpr char32_t kWordSeparator = U' ';

class Transducer {
 public:
  // Alphabet, tag inventory and dictionary from pairs; parameters untrained.
  static Transducer build(const std::vector<TransducerPair>& pairs, const TransducerConfig& config);
  // build() followed by teacher-forced training on the dictionary entries.
  static Transducer train(const std::vector<TransducerPair>& pairs, const TransducerConfig& config);

  // Trains for epochs passes over the distinct dictionary entries.
  void fit(int epochs);

  Transduction transduce(std::string_view input, std::string_view tag) const;
  // Neural path only: greedy decoding capped at 2 * |input| + 5 characters.
  std::u32string decode(std::u32string_view input, std::string_view tag) const;
  // Teacher-forced cross-entropy of one pair, averaged over output steps.
  nn::Var pair_loss(nn::Graph& g, std::u32string_view input, std::string_view tag,
                    std::u32string_view output) const;

  const std::map<std::pair<std::string, std::string>, std::string>& dictionary() const {
    return dictionary_;
  }
  const TransducerConfig& config() const { return config_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  std::string metadata_json() const;
  void append_tensors(io::TensorFile& file, const std::string& prefix) const;
  static Transducer restore(std::string_view metadata_json, const io::TensorFile& file,
                            const std::string& prefix);

 private:
  void bind();
  std::string key(std::string_view input) const;
  int char_id(char32_t c) const;
  int tag_id(std::string_view tag) const;
  std::vector<nn::Var> encode_states(nn::Graph& g, std::u32string_view input) const;

  TransducerConfig config_;
  std::vector<char32_t> chars_;  // ids offset by kCharBase
  std::map<char32_t, int> char_index_;
  LabelSet tags_;
  std::map<std::pair<std::string, std::string>, std::string> dictionary_;
  std::vector<TransducerPair> training_;

  nn::ParamStore params_;
  nn::Parameter* char_embedding_ = nullptr;
  nn::Parameter* tag_embedding_ = nullptr;
  nn::GruCell encoder_;
  nn::GruCell decoder_;
  nn::Parameter* attention_ = nullptr;
  nn::Linear output_;
};

// Splits an MWT transduction on the separator; empty pieces are dropped and
// an output without separators yields a single word.
std::vector<std::string> expand_mwt(const Transducer& model, std::string_view surface);

}  // namespace plug::seq2seq
