#pragma once

// Component training over a frozen base encoder in the three adapter modes.

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "plug/package.hpp"

namespace plug::train {

struct TreebankData {
  std::string language;
  std::string name;  // treebank id, used to namespace XPOS in multilingual mode
  std::vector<conllu::TreebankSentence> sentences;
  std::vector<ner::NerSentence> ner;
};

struct TrainConfig {
  pkg::TrainMode mode = pkg::TrainMode::adapters;
  std::set<std::string> components{"splitter", "mwt", "tagparse", "lemma", "ner"};
  int bottleneck = 16;
  int splitter_epochs = 40;
  int tagparse_epochs = 40;
  int ner_epochs = 30;
  int batch = 4;
  double lr = 3e-3;
  int splitter_window = 64;  // pieces per splitter window, training and inference
  int splitter_hidden = 32;
  parse::TagParseConfig tagparse;
  int ner_hidden = 32;
  seq2seq::TransducerConfig mwt;
  seq2seq::TransducerConfig lemma{.lowercase_keys = true};
  uint64_t seed = 1;
  std::function<void(const std::string&)> log;
};

struct TrainResult {
  std::vector<pkg::LanguageBundle> bundles;  // one per language
  size_t splitter_mismatches = 0;
};

// Every treebank must be non-empty; multilingual mode needs two or more.
// The encoder is read-only throughout.
TrainResult train(const encoder::BaseEncoder& base, const subword::Vocab& vocab,
                  const std::string& encoder_checksum, const std::vector<TreebankData>& data,
                  const TrainConfig& config);

// Merges newly trained components into an existing bundle of the same
// language (components absent from update are kept).
void merge_into(pkg::LanguageBundle& target, pkg::LanguageBundle update);

}  // namespace plug::train
