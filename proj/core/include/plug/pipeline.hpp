#pragma once

// End-to-end annotation over one shared encoder and any number of language
// bundles: splitter -> MWT expansion -> tagging and parsing -> lemmatization
// -> NER, switching adapter activations between stages.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "plug/document.hpp"
#include "plug/package.hpp"

namespace plug::pipeline {

struct MemoryReport {
  size_t encoder_bytes = 0;
  std::map<std::string, size_t> bundle_bytes;
  size_t encoder_instances = 0;  // live encoders in this process
  size_t total() const;
  std::string to_text() const;
};

struct ComponentTiming {
  double seconds = 0.0;
  size_t tokens = 0;
  bool skipped = false;
  double tokens_per_second() const;
};

struct TimingReport {
  // "encoder", then the five stages in order.
  std::vector<std::pair<std::string, ComponentTiming>> components;
  ComponentTiming total;
  std::string to_text() const;
  std::string to_json() const;
};

struct PipelineOptions {
  // Upper bound on resident bundle bytes; 0 disables eviction.
  size_t bundle_budget_bytes = 0;
};

class Pipeline {
 public:
  // Loads the shared encoder and the listed bundles; other languages in the
  // manifest load on first use.
  static Pipeline load(const std::string& dir, const std::vector<std::string>& languages,
                       PipelineOptions options = {});
  // In-memory pipeline (freshly trained bundles, no package directory).
  Pipeline(std::shared_ptr<const encoder::BaseEncoder> encoder,
           std::shared_ptr<const subword::Vocab> vocab, PipelineOptions options = {});

  void add_bundle(pkg::LanguageBundle bundle, size_t bytes = 0);

  doc::Document annotate(const std::string& language, std::string_view text);
  doc::Document annotate_pretokenized(const std::string& language,
                                      const std::vector<std::vector<std::string>>& sentences);

  TimingReport timing_report(const std::string& language, const std::vector<std::string>& texts);
  MemoryReport memory_report() const;

  std::vector<std::string> loaded_languages() const;
  std::vector<std::string> available_languages() const;
  const encoder::AdapterRegistry& registry() const { return registry_; }
  const encoder::BaseEncoder& encoder() const { return *encoder_; }
  const subword::Vocab& vocab() const { return *vocab_; }

 private:
  struct Resident {
    pkg::LanguageBundle bundle;
    size_t bytes = 0;
    uint64_t last_used = 0;
  };

  Resident& resident(const std::string& language);
  void evict_for(size_t incoming, const std::string& keep);
  encoder::EncodedText encode_for(const std::string& language, const pkg::LanguageBundle& bundle,
                                  encoder::Component component, const subword::WordpieceSeq& seq,
                                  TimingReport* timing);
  void run_stages(const std::string& language, doc::Document& d, bool from_splitter,
                  TimingReport* timing);
  doc::Document annotate_impl(const std::string& language, std::string_view text, TimingReport* timing);

  std::string dir_;
  pkg::Manifest manifest_;
  PipelineOptions options_;
  std::shared_ptr<const encoder::BaseEncoder> encoder_;
  std::shared_ptr<const subword::Vocab> vocab_;
  std::map<std::string, Resident> bundles_;
  encoder::AdapterRegistry registry_;
  uint64_t clock_ = 0;
};

}  // namespace plug::pipeline
