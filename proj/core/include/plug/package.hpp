#pragma once

// On-disk model packages: one shared encoder file plus one bundle per
// language.
//
//   <dir>/manifest.json   format version, encoder checksum, languages,
//                         per-file checksums and sizes
//   <dir>/vocab.txt       subword vocabulary
//   <dir>/encoder.bin     frozen encoder tensors
//   <dir>/<lang>.bundle   adapters, heads, tag inventories, transducers
//
// Checksums are CRC-32 of whole files, written as 8 hex digits.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "plug/encoder.hpp"
#include "plug/ner.hpp"
#include "plug/parserhead.hpp"
#include "plug/seq2seq.hpp"
#include "plug/splitter.hpp"

namespace plug::pkg {

inline constexpr int kFormatVersion = 1;

// Pipeline stages in execution order.
inline const std::vector<std::string>& component_names() {
  static const std::vector<std::string> names{"splitter", "mwt", "tagparse", "lemma", "ner"};
  return names;
}

enum class TrainMode { adapters, multilingual, no_adapters };
std::string_view name(TrainMode m);
TrainMode mode_from_name(std::string_view s);  // accepts "no-adapters" too

struct LanguageBundle {
  std::string language;
  TrainMode mode = TrainMode::adapters;
  std::string encoder_checksum;

  // Adapters keyed by encoder component; absent in no_adapters mode.
  std::map<encoder::Component, encoder::AdapterSet> adapters;
  std::optional<splitter::SplitterHead> splitter;
  std::optional<parse::TagParseHead> tagparse;
  std::optional<ner::NerHead> ner;
  std::optional<seq2seq::Transducer> mwt;
  std::optional<seq2seq::Transducer> lemma;
  // Multilingual mode prefixes XPOS tags with "<treebank>:"; these are
  // stripped on output.
  std::vector<std::string> xpos_namespaces;

  bool has(std::string_view component) const;
  std::vector<std::string> components() const;
};

std::string encode_bundle(const LanguageBundle& bundle);
// source names the file in error messages.
LanguageBundle decode_bundle(std::string_view bytes, const std::string& source);

struct ManifestEntry {
  std::string language;
  std::string file;
  std::string checksum;
  size_t bytes = 0;
  std::vector<std::string> components;
};

struct Manifest {
  int format_version = kFormatVersion;
  std::string encoder_file = "encoder.bin";
  std::string encoder_checksum;
  size_t encoder_bytes = 0;
  std::string vocab_file = "vocab.txt";
  std::string vocab_checksum;
  std::vector<ManifestEntry> languages;

  const ManifestEntry* find(const std::string& language) const;
  std::string to_json() const;
  static Manifest from_json(std::string_view json, const std::string& source);
};

Manifest read_manifest(const std::string& dir);

// Writes the encoder and vocabulary when the directory has none yet; an
// existing encoder is never rewritten and must match the given one.
void write_base(const std::string& dir, const encoder::BaseEncoder& base, const subword::Vocab& vocab);
// Adds or replaces one language bundle and updates the manifest.
void write_bundle(const std::string& dir, const LanguageBundle& bundle);

struct LoadedBase {
  std::shared_ptr<const encoder::BaseEncoder> encoder;
  std::shared_ptr<const subword::Vocab> vocab;
};

// Verifies checksums; the encoder is shared process-wide per checksum.
LoadedBase load_base(const std::string& dir, const Manifest& manifest);
LanguageBundle load_bundle(const std::string& dir, const Manifest& manifest, const std::string& language);

// Number of encoders currently alive in the process-wide cache.
size_t live_encoder_count();

// Package directory lookup: an existing path wins, otherwise the name is
// resolved under $PLUG_CACHE_DIR.
std::string resolve_package_dir(const std::string& name_or_path);

}  // namespace plug::pkg
