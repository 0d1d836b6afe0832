#include "plug/package.hpp"

#include <cstdlib>
#include <filesystem>
#include <mutex>

#include "json.hpp"
#include "plug/error.hpp"

namespace plug::pkg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Tensors whose name starts with prefix, names kept whole.
void load_named(const io::TensorFile& file, nn::ParamStore& store, const std::string& prefix) {
  for (const auto& [n, m] : file.tensors) {
    if (n.rfind(prefix, 0) == 0) store.add(n, m);
  }
}

json labels_json(const LabelSet& s) { return s.names(); }
LabelSet labels_from(const json& j) { return LabelSet(j.get<std::vector<std::string>>()); }

std::string path_in(const std::string& dir, const std::string& file) {
  return (fs::path(dir) / file).string();
}

std::string checksum_of(std::string_view bytes) { return io::hex32(io::crc32(bytes)); }

void write_manifest(const std::string& dir, const Manifest& m) {
  io::write_file(path_in(dir, "manifest.json"), m.to_json());
}

struct EncoderCache {
  std::mutex mutex;
  std::map<std::string, std::weak_ptr<const encoder::BaseEncoder>> entries;
};

EncoderCache& cache() {
  static EncoderCache c;
  return c;
}

}  // namespace

std::string_view name(TrainMode m) {
  switch (m) {
    case TrainMode::adapters: return "adapters";
    case TrainMode::multilingual: return "multilingual";
    case TrainMode::no_adapters: return "no_adapters";
  }
  return "?";
}

TrainMode mode_from_name(std::string_view s) {
  if (s == "adapters") return TrainMode::adapters;
  if (s == "multilingual") return TrainMode::multilingual;
  if (s == "no_adapters" || s == "no-adapters") return TrainMode::no_adapters;
  throw UsageError("unknown training mode '" + std::string(s) + "'");
}

bool LanguageBundle::has(std::string_view component) const {
  if (component == "splitter") return splitter.has_value();
  if (component == "mwt") return mwt.has_value();
  if (component == "tagparse") return tagparse.has_value();
  if (component == "lemma") return lemma.has_value();
  if (component == "ner") return ner.has_value();
  return false;
}

std::vector<std::string> LanguageBundle::components() const {
  std::vector<std::string> out;
  for (const auto& c : component_names()) {
    if (has(c)) out.push_back(c);
  }
  return out;
}

std::string encode_bundle(const LanguageBundle& b) {
  io::TensorFile f;
  json meta;
  meta["kind"] = "bundle";
  meta["format"] = kFormatVersion;
  meta["language"] = b.language;
  meta["mode"] = std::string(name(b.mode));
  meta["encoder_checksum"] = b.encoder_checksum;
  meta["xpos_namespaces"] = b.xpos_namespaces;
  json adapters = json::array();
  for (const auto& [component, set] : b.adapters) {
    adapters.push_back(std::string(encoder::name(component)));
    if (set.language() != b.language) {
      set.clone_as(b.language).append_to(f);
    } else {
      set.append_to(f);
    }
  }
  meta["adapters"] = adapters;
  if (b.splitter) {
    meta["splitter"] = {{"window", b.splitter->window}};
    io::append(f, b.splitter->params);
  }
  if (b.tagparse) {
    const auto& v = b.tagparse->vocabs;
    meta["tagparse"] = {{"upos", labels_json(v.upos)},     {"xpos", labels_json(v.xpos)},
                        {"feats", labels_json(v.feats)},   {"deprel", labels_json(v.deprel)},
                        {"xpos_enabled", v.xpos_enabled}};
    io::append(f, b.tagparse->params);
  }
  if (b.ner) {
    meta["ner"] = {{"labels", labels_json(b.ner->labels)}};
    io::append(f, b.ner->params);
  }
  if (b.mwt) {
    meta["mwt"] = json::parse(b.mwt->metadata_json());
    b.mwt->append_tensors(f, "mwt.");
  }
  if (b.lemma) {
    meta["lemma"] = json::parse(b.lemma->metadata_json());
    b.lemma->append_tensors(f, "lemma.");
  }
  f.metadata = meta.dump();
  return io::encode(f);
}

LanguageBundle decode_bundle(std::string_view bytes, const std::string& source) {
  const auto f = io::decode(bytes, source);
  LanguageBundle b;
  try {
    const auto meta = json::parse(f.metadata);
    if (meta.value("kind", "") != "bundle") throw DataError(source + ": not a language bundle");
    if (meta.value("format", 0) != kFormatVersion) {
      throw DataError(source + ": unsupported bundle format " + std::to_string(meta.value("format", 0)));
    }
    b.language = meta.at("language").get<std::string>();
    b.mode = mode_from_name(meta.at("mode").get<std::string>());
    b.encoder_checksum = meta.at("encoder_checksum").get<std::string>();
    b.xpos_namespaces = meta.value("xpos_namespaces", std::vector<std::string>{});
    for (const auto& c : meta.at("adapters")) {
      const auto component = encoder::component_from_name(c.get<std::string>());
      b.adapters.emplace(component, encoder::AdapterSet::from_tensor_file(f, b.language, component));
    }
    if (meta.contains("splitter")) {
      splitter::SplitterHead h;
      load_named(f, h.params, "splitter.");
      h.window = meta.at("splitter").value("window", 0);
      h.bind();
      b.splitter = std::move(h);
    }
    if (meta.contains("tagparse")) {
      const auto& t = meta.at("tagparse");
      parse::TagParseHead h;
      h.vocabs.upos = labels_from(t.at("upos"));
      h.vocabs.xpos = labels_from(t.at("xpos"));
      h.vocabs.feats = labels_from(t.at("feats"));
      h.vocabs.deprel = labels_from(t.at("deprel"));
      h.vocabs.xpos_enabled = t.at("xpos_enabled").get<bool>();
      load_named(f, h.params, "tagparse.");
      h.bind();
      b.tagparse = std::move(h);
    }
    if (meta.contains("ner")) {
      ner::NerHead h;
      h.labels = labels_from(meta.at("ner").at("labels"));
      load_named(f, h.params, "ner.");
      h.bind();
      b.ner = std::move(h);
    }
    if (meta.contains("mwt")) b.mwt = seq2seq::Transducer::restore(meta.at("mwt").dump(), f, "mwt.");
    if (meta.contains("lemma")) {
      b.lemma = seq2seq::Transducer::restore(meta.at("lemma").dump(), f, "lemma.");
    }
  } catch (const json::exception& e) {
    throw DataError(source + ": bad bundle metadata: " + e.what());
  } catch (const UsageError& e) {
    throw DataError(source + ": incomplete bundle: " + e.what());
  }
  return b;
}

const ManifestEntry* Manifest::find(const std::string& language) const {
  for (const auto& e : languages) {
    if (e.language == language) return &e;
  }
  return nullptr;
}

std::string Manifest::to_json() const {
  nlohmann::ordered_json j;
  j["format_version"] = format_version;
  j["encoder"] = {{"file", encoder_file}, {"checksum", encoder_checksum}, {"bytes", encoder_bytes}};
  j["vocab"] = {{"file", vocab_file}, {"checksum", vocab_checksum}};
  j["components"] = component_names();
  j["languages"] = nlohmann::ordered_json::array();
  for (const auto& e : languages) {
    j["languages"].push_back({{"code", e.language},
                              {"file", e.file},
                              {"checksum", e.checksum},
                              {"bytes", e.bytes},
                              {"components", e.components}});
  }
  return j.dump(2) + "\n";
}

Manifest Manifest::from_json(std::string_view text, const std::string& source) {
  Manifest m;
  try {
    const auto j = json::parse(text);
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kFormatVersion) {
      throw DataError(source + ": unsupported package format " + std::to_string(m.format_version));
    }
    m.encoder_file = j.at("encoder").at("file").get<std::string>();
    m.encoder_checksum = j.at("encoder").at("checksum").get<std::string>();
    m.encoder_bytes = j.at("encoder").at("bytes").get<size_t>();
    m.vocab_file = j.at("vocab").at("file").get<std::string>();
    m.vocab_checksum = j.at("vocab").at("checksum").get<std::string>();
    for (const auto& e : j.at("languages")) {
      ManifestEntry me;
      me.language = e.at("code").get<std::string>();
      me.file = e.at("file").get<std::string>();
      me.checksum = e.at("checksum").get<std::string>();
      me.bytes = e.at("bytes").get<size_t>();
      me.components = e.at("components").get<std::vector<std::string>>();
      m.languages.push_back(std::move(me));
    }
  } catch (const json::exception& e) {
    throw DataError(source + ": bad manifest: " + e.what());
  }
  return m;
}

Manifest read_manifest(const std::string& dir) {
  const auto path = path_in(dir, "manifest.json");
  if (!fs::exists(path)) throw DataError(dir + ": no manifest.json (not a package directory)");
  return Manifest::from_json(io::read_file(path), path);
}

void write_base(const std::string& dir, const encoder::BaseEncoder& base, const subword::Vocab& vocab) {
  fs::create_directories(dir);
  const auto bytes = io::encode(base.to_tensor_file());
  const auto vocab_text = vocab.to_text();
  const auto encoder_path = path_in(dir, "encoder.bin");
  Manifest m;
  if (fs::exists(path_in(dir, "manifest.json"))) m = read_manifest(dir);
  if (fs::exists(encoder_path)) {
    if (io::read_file(encoder_path) != bytes) {
      throw ChecksumError(encoder_path + ": package already holds a different encoder");
    }
  } else {
    io::write_file(encoder_path, bytes);
  }
  io::write_file(path_in(dir, m.vocab_file), vocab_text);
  m.encoder_checksum = io::content_checksum(bytes);
  m.encoder_bytes = bytes.size();
  m.vocab_checksum = checksum_of(vocab_text);
  write_manifest(dir, m);
}

void write_bundle(const std::string& dir, const LanguageBundle& bundle) {
  auto m = read_manifest(dir);
  if (bundle.encoder_checksum != m.encoder_checksum) {
    throw ChecksumError("bundle for '" + bundle.language + "' was built for encoder " +
                        bundle.encoder_checksum + ", package holds " + m.encoder_checksum);
  }
  const auto bytes = encode_bundle(bundle);
  ManifestEntry e;
  e.language = bundle.language;
  e.file = bundle.language + ".bundle";
  e.checksum = io::content_checksum(bytes);
  e.bytes = bytes.size();
  e.components = bundle.components();
  io::write_file(path_in(dir, e.file), bytes);
  bool replaced = false;
  for (auto& existing : m.languages) {
    if (existing.language == e.language) {
      existing = e;
      replaced = true;
    }
  }
  if (!replaced) m.languages.push_back(e);
  write_manifest(dir, m);
}

LoadedBase load_base(const std::string& dir, const Manifest& manifest) {
  LoadedBase out;
  const auto vocab_path = path_in(dir, manifest.vocab_file);
  const auto vocab_text = io::read_file(vocab_path);
  if (checksum_of(vocab_text) != manifest.vocab_checksum) {
    throw ChecksumError(vocab_path + ": checksum mismatch");
  }
  out.vocab = std::make_shared<const subword::Vocab>(subword::Vocab::from_text(vocab_text));

  auto& c = cache();
  std::lock_guard lock(c.mutex);
  auto& slot = c.entries[manifest.encoder_checksum];
  out.encoder = slot.lock();
  if (!out.encoder) {
    const auto path = path_in(dir, manifest.encoder_file);
    const auto bytes = io::read_file(path);
    if (io::content_checksum(bytes) != manifest.encoder_checksum) throw ChecksumError(path + ": checksum mismatch");
    out.encoder = std::make_shared<const encoder::BaseEncoder>(
        encoder::BaseEncoder::from_tensor_file(io::decode(bytes, path)));
    slot = out.encoder;
  }
  if (out.encoder->config().vocab_size != out.vocab->size()) {
    throw DataError(vocab_path + ": vocabulary size does not match the encoder");
  }
  return out;
}

LanguageBundle load_bundle(const std::string& dir, const Manifest& manifest, const std::string& language) {
  const auto* entry = manifest.find(language);
  if (entry == nullptr) throw DataError(dir + ": no bundle for language '" + language + "'");
  const auto path = path_in(dir, entry->file);
  if (!fs::exists(path)) throw DataError(path + ": bundle file missing");
  const auto bytes = io::read_file(path);
  if (io::content_checksum(bytes) != entry->checksum) throw ChecksumError(path + ": checksum mismatch");
  auto b = decode_bundle(bytes, path);
  if (b.encoder_checksum != manifest.encoder_checksum) {
    throw ChecksumError(path + ": built for encoder " + b.encoder_checksum + ", package holds " +
                        manifest.encoder_checksum);
  }
  return b;
}

size_t live_encoder_count() {
  auto& c = cache();
  std::lock_guard lock(c.mutex);
  size_t n = 0;
  for (const auto& [k, w] : c.entries) n += w.expired() ? 0 : 1;
  return n;
}

std::string resolve_package_dir(const std::string& name_or_path) {
  if (fs::exists(name_or_path)) return name_or_path;
  if (const char* cache_dir = std::getenv("PLUG_CACHE_DIR"); cache_dir != nullptr && *cache_dir) {
    const auto candidate = fs::path(cache_dir) / name_or_path;
    if (fs::exists(candidate)) return candidate.string();
  }
  return name_or_path;
}

}  // namespace plug::pkg
