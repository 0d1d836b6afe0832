// plug: train, evaluate, run and inspect multilingual pipeline packages.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 checksum error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "plug/error.hpp"
#include "plug/pipeline.hpp"
#include "plug/scorer.hpp"
#include "plug/tensor_io.hpp"
#include "plug/text.hpp"
#include "plug/trainer.hpp"

namespace fs = std::filesystem;
using namespace plug;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kChecksum = 3 };

void log_line(const std::string& s) { std::cerr << s << "\n"; }

std::string read_input(const std::string& path) {
  if (path.empty() || path == "-") {
    return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  }
  if (!fs::exists(path)) throw DataError(path + ": no such file");
  return io::read_file(path);
}

struct TrainArgs {
  std::string mode = "adapters";
  std::vector<std::string> components{"all"};
  std::vector<std::string> treebanks;
  std::vector<std::string> languages;
  std::vector<std::string> ner;
  uint64_t seed = 1;
  std::string out;
  int vocab_size = 8000;
  int pretrain_epochs = 4;
  int splitter_epochs = 40;
  int tagparse_epochs = 40;
  int ner_epochs = 30;
  int seq2seq_epochs = 30;
};

// A vocabulary and briefly pretrained encoder from the training text itself,
// for packages that do not have a base yet.
void build_base(const std::string& dir, const std::vector<train::TreebankData>& data, const TrainArgs& a) {
  std::vector<std::string> lines;
  for (const auto& tb : data) {
    for (const auto& s : tb.sentences) {
      lines.push_back(text::encode(conllu::reconstruct_text({s}).text));
    }
  }
  std::string corpus;
  for (const auto& l : lines) corpus += l + "\n";
  // Multi-sentence documents, so positions deep into a chunk get trained.
  std::mt19937_64 rng(a.seed);
  std::vector<std::string> docs;
  for (size_t i = 0; i < lines.size();) {
    const size_t n = 1 + rng() % 40;
    std::string d;
    for (size_t k = 0; k < n && i < lines.size(); ++k, ++i) d += (d.empty() ? "" : " ") + lines[i];
    docs.push_back(std::move(d));
  }
  log_line("training vocabulary (" + std::to_string(a.vocab_size) + " pieces) on " +
           std::to_string(lines.size()) + " sentences");
  auto vocab = subword::Vocab::train(corpus, a.vocab_size, a.seed);
  auto base = encoder::BaseEncoder::init({.vocab_size = vocab.size()}, a.seed);
  if (a.pretrain_epochs > 0) {
    const auto r = encoder::pretrain(base, vocab, docs, {.epochs = a.pretrain_epochs, .seed = a.seed});
    for (size_t e = 0; e < r.epoch_loss.size(); ++e) {
      log_line("pretrain epoch " + std::to_string(e + 1) + " loss " + std::to_string(r.epoch_loss[e]));
    }
  }
  pkg::write_base(dir, base, vocab);
}

int run_train(const TrainArgs& a) {
  if (a.treebanks.size() != a.languages.size()) {
    throw UsageError("--treebank and --lang must be given the same number of times");
  }
  if (!a.ner.empty() && a.ner.size() != a.treebanks.size()) {
    throw UsageError("--ner must be given once per treebank when used");
  }
  std::vector<train::TreebankData> data;
  for (size_t i = 0; i < a.treebanks.size(); ++i) {
    train::TreebankData tb;
    tb.language = a.languages[i];
    tb.name = fs::path(a.treebanks[i]).stem().string();
    tb.sentences = conllu::read_file(a.treebanks[i]);
    if (!a.ner.empty()) tb.ner = ner::read_corpus(a.ner[i]);
    data.push_back(std::move(tb));
  }

  train::TrainConfig c;
  c.mode = pkg::mode_from_name(a.mode);
  c.components.clear();
  for (const auto& comp : a.components) {
    if (comp == "all") {
      c.components.insert(pkg::component_names().begin(), pkg::component_names().end());
    } else {
      c.components.insert(comp);
    }
  }
  if (a.ner.empty()) c.components.erase("ner");
  c.seed = a.seed;
  c.splitter_epochs = a.splitter_epochs;
  c.tagparse_epochs = a.tagparse_epochs;
  c.ner_epochs = a.ner_epochs;
  c.mwt.epochs = c.lemma.epochs = a.seq2seq_epochs;
  c.log = log_line;

  fs::create_directories(a.out);
  if (!fs::exists(fs::path(a.out) / "manifest.json")) build_base(a.out, data, a);
  const auto manifest = pkg::read_manifest(a.out);
  const auto base = pkg::load_base(a.out, manifest);
  auto result = train::train(*base.encoder, *base.vocab, manifest.encoder_checksum, data, c);
  for (auto& bundle : result.bundles) {
    // Components trained earlier for the same language are kept.
    if (manifest.find(bundle.language) != nullptr) {
      auto existing = pkg::load_bundle(a.out, manifest, bundle.language);
      train::merge_into(existing, std::move(bundle));
      bundle = std::move(existing);
    }
    pkg::write_bundle(a.out, bundle);
    log_line("wrote " + bundle.language + ".bundle");
  }
  if (result.splitter_mismatches > 0) {
    log_line(std::to_string(result.splitter_mismatches) + " wordpieces straddle a gold token boundary");
  }
  return kOk;
}

int run_eval(const std::string& dir, const std::string& lang, const std::string& gold_path,
             const std::string& ner_path, bool json) {
  auto p = pipeline::Pipeline::load(pkg::resolve_package_dir(dir), {lang});
  const auto gold = conllu::read_file(gold_path);
  const auto raw = conllu::reconstruct_text(gold);
  const auto d = p.annotate(lang, text::encode(raw.text));
  auto report = eval::score(doc::to_conllu(d), gold);
  if (!ner_path.empty()) {
    const auto corpus = ner::read_corpus(ner_path);
    std::vector<std::vector<std::string>> tokens;
    std::vector<std::vector<ner::EntitySpan>> gold_spans, sys_spans;
    for (const auto& s : corpus) {
      tokens.push_back(s.tokens);
      gold_spans.push_back(ner::bioes_to_spans(ner::to_bioes(s.tags)).spans);
    }
    const auto nd = p.annotate_pretokenized(lang, tokens);
    for (const auto& s : nd.sentences) {
      std::vector<std::string> tags;
      for (const auto& t : s.tokens) tags.push_back(t.ner.empty() ? "O" : t.ner);
      sys_spans.push_back(ner::bioes_to_spans(tags).spans);
    }
    report.has_ner = true;
    report.ner = eval::score_ner(sys_spans, gold_spans);
  }
  std::cout << (json ? report.json() + "\n" : report.table());
  return kOk;
}

int run_annotate(const std::string& dir, const std::string& lang, bool pretokenized,
                 const std::string& format, const std::string& input, bool timing) {
  auto p = pipeline::Pipeline::load(pkg::resolve_package_dir(dir), {lang});
  const auto raw = read_input(input);
  doc::Document d;
  if (pretokenized) {
    // One sentence per line, tokens separated by whitespace.
    std::vector<std::vector<std::string>> sentences;
    std::istringstream lines(raw);
    for (std::string line; std::getline(lines, line);) {
      std::istringstream words(line);
      std::vector<std::string> s{std::istream_iterator<std::string>(words), {}};
      if (!s.empty()) sentences.push_back(std::move(s));
    }
    d = p.annotate_pretokenized(lang, sentences);
  } else {
    d = p.annotate(lang, raw);
  }
  for (const auto& n : d.notices) log_line("note: " + n);
  if (format == "conllu") {
    std::cout << conllu::serialize(doc::to_conllu(d));
  } else {
    std::cout << doc::to_json(d) << "\n";
  }
  if (timing) std::cerr << p.timing_report(lang, {raw}).to_text() << p.memory_report().to_text();
  return kOk;
}

int run_inspect(const std::string& dir_arg) {
  const auto dir = pkg::resolve_package_dir(dir_arg);
  const auto m = pkg::read_manifest(dir);
  std::printf("package     %s (format %d)\n", dir.c_str(), m.format_version);
  std::printf("encoder     %-16s %12zu bytes  crc32 %s\n", m.encoder_file.c_str(), m.encoder_bytes,
              m.encoder_checksum.c_str());
  std::printf("vocabulary  %-16s %12s        crc32 %s\n", m.vocab_file.c_str(), "", m.vocab_checksum.c_str());
  for (const auto& e : m.languages) {
    std::string comps;
    for (const auto& c : e.components) comps += (comps.empty() ? "" : ",") + c;
    const double pct = m.encoder_bytes ? 100.0 * static_cast<double>(e.bytes) / static_cast<double>(m.encoder_bytes) : 0.0;
    std::printf("%-11s %-16s %12zu bytes  crc32 %s  %5.2f%% of encoder  [%s]\n", e.language.c_str(),
                e.file.c_str(), e.bytes, e.checksum.c_str(), pct, comps.c_str());
  }
  // Verify every file against the manifest.
  pkg::load_base(dir, m);
  for (const auto& e : m.languages) pkg::load_bundle(dir, m, e.language);
  std::printf("checksums   ok\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"plug: multilingual pipeline with a shared frozen encoder and per-language adapters"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "train components into a package directory");
  train_cmd->add_option("--mode", ta.mode, "adapters | multilingual | no-adapters")
      ->check(CLI::IsMember({"adapters", "multilingual", "no-adapters", "no_adapters"}));
  train_cmd->add_option("--component", ta.components, "splitter | mwt | tagparse | lemma | ner | all")
      ->check(CLI::IsMember({"splitter", "mwt", "tagparse", "lemma", "ner", "all"}));
  train_cmd->add_option("--treebank", ta.treebanks, "CoNLL-U training file (repeatable)")->required();
  train_cmd->add_option("--lang", ta.languages, "language code per treebank")->required();
  train_cmd->add_option("--ner", ta.ner, "two-column NER training file per treebank");
  train_cmd->add_option("--seed", ta.seed);
  train_cmd->add_option("--out", ta.out, "package directory")->required();
  train_cmd->add_option("--vocab-size", ta.vocab_size, "for a new package")->check(CLI::PositiveNumber);
  train_cmd->add_option("--pretrain-epochs", ta.pretrain_epochs, "for a new package")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--splitter-epochs", ta.splitter_epochs)->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--tagparse-epochs", ta.tagparse_epochs)->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--ner-epochs", ta.ner_epochs)->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--seq2seq-epochs", ta.seq2seq_epochs)->check(CLI::NonNegativeNumber);

  std::string dir, lang, gold, ner_path, format = "json", input;
  bool pretokenized = false, json = false, timing = false;
  auto* eval_cmd = app.add_subcommand("eval", "score a package against a gold treebank");
  eval_cmd->add_option("--package", dir)->required();
  eval_cmd->add_option("--lang", lang)->required();
  eval_cmd->add_option("--gold", gold)->required();
  eval_cmd->add_option("--ner", ner_path, "two-column NER gold file");
  eval_cmd->add_flag("--json", json, "print the report as JSON");

  auto* annotate_cmd = app.add_subcommand("annotate", "annotate raw or pretokenized text");
  annotate_cmd->add_option("--package", dir)->required();
  annotate_cmd->add_option("--lang", lang)->required();
  annotate_cmd->add_flag("--pretokenized", pretokenized, "one sentence per line, tokens split on spaces");
  annotate_cmd->add_option("--format", format)->check(CLI::IsMember({"json", "conllu"}));
  annotate_cmd->add_option("--input", input, "input file (default: standard input)");
  annotate_cmd->add_flag("--timing", timing, "print timing and memory reports to stderr");

  auto* package_cmd = app.add_subcommand("package", "package utilities");
  package_cmd->require_subcommand(1);
  auto* inspect_cmd = package_cmd->add_subcommand("inspect", "print manifest, sizes and checksums");
  inspect_cmd->add_option("dir", dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train_cmd) return run_train(ta);
    if (*eval_cmd) return run_eval(dir, lang, gold, ner_path, json);
    if (*annotate_cmd) return run_annotate(dir, lang, pretokenized, format, input, timing);
    if (*inspect_cmd) return run_inspect(dir);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ChecksumError& e) {
    std::cerr << "checksum error: " << e.what() << "\n";
    return kChecksum;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
