#include <benchmark/benchmark.h>

#include <random>

#include "plug/arborescence.hpp"
#include "plug/crf.hpp"
#include "plug/encoder.hpp"
#include "plug/subword.hpp"

using namespace plug;

namespace {

nn::Matrix random_matrix(int rows, int cols, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  nn::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

std::string sample_text(int words) {
  static const char* lexicon[] = {"la", "casa", "verde", "corre", "del", "mar", "un", "perro",
                                  "grande", "come", "pan", "al", "sol", "."};
  std::mt19937_64 rng(3);
  std::string s;
  for (int i = 0; i < words; ++i) s += std::string(i ? " " : "") + lexicon[rng() % 14];
  return s;
}

const subword::Vocab& vocab() {
  static const auto v = subword::Vocab::train(sample_text(4000), 300);
  return v;
}

void BM_ChuLiuEdmonds(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto scores = random_matrix(n, n + 1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(parse::chu_liu_edmonds(scores));
}
BENCHMARK(BM_ChuLiuEdmonds)->Arg(10)->Arg(30)->Arg(80);

void BM_CrfViterbi(benchmark::State& state) {
  const std::vector<std::string> labels{"O",     "B-PER", "I-PER", "E-PER", "S-PER",
                                        "B-LOC", "I-LOC", "E-LOC", "S-LOC"};
  const auto mask = crf::constraint_mask(labels);
  const auto e = random_matrix(static_cast<int>(state.range(0)), 9, 2);
  for (auto _ : state) benchmark::DoNotOptimize(crf::viterbi(e, mask));
}
BENCHMARK(BM_CrfViterbi)->Arg(20)->Arg(100);

void BM_CrfLogPartition(benchmark::State& state) {
  const auto e = random_matrix(static_cast<int>(state.range(0)), 9, 3);
  const auto t = random_matrix(11, 11, 4);
  for (auto _ : state) benchmark::DoNotOptimize(crf::log_partition(e, t));
}
BENCHMARK(BM_CrfLogPartition)->Arg(20)->Arg(100);

void BM_Tokenize(benchmark::State& state) {
  const auto text = sample_text(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(subword::tokenize(vocab(), std::string_view(text)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Tokenize)->Arg(100)->Arg(1000);

void BM_EncoderForward(benchmark::State& state) {
  const auto base = encoder::BaseEncoder::init({.vocab_size = vocab().size()}, 1);
  const auto seq = subword::tokenize(vocab(), std::string_view(sample_text(static_cast<int>(state.range(0)))));
  const auto adapter = encoder::AdapterSet::init("xx", encoder::Component::tagparse, 64, 16, 2, 2);
  const bool with_adapter = state.range(1) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(encoder::encode(base, with_adapter ? &adapter : nullptr, seq));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(seq.size()));
}
BENCHMARK(BM_EncoderForward)->Args({30, 0})->Args({30, 1})->Args({300, 0})->Args({300, 1});

}  // namespace

BENCHMARK_MAIN();
