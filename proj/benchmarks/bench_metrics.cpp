#include <benchmark/benchmark.h>

#include "slt/evaluation.hpp"
#include "slt/rng.hpp"

namespace {

using namespace slt;

std::vector<Sentence> random_corpus(int pairs, int vocab, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<Sentence> out;
  for (int i = 0; i < pairs; ++i) {
    Sentence s;
    s.language = LanguageTag{"toy"};
    const int len = 4 + static_cast<int>(rng.next_below(12));
    for (int k = 0; k < len; ++k) {
      s.tokens.push_back(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(vocab))));
    }
    out.push_back(std::move(s));
  }
  return out;
}

void BM_CorpusBleu(benchmark::State& state) {
  const auto hyp = random_corpus(static_cast<int>(state.range(0)), 50, 1);
  const auto ref = random_corpus(static_cast<int>(state.range(0)), 50, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bleu(hyp, ref));
  }
}
BENCHMARK(BM_CorpusBleu)->Arg(100)->Arg(1000);

void BM_RougeL(benchmark::State& state) {
  const auto hyp = random_corpus(1, 50, 3);
  const auto ref = random_corpus(1, 50, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rouge_l(hyp[0], ref[0]));
  }
}
BENCHMARK(BM_RougeL);

}  // namespace
