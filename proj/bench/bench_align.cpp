// Copyright 2026 The lsalign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial vs OpenMP corpus alignment, plus the CTC trellis.

#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "lsalign/corpus_align.hpp"
#include "lsalign/ctcseg.hpp"
#include "lsalign/simulator.hpp"

namespace {

using namespace lsalign;

std::shared_ptr<const Corpus> BenchCorpus() {
  static auto corpus = [] {
    SimConfig cfg;
    cfg.n_recordings = 400;
    cfg.utterances_min = 10;
    cfg.utterances_max = 20;
    cfg.filler_segment_prob = 0.2;
    cfg.eps_eos_false = 0.05;
    cfg.concentration = 0.9;
    return std::make_shared<const Corpus>(GenerateCorpus(cfg));
  }();
  return corpus;
}

void BM_AlignCorpusSerial(benchmark::State& state) {
  auto corpus = BenchCorpus();
  OracleScorer oracle(corpus);
  for (auto _ : state) {
    auto r = AlignCorpusSerial(corpus->recordings, corpus->vocab, oracle, oracle, AlignerConfig{});
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(corpus->recordings.size()));
}
BENCHMARK(BM_AlignCorpusSerial)->Unit(benchmark::kMillisecond);

void BM_AlignCorpusParallel(benchmark::State& state) {
  auto corpus = BenchCorpus();
  OracleScorer oracle(corpus);
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto r = AlignCorpus(corpus->recordings, corpus->vocab, oracle, oracle, AlignerConfig{}, jobs);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(corpus->recordings.size()));
}
BENCHMARK(BM_AlignCorpusParallel)->Arg(2)->Arg(4)->Arg(8)->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_CtcAlign(benchmark::State& state) {
  const auto frames = static_cast<std::size_t>(state.range(0));
  FramePosteriors post;
  post.frames = frames;
  post.vocab_size = 30;
  std::mt19937 rng(1);
  std::gamma_distribution<double> g(0.5, 1.0);
  for (std::size_t t = 0; t < frames; ++t) {
    std::vector<double> row(post.columns());
    double sum = 0;
    for (auto& p : row) sum += (p = g(rng) + 1e-6);
    for (auto& p : row) post.probs.push_back(p / sum);
  }
  TokenSequence tokens;
  for (std::size_t i = 0; i < frames / 4; ++i) tokens.ids.push_back(1 + static_cast<TokenId>(rng() % 30));
  for (auto _ : state) benchmark::DoNotOptimize(CtcAlign(post, tokens));
}
BENCHMARK(BM_CtcAlign)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
