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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "lsalign/aligner.hpp"
#include "lsalign/corpus_align.hpp"
#include "lsalign/corpus_io.hpp"
#include "lsalign/ctcseg.hpp"
#include "lsalign/metrics.hpp"
#include "lsalign/simulator.hpp"
#include "lsalign/wire.hpp"
#include "test_util.hpp"

namespace lsalign {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void Run(int number, const char* title, double budget_sec, const std::function<Outcome()>& fn) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  const bool in_time = budget_sec <= 0 || secs < budget_sec;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s [%d] %s: %s (%.2fs%s)\n", pass ? "PASS" : "FAIL", number, title,
              o.detail.c_str(), secs, in_time ? "" : ", over budget");
  std::fflush(stdout);
}

std::string Fmt(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

// 1 ---------------------------------------------------------------------------
Outcome ConfidenceExample() {
  const double c = Confidence(std::vector<double>{0.75, 0.39, 0.91});
  return {c == 0.75, Fmt("median{0.75,0.39,0.91} = %.17g, expected exactly 0.75", c)};
}

// 2 ---------------------------------------------------------------------------
Outcome CatScenario() {
  auto sc = testing::MakeCatScenario();
  auto r = AlignRecording(sc.segments, sc.transcript, sc.vocab, sc.fwt->scorer(),
                          sc.bwt->scorer(), AlignerConfig{});
  if (r.accepted.size() != 1) return {false, "segment not accepted"};
  const auto& p = r.accepted[0];
  std::string tokens;
  for (Position l = p.span.l_s; l <= p.span.l_e; ++l) {
    tokens += (tokens.empty() ? "" : ",") + sc.vocab.Token(sc.transcript.at(l));
  }
  return {tokens == "my,cat,has",
          Fmt("forward end at '%s', span [%s], confidence %.2f",
              sc.vocab.Token(sc.transcript.at(p.span.l_e)).c_str(), tokens.c_str(), p.confidence)};
}

// 3, 4 ---------------------------------------------------------------------------
SimConfig ExactnessConfig(double filler_prob) {
  SimConfig cfg;
  cfg.n_recordings = 200;
  cfg.utterances_min = 35;
  cfg.utterances_max = 45;
  cfg.concentration = 0.95;
  cfg.filler_segment_prob = filler_prob;
  cfg.seed = 2024;
  return cfg;
}

Outcome Exactness(double filler_prob) {
  auto corpus = std::make_shared<const Corpus>(GenerateCorpus(ExactnessConfig(filler_prob)));
  OracleScorer oracle(corpus);
  AlignerConfig cfg;
  cfg.theta = 0.7;
  auto results = AlignCorpus(corpus->recordings, corpus->vocab, oracle, oracle, cfg, 4);
  for (std::size_t i = 0; i < results.size(); ++i) {
    CheckResultInvariants(results[i], corpus->recordings[i].segments, cfg);
  }
  auto eval = Evaluate(results, corpus->recordings, corpus->truth);
  const double span_acc = SpanAccuracy(results, corpus->truth);
  const bool ok = span_acc == 1.0 && eval.cer_non_rejected == 0.0 && eval.nrr == 1.0 &&
                  eval.fillers_rejected == eval.fillers;
  return {ok, Fmt("%lld segments (%lld fillers, %lld rejected); span_accuracy %.6f, CER %.6f, "
                  "NRR %.6f",
                  static_cast<long long>(eval.segments), static_cast<long long>(eval.fillers),
                  static_cast<long long>(eval.fillers_rejected), span_acc, eval.cer_non_rejected,
                  eval.nrr)};
}

// 5 ---------------------------------------------------------------------------
Outcome Equivalence() {
  int noisy = 0, with_fillers = 0, mismatches = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    auto corpus = testing::TinyCorpus(seed);
    const auto& c = corpus->config;
    noisy += c.eps_eos_miss > 0 || c.eps_eos_false > 0;
    OracleScorer oracle(corpus);
    AlignerConfig cfg;
    cfg.theta = static_cast<double>(seed % 11) / 10.0;
    cfg.queue_cap = 1 + seed % 5;
    cfg.dedup_queue = seed % 7 != 0;
    const auto& rec = corpus->recordings[0];
    bool filler = false;
    for (const auto& s : rec.segments) filler = filler || !corpus->truth.at(s.segment_id);
    with_fillers += filler;
    auto ref = ReferenceAlign(rec, corpus->vocab, oracle, oracle, cfg);
    auto fast = AlignRecording(rec.segments, rec.transcript, corpus->vocab, oracle, oracle, cfg);
    if (ref.accepted != fast.accepted || ref.rejected != fast.rejected) ++mismatches;
  }
  return {mismatches == 0, Fmt("1000 instances (%d noisy, %d with fillers), %d mismatches", noisy,
                               with_fillers, mismatches)};
}

// 6 ---------------------------------------------------------------------------
using Seq = std::vector<TokenId>;

// Top-down recursion over edit scripts; the memo only caches identical
// subproblems. Minimises (total, insertions).
EditCounts Recurse(const Seq& a, const Seq& b, std::size_t i, std::size_t j,
                   std::map<std::pair<std::size_t, std::size_t>, EditCounts>& memo) {
  if (i == a.size()) return {0, static_cast<std::int64_t>(b.size() - j), 0};
  if (j == b.size()) return {0, 0, static_cast<std::int64_t>(a.size() - i)};
  auto key = std::pair(i, j);
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  auto rank = [](const EditCounts& c) { return std::pair(c.total(), c.ins); };
  EditCounts best = Recurse(a, b, i + 1, j + 1, memo);
  best.subs += a[i] != b[j];
  EditCounts del = Recurse(a, b, i + 1, j, memo);
  ++del.dels;
  if (rank(del) < rank(best)) best = del;
  EditCounts ins = Recurse(a, b, i, j + 1, memo);
  ++ins.ins;
  if (rank(ins) < rank(best)) best = ins;
  return memo[key] = best;
}

Outcome EditDistanceOracle() {
  std::vector<Seq> seqs = {{}};
  for (std::size_t k = 0; k < seqs.size(); ++k) {
    if (seqs[k].size() == 6) continue;
    for (TokenId t = 1; t <= 3; ++t) {
      Seq s = seqs[k];
      s.push_back(t);
      seqs.push_back(s);
    }
  }
  long long pairs = 0, mismatches = 0;
  std::map<std::pair<std::size_t, std::size_t>, EditCounts> memo;
  for (const auto& a : seqs) {
    for (const auto& b : seqs) {
      memo.clear();
      ++pairs;
      if (EditDistance(a, b) != Recurse(a, b, 0, 0, memo)) ++mismatches;
    }
  }
  return {mismatches == 0,
          Fmt("%zu sequences, %lld pairs, %lld mismatches", seqs.size(), pairs, mismatches)};
}

// 7 ---------------------------------------------------------------------------
Outcome CtcOracle() {
  std::mt19937 rng(77);
  std::gamma_distribution<double> g(0.5, 1.0);
  int compared_paths = 0, prob_mismatch = 0, path_mismatch = 0, infeasible = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t V = 1 + rng() % 4;
    const std::size_t T = 1 + rng() % 8;
    const std::size_t N = 1 + rng() % T;
    FramePosteriors post;
    post.frames = T;
    post.vocab_size = V;
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<double> row(V + 1);
      double sum = 0;
      for (auto& p : row) sum += (p = g(rng) + 1e-6);
      for (auto& p : row) post.probs.push_back(p / sum);
    }
    TokenSequence tokens;
    for (std::size_t i = 0; i < N; ++i) tokens.ids.push_back(static_cast<TokenId>(1 + rng() % V));
    std::vector<std::size_t> target;
    for (TokenId id : tokens.ids) target.push_back(FramePosteriors::Column(id));

    // Enumerate all (V+1)^T labellings.
    double best = 0, second = 0;
    std::vector<std::size_t> best_path, path(T, 0);
    while (true) {
      std::vector<std::size_t> collapsed;
      for (std::size_t t = 0; t < T; ++t) {
        if ((t == 0 || path[t] != path[t - 1]) && path[t] != V) collapsed.push_back(path[t]);
      }
      if (collapsed == target) {
        double p = 1;
        for (std::size_t t = 0; t < T; ++t) p *= post.at(t, path[t]);
        if (p > best) {
          second = best;
          best = p;
          best_path = path;
        } else if (p > second) {
          second = p;
        }
      }
      std::size_t t = 0;
      while (t < T && ++path[t] == V + 1) path[t++] = 0;
      if (t == T) break;
    }
    if (best == 0) {
      ++infeasible;
      try {
        CtcAlign(post, tokens);
        ++prob_mismatch;
      } catch (const Error&) {
      }
      continue;
    }
    auto a = CtcAlign(post, tokens);
    if (std::abs(std::exp(a.log_prob) / best - 1.0) > 1e-9) ++prob_mismatch;
    if (second < best * (1 - 1e-9)) {
      ++compared_paths;
      if (a.frame_columns != best_path) ++path_mismatch;
    }
  }
  return {prob_mismatch == 0 && path_mismatch == 0,
          Fmt("500 instances (%d infeasible), probability mismatches %d; %d unique-best paths, "
              "%d differ",
              infeasible, prob_mismatch, compared_paths, path_mismatch)};
}

// 8 ---------------------------------------------------------------------------
Outcome GatingTrend() {
  int better = 0;
  double sum_gated = 0, sum_open = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SimConfig sc;
    sc.n_recordings = 50;
    sc.eps_eos_false = 0.05;
    sc.concentration = 0.9;
    sc.seed = seed;
    auto corpus = std::make_shared<const Corpus>(GenerateCorpus(sc));
    OracleScorer oracle(corpus);
    auto cer_at = [&](double theta) {
      AlignerConfig cfg;
      cfg.theta = theta;
      auto results = AlignCorpus(corpus->recordings, corpus->vocab, oracle, oracle, cfg, 4);
      return Evaluate(results, corpus->recordings, corpus->truth).cer_non_rejected;
    };
    const double gated = cer_at(0.7), open = cer_at(0.0);
    better += gated < open;
    sum_gated += gated;
    sum_open += open;
  }
  return {better >= 18, Fmt("CER(theta=0.7) < CER(theta=0) in %d/20 seeds; mean %.4f vs %.4f",
                            better, sum_gated / 20, sum_open / 20)};
}

// 9, 10 --------------------------------------------------------------------------
const std::string kCli = LSALIGN_CLI_PATH;

std::string AlignCommand(const std::string& corpus, const std::string& fwt,
                         const std::string& bwt, const std::string& out, int jobs) {
  return kCli + " align --segments " + corpus + "/segments.tsv --transcript " + corpus +
         "/text.tsv --vocab " + corpus + "/vocab.txt --truth " + corpus + "/truth.json --fwt " +
         fwt + " --bwt " + bwt + " --out " + out + " --jobs " + std::to_string(jobs);
}

bool SameOutputs(const std::string& a, const std::string& b, std::string& which) {
  for (const char* f : {"/aligned.tsv", "/rejected.tsv", "/report.json"}) {
    if (testing::ReadFile(a + f) != testing::ReadFile(b + f)) {
      which = f + 1;
      return false;
    }
  }
  return true;
}

Outcome ProtocolConformance() {
  testing::TempDir dir;
  const std::string corpus = dir / "corpus";
  if (testing::RunCommand(kCli + " simulate --out " + corpus +
                          " --n-recordings 40 --filler-prob 0.2 --eps-eos-false 0.05"
                          " --eps-eos-miss 0.02 --concentration 0.9 --seed 9")
          .exit_code != 0) {
    return {false, "simulate failed"};
  }
  const std::string local = dir / "local", remote = dir / "remote";
  if (testing::RunCommand(AlignCommand(corpus, "oracle:" + corpus, "oracle:" + corpus, local, 1))
          .exit_code != 0) {
    return {false, "in-process align failed"};
  }
  Subprocess server(kCli + " serve-oracle --port 0 --corpus " + corpus);
  auto line = server.channel().ReadLine(std::chrono::milliseconds(10000));
  if (!line || line->rfind("listening ", 0) != 0) return {false, "server did not start"};
  const std::string port = line->substr(10);
  const std::string ep = "tcp:127.0.0.1:" + port;
  const int rc = testing::RunCommand(AlignCommand(corpus, ep, ep, remote, 4)).exit_code;
  server.Kill();
  server.Wait();
  if (rc != 0) return {false, Fmt("tcp align exited %d", rc)};
  std::string which;
  const bool same = SameOutputs(local, remote, which);
  return {same, same ? "aligned.tsv, rejected.tsv, report.json byte-identical over TCP (port " +
                           port + ", 4 jobs)"
                     : which + " differs"};
}

Outcome Determinism() {
  testing::TempDir dir;
  const std::string corpus = dir / "corpus";
  if (testing::RunCommand(kCli + " simulate --out " + corpus +
                          " --n-recordings 60 --filler-prob 0.3 --eps-eos-false 0.1"
                          " --eps-eos-miss 0.05 --concentration 0.85 --seed 31")
          .exit_code != 0) {
    return {false, "simulate failed"};
  }
  const std::string ep = "oracle:" + corpus;
  std::vector<std::string> outs;
  for (int jobs : {1, 1, 8}) {
    outs.push_back(dir / ("run" + std::to_string(outs.size())));
    if (testing::RunCommand(AlignCommand(corpus, ep, ep, outs.back(), jobs)).exit_code != 0) {
      return {false, "align failed"};
    }
  }
  std::string which;
  for (std::size_t i = 1; i < outs.size(); ++i) {
    if (!SameOutputs(outs[0], outs[i], which)) return {false, which + " differs on run " + std::to_string(i)};
  }
  return {true, "3 runs (jobs 1, 1, 8) byte-identical"};
}

}  // namespace
}  // namespace lsalign

int main() {
  using namespace lsalign;
  IgnoreSigpipe();
  Run(1, "confidence worked example", 1, ConfidenceExample);
  Run(2, "forward/backward walkthrough", 1, CatScenario);
  Run(3, "oracle exactness", 10, [] { return Exactness(0.0); });
  Run(4, "filler robustness", 15, [] { return Exactness(0.2); });
  Run(5, "reference interpreter equivalence", 30, Equivalence);
  Run(6, "edit distance vs recursion", 60, EditDistanceOracle);
  Run(7, "CTC vs path enumeration", 30, CtcOracle);
  Run(8, "confidence gating lowers CER", 60, GatingTrend);
  Run(9, "protocol conformance", 30, ProtocolConformance);
  Run(10, "determinism", 0, Determinism);
  std::printf("%d/10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
