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


#include <gtest/gtest.h>

#include "lsalign/corpus_io.hpp"
#include "lsalign/error.hpp"
#include "lsalign/metrics.hpp"
#include "lsalign/simulator.hpp"
#include "test_util.hpp"

namespace lsalign {
namespace {

std::shared_ptr<const Corpus> Generate(SimConfig cfg) {
  return std::make_shared<const Corpus>(GenerateCorpus(cfg));
}

// Single recording, one utterance covering [1, L] of tokens 1..L.
std::shared_ptr<Corpus> LinearCorpus(Position length, int vocab_size, double eps_false,
                                     double c) {
  auto corpus = std::make_shared<Corpus>();
  corpus->config.eps_eos_false = eps_false;
  corpus->config.concentration = c;
  for (int i = 0; i < vocab_size; ++i) corpus->vocab.Add(SimTokenString(i));
  Recording rec;
  rec.id = "r";
  for (Position i = 1; i <= length; ++i) {
    rec.transcript.ids.push_back(static_cast<TokenId>(1 + (i - 1) % vocab_size));
  }
  rec.segments = {{"u", "r", 0.0, 3.0}};
  corpus->truth["u"] = Span{1, length};
  corpus->recordings.push_back(rec);
  return corpus;
}

TEST(SimConfig, Validation) {
  SimConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.vocab_size = 1;
  EXPECT_THROW(c.Validate(), Error);
  c = {};
  c.filler_segment_prob = 1.0;
  EXPECT_THROW(c.Validate(), Error);
  c = {};
  c.concentration = 0.0;
  EXPECT_THROW(c.Validate(), Error);
  c = {};
  c.tokens_min = 6;
  c.tokens_max = 5;
  EXPECT_THROW(c.Validate(), Error);
}

TEST(GenerateCorpus, SameSeedGivesIdenticalFiles) {
  SimConfig cfg;
  cfg.filler_segment_prob = 0.3;
  cfg.seed = 99;
  testing::TempDir a, b;
  WriteCorpusDir(GenerateCorpus(cfg), a.path().string());
  WriteCorpusDir(GenerateCorpus(cfg), b.path().string());
  for (const char* f : {"segments.tsv", "text.tsv", "vocab.txt", "truth.json"}) {
    EXPECT_EQ(testing::ReadFile(a / f), testing::ReadFile(b / f)) << f;
  }
  cfg.seed = 100;
  testing::TempDir c;
  WriteCorpusDir(GenerateCorpus(cfg), c.path().string());
  EXPECT_NE(testing::ReadFile(a / "text.tsv"), testing::ReadFile(c / "text.tsv"));
}

TEST(GenerateCorpus, NoFillersWhenProbabilityIsZero) {
  auto corpus = Generate(SimConfig{});
  for (const auto& [id, span] : corpus->truth) EXPECT_TRUE(span.has_value()) << id;
}

TEST(GenerateCorpus, SegmentCountsFollowUtteranceRange) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    SimConfig cfg;
    cfg.seed = seed;
    cfg.filler_segment_prob = 0.25;
    auto corpus = Generate(cfg);
    std::size_t utterances = 0, fillers = 0;
    for (const auto& [id, span] : corpus->truth) (span ? utterances : fillers)++;
    EXPECT_GE(utterances, 30u);
    EXPECT_LE(utterances, 50u);
    std::size_t segments = 0;
    for (const auto& rec : corpus->recordings) segments += rec.segments.size();
    EXPECT_EQ(segments, utterances + fillers);
  }
}

TEST(GenerateCorpus, UtteranceSpansTileTheTranscript) {
  SimConfig cfg;
  cfg.filler_segment_prob = 0.4;
  cfg.seed = 5;
  auto corpus = Generate(cfg);
  for (const auto& rec : corpus->recordings) {
    Position next = 1;
    double prev_end = 0.0;
    for (const auto& seg : rec.segments) {
      EXPECT_GT(seg.start_sec, prev_end);
      prev_end = seg.end_sec;
      const auto& span = corpus->truth.at(seg.segment_id);
      if (!span) continue;
      EXPECT_EQ(span->l_s, next);
      EXPECT_NEAR(seg.duration(), kSecondsPerToken * static_cast<double>(span->length()), 0.1 + 1e-9);
      next = span->l_e + 1;
    }
    EXPECT_EQ(next, rec.transcript.size() + 1);
  }
}

TEST(Oracle, BoundaryWithoutMissIsCertainEos) {
  auto corpus = LinearCorpus(5, 5, 0.0, 0.95);
  OracleScorer oracle(corpus);
  auto row = oracle.NextPosterior({"u", Direction::kForward, {1, 2, 3, 4, 5}, 1});
  EXPECT_EQ(row.eos(), 1.0);
}

TEST(Oracle, MidSpanFullConcentration) {
  auto corpus = LinearCorpus(5, 5, 0.0, 1.0);
  OracleScorer oracle(corpus);
  auto row = oracle.NextPosterior({"u", Direction::kForward, {2, 3}, 2});
  EXPECT_EQ(row.mass(4), 1.0);
  EXPECT_EQ(row.eos(), 0.0);
}

TEST(Oracle, MidSpanArithmetic) {
  // eps_false 0.1, c 0.9, vocab 5: eos 0.1, correct 0.9*0.9 = 0.81, the four
  // other tokens share 0.9*0.1 = 0.09, i.e. 0.0225 each. Positions where the
  // false-eos event fires are skipped.
  auto corpus = LinearCorpus(40, 5, 0.1, 0.9);
  OracleScorer oracle(corpus);
  const auto& y = corpus->recordings[0].transcript;
  int unflipped = 0;
  for (Position l = 1; l < 39; ++l) {
    ScorerRequest req{"u", Direction::kForward, {}, 1};
    for (Position i = 1; i <= l; ++i) req.prefix.push_back(y.at(i));
    auto row = oracle.NextPosterior(req);
    double sum = 0.0;
    for (double p : row.probs()) sum += p;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    if (row.eos() > 0.5) {
      EXPECT_DOUBLE_EQ(row.eos(), 0.9);
      continue;
    }
    ++unflipped;
    EXPECT_DOUBLE_EQ(row.eos(), 0.1);
    const TokenId correct = y.at(l + 1);
    EXPECT_DOUBLE_EQ(row.mass(correct), 0.81);
    for (TokenId t = 1; t <= 5; ++t) {
      if (t != correct) EXPECT_DOUBLE_EQ(row.mass(t), 0.0225);
    }
  }
  EXPECT_GT(unflipped, 25);
}

TEST(Oracle, OutsideTranscriptIsEos) {
  auto corpus = LinearCorpus(3, 3, 0.2, 0.9);
  OracleScorer oracle(corpus);
  EXPECT_EQ(oracle.NextPosterior({"u", Direction::kForward, {1, 2, 3}, 1}).eos(), 1.0);
  EXPECT_EQ(oracle.NextPosterior({"u", Direction::kBackward, {3, 2, 1}, 3}).eos(), 1.0);
}

TEST(Oracle, RequestErrors) {
  auto corpus = LinearCorpus(3, 3, 0.0, 0.9);
  OracleScorer oracle(corpus);
  auto kind = [&](const ScorerRequest& req) {
    try {
      oracle.NextPosterior(req);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kIo;
  };
  EXPECT_EQ(kind({"nope", Direction::kForward, {1}, 1}), ErrorKind::kUnknownSegment);
  EXPECT_EQ(kind({"u", Direction::kForward, {2}, 1}), ErrorKind::kProtocol);
  EXPECT_EQ(kind({"u", Direction::kForward, {1}, 0}), ErrorKind::kProtocol);
}

TEST(Oracle, RowsAreAlwaysNormalized) {
  SimConfig cfg;
  cfg.filler_segment_prob = 0.3;
  cfg.eps_eos_miss = 0.2;
  cfg.eps_eos_false = 0.2;
  cfg.concentration = 0.6;
  cfg.vocab_size = 7;
  auto corpus = Generate(cfg);
  OracleScorer oracle(corpus);
  std::mt19937 rng(1);
  for (const auto& rec : corpus->recordings) {
    const Position L = rec.transcript.size();
    for (const auto& seg : rec.segments) {
      for (int trial = 0; trial < 20; ++trial) {
        const bool fwd = rng() % 2;
        const Position anchor = 1 + static_cast<Position>(rng() % static_cast<std::uint64_t>(L));
        const Position room = fwd ? L - anchor + 1 : anchor;
        const Position k = (fwd ? 1 : 0) + static_cast<Position>(rng() % static_cast<std::uint64_t>(room));
        ScorerRequest req{seg.segment_id, fwd ? Direction::kForward : Direction::kBackward, {},
                          anchor};
        for (Position i = 0; i < std::min(k, room); ++i) {
          req.prefix.push_back(rec.transcript.at(fwd ? anchor + i : anchor - i));
        }
        EXPECT_NO_THROW(QueryChecked(oracle, req, corpus->vocab.row_size()));
      }
    }
  }
}

// --- ReferenceAlign ----------------------------------------------------------

std::vector<std::pair<std::string, Span>> Accepted(const AlignmentResult& r) {
  std::vector<std::pair<std::string, Span>> out;
  for (const auto& p : r.accepted) out.emplace_back(p.segment_id, p.span);
  return out;
}

std::vector<std::string> Rejected(const AlignmentResult& r) {
  std::vector<std::string> out;
  for (const auto& s : r.rejected) out.push_back(s.segment_id);
  return out;
}

TEST(ReferenceAlign, RefusesLargeInstances) {
  auto corpus = Generate(SimConfig{});
  OracleScorer oracle(corpus);
  try {
    ReferenceAlign(corpus->recordings[0], corpus->vocab, oracle, oracle, AlignerConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTooLargeForOracle);
  }
}

TEST(ReferenceAlign, TwoSegmentNoiseFreeInstance) {
  auto corpus = LinearCorpus(6, 6, 0.0, 0.95);
  auto& rec = corpus->recordings[0];
  rec.segments = {{"a", "r", 0.0, 0.5}, {"b", "r", 0.6, 1.1}};
  corpus->truth = {{"a", Span{1, 3}}, {"b", Span{4, 6}}};
  OracleScorer oracle(corpus);
  auto ref = ReferenceAlign(rec, corpus->vocab, oracle, oracle, AlignerConfig{});
  auto fast = AlignRecording(rec.segments, rec.transcript, corpus->vocab, oracle, oracle,
                             AlignerConfig{});
  EXPECT_EQ(Accepted(ref), (std::vector<std::pair<std::string, Span>>{{"a", {1, 3}}, {"b", {4, 6}}}));
  EXPECT_EQ(ref.accepted, fast.accepted);
  EXPECT_EQ(ref.rejected, fast.rejected);
  EXPECT_EQ(ref.final_queue, fast.final_queue);
}

TEST(ReferenceAlign, FillerOnlyRecording) {
  auto corpus = LinearCorpus(4, 4, 0.0, 0.95);
  auto& rec = corpus->recordings[0];
  rec.segments = {{"f1", "r", 0.0, 0.5}, {"f2", "r", 0.6, 1.1}, {"f3", "r", 1.2, 1.9}};
  corpus->truth = {{"f1", std::nullopt}, {"f2", std::nullopt}, {"f3", std::nullopt}};
  OracleScorer oracle(corpus);
  auto ref = ReferenceAlign(rec, corpus->vocab, oracle, oracle, AlignerConfig{});
  auto fast = AlignRecording(rec.segments, rec.transcript, corpus->vocab, oracle, oracle,
                             AlignerConfig{});
  EXPECT_TRUE(ref.accepted.empty());
  EXPECT_EQ(Rejected(ref), (std::vector<std::string>{"f1", "f2", "f3"}));
  EXPECT_EQ(ref.rejected, fast.rejected);
}

TEST(ReferenceAlign, ThetaZeroAcceptsFirstCandidate) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    auto corpus = testing::TinyCorpus(seed);
    OracleScorer oracle(corpus);
    AlignerConfig cfg;
    cfg.theta = 0.0;
    const auto& rec = corpus->recordings[0];
    auto ref = ReferenceAlign(rec, corpus->vocab, oracle, oracle, cfg);
    auto fast = AlignRecording(rec.segments, rec.transcript, corpus->vocab, oracle, oracle, cfg);
    EXPECT_EQ(ref.accepted, fast.accepted);
    EXPECT_EQ(ref.rejected, fast.rejected);
    // Only empty spans and exhausted transcripts are rejected at theta 0.
    for (const auto& rej : ref.rejected) {
      for (const auto& c : rej.candidates) EXPECT_TRUE(c.empty_span);
    }
  }
}

TEST(ReferenceAlign, MatchesAlignRecordingOnTinyInstances) {
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    auto corpus = testing::TinyCorpus(seed);
    OracleScorer oracle(corpus);
    AlignerConfig cfg;
    cfg.theta = static_cast<double>(seed % 10) / 10.0;
    cfg.queue_cap = 1 + seed % 4;
    cfg.dedup_queue = seed % 5 != 0;
    const auto& rec = corpus->recordings[0];
    auto ref = ReferenceAlign(rec, corpus->vocab, oracle, oracle, cfg);
    auto fast = AlignRecording(rec.segments, rec.transcript, corpus->vocab, oracle, oracle, cfg);
    ASSERT_EQ(ref.accepted, fast.accepted) << "seed " << seed;
    ASSERT_EQ(ref.rejected, fast.rejected) << "seed " << seed;
    ASSERT_EQ(ref.final_queue, fast.final_queue) << "seed " << seed;
    ASSERT_EQ(ref.partial, fast.partial) << "seed " << seed;
  }
}

}  // namespace
}  // namespace lsalign
