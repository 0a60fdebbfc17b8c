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

#pragma once

// Synthetic corpora with known segmentations, and an oracle scorer whose
// posteriors are a closed-form function of the ground truth.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lsalign/aligner.hpp"
#include "lsalign/core.hpp"
#include "lsalign/metrics.hpp"
#include "lsalign/scorer.hpp"

namespace lsalign {

struct SimConfig {
  int n_recordings = 10;
  int tokens_min = 5;  // per utterance
  int tokens_max = 25;
  int utterances_min = 3;  // per recording
  int utterances_max = 5;
  int vocab_size = 50;
  double filler_segment_prob = 0.0;
  double eps_eos_miss = 0.0;
  double eps_eos_false = 0.0;
  double concentration = 0.95;
  std::uint64_t seed = 1;

  void Validate() const;  // throws kValidation
  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

inline constexpr double kSecondsPerToken = 0.15;

struct Corpus {
  SimConfig config;
  Vocabulary vocab;
  std::vector<Recording> recordings;
  TruthMap truth;
};

// Token string for simulator vocabulary index `i` (a single code point).
std::string SimTokenString(int i);

Corpus GenerateCorpus(const SimConfig& config);

struct OracleParams {
  double eps_eos_miss = 0.0;
  double eps_eos_false = 0.0;
  double concentration = 0.95;
  std::uint64_t seed = 1;

  static OracleParams From(const SimConfig& c) {
    return {c.eps_eos_miss, c.eps_eos_false, c.concentration, c.seed};
  }
};

// Posteriors derived from the ground truth. For a request whose last
// consumed token sits at position l (next token at p):
//   eos mass: 1 - eps_miss at the segment boundary (l = b forward,
//   l = a backward), eps_false elsewhere; each position independently
//   flips with probability eps_miss / eps_false (seeded hash), giving
//   eps_miss at a missed boundary and 1 - eps_false at a false one.
//   The remaining 1 - e: concentration c on y_p when p lies inside the
//   segment's true span, otherwise on a different token; (1-e)(1-c) is
//   spread over the rest. Fillers put eos on their first query. A next
//   position outside the transcript gives eos mass 1.
class OracleScorer final : public Scorer {
 public:
  OracleScorer(std::shared_ptr<const Corpus> corpus, OracleParams params);
  explicit OracleScorer(std::shared_ptr<const Corpus> corpus)
      : OracleScorer(corpus, OracleParams::From(corpus->config)) {}

  SparseRow SparseNext(const ScorerRequest& req) const;
  PosteriorRow NextPosterior(const ScorerRequest& req) override;

  const Vocabulary& vocab() const { return corpus_->vocab; }

 private:
  struct SegmentInfo {
    const TokenSequence* transcript = nullptr;
    std::optional<Span> span;
  };

  std::shared_ptr<const Corpus> corpus_;
  OracleParams params_;
  std::map<std::string, SegmentInfo, std::less<>> segments_;
};

inline constexpr Position kReferenceMaxTokens = 8;
inline constexpr std::size_t kReferenceMaxSegments = 3;

// Unoptimized line-by-line interpreter of the queue algorithm, kept as an
// equivalence oracle for AlignRecording. Throws kTooLargeForOracle beyond
// 8 tokens or 3 segments. Produces no trace.
AlignmentResult ReferenceAlign(const Recording& recording, const Vocabulary& vocab, Scorer& fwt,
                               Scorer& bwt, const AlignerConfig& config);

}  // namespace lsalign
