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

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lsalign/aligner.hpp"
#include "lsalign/core.hpp"

namespace lsalign {

struct EditCounts {
  std::int64_t subs = 0;
  std::int64_t ins = 0;
  std::int64_t dels = 0;

  std::int64_t total() const { return subs + ins + dels; }
  EditCounts& operator+=(const EditCounts& o) {
    subs += o.subs;
    ins += o.ins;
    dels += o.dels;
    return *this;
  }
  friend bool operator==(const EditCounts&, const EditCounts&) = default;
};

enum class EditOp { kMatch, kSub, kDel, kIns };

// Unit-cost Levenshtein alignment of `hyp` against `ref`. Among
// minimum-cost alignments the one with fewest insertions wins, so the
// counts are unique; the backtrace prefers substitution, then deletion,
// then insertion. Deletions are ref tokens missing from hyp.
EditCounts EditDistance(std::span<const TokenId> ref, std::span<const TokenId> hyp);
std::vector<EditOp> EditAlignment(std::span<const TokenId> ref, std::span<const TokenId> hyp);

// edits / max(1, |ref|)
double Cer(std::span<const TokenId> hyp, std::span<const TokenId> ref);

// Accepted span tokens / transcript length.
double Nrr(const AlignmentResult& result);
double Nrr(std::span<const AlignmentResult> results);

// Ground truth for one segment: the span it truly covers, or nullopt for a
// filler segment.
using TruthMap = std::map<std::string, std::optional<Span>, std::less<>>;

// Fraction of true-utterance segments whose accepted span matches exactly.
double SpanAccuracy(std::span<const AlignmentResult> results, const TruthMap& truth);

// Reference for one segment when only reference text is known.
using ReferenceMap = std::map<std::string, std::vector<TokenId>, std::less<>>;

struct SegmentEval {
  std::string segment_id;
  std::string recording_id;
  bool is_utterance = true;
  bool accepted = false;
  std::optional<Span> truth_span;
  std::optional<Span> aligned_span;
  double confidence = 0.0;
  std::int64_t ref_length = 0;
  EditCounts edits;  // against an empty hypothesis when rejected
};

struct EvalReport {
  double cer_non_rejected = 0.0;
  double cer_with_rejected_as_deletions = 0.0;
  double nrr = 0.0;
  std::optional<double> span_exact_match;  // only with span ground truth
  std::int64_t segments = 0;
  std::int64_t accepted = 0;
  std::int64_t utterances = 0;
  std::int64_t fillers_rejected = 0;
  std::int64_t fillers = 0;
  std::vector<SegmentEval> per_segment;
};

// Scores results against span ground truth. `recordings` supplies
// transcripts and segment order and must parallel `results`.
EvalReport Evaluate(std::span<const AlignmentResult> results,
                    std::span<const Recording> recordings, const TruthMap& truth);

// Scores results against per-segment reference token sequences; segments
// absent from `reference` count as fillers.
EvalReport EvaluateAgainstReference(std::span<const AlignmentResult> results,
                                    std::span<const Recording> recordings,
                                    const ReferenceMap& reference);

// JSON with sorted keys; rates as numbers, per-segment rows included when
// `with_segments`.
std::string EvalReportJson(const EvalReport& report, bool with_segments);
std::string EvalReportTable(const EvalReport& report);

}  // namespace lsalign
