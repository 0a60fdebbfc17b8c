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

// Label-synchronous alignment of pre-split segments to a transcript.
//
// For each segment a forward scorer reads the transcript from a candidate
// start position until it predicts eos (final token), a backward scorer
// reads back from there until eos (initial token), and the median of the
// backward scorer's reference-token posteriors gates the result. Candidate
// start positions live in a FIFO queue that is reset on acceptance and
// grown on rejection.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lsalign/core.hpp"
#include "lsalign/scorer.hpp"

namespace lsalign {

struct EosRule {
  enum class Kind { kArgmax, kThreshold };
  Kind kind = Kind::kArgmax;
  double p_eos_min = 0.5;

  // argmax: eos strictly above every token (ties do not fire).
  bool Fires(const PosteriorRow& row) const;
  std::string ToString() const;
  // "argmax" or "threshold:<p>"; throws kValidation.
  static EosRule Parse(std::string_view text);
};

inline constexpr double kDefaultTheta = 0.7;
inline constexpr double kDefaultMaxTokenRate = 25.0;
inline constexpr std::size_t kDefaultQueueCap = 64;

struct AlignerConfig {
  double theta = kDefaultTheta;
  double max_token_rate = kDefaultMaxTokenRate;  // tokens per second
  EosRule eos_rule;
  bool dedup_queue = true;
  std::size_t queue_cap = kDefaultQueueCap;

  void Validate() const;  // throws kValidation
};

// Scan length bound for a segment: ceil(duration * max_token_rate), >= 1.
Position ScanCap(const Segment& segment, double max_token_rate);

struct FinalEstimate {
  Position l_e = 0;
  bool capped = false;
};

// Step 1. Teacher-forces y_{l_start}, y_{l_start+1}, ... into the forward
// scorer; the token read when eos fires is the final token.
FinalEstimate EstimateFinal(Scorer& fwt, const std::string& segment_id, Position l_start,
                            const TokenSequence& transcript, Position cap,
                            const EosRule& rule, std::size_t row_size);

struct InitialEstimate {
  Position l_s = 0;
  bool capped = false;
  // Backward-scorer mass on each reference token before it was consumed,
  // in consumption order (y_{l_e} first).
  std::vector<double> posteriors;
};

// Step 2. Reads backwards from `l_e`, never below `floor`. nullopt is the
// empty span: eos fired before any token was consumed.
std::optional<InitialEstimate> EstimateInitial(Scorer& bwt, const std::string& segment_id,
                                               Position l_e, Position floor,
                                               const TokenSequence& transcript, Position cap,
                                               const EosRule& rule, std::size_t row_size);

// Step 3. Median of the posteriors; mean of the central pair for even
// counts; 0 for an empty list.
double Confidence(std::span<const double> posteriors);

struct CandidateResult {
  Position l_start = 0;
  Position l_e = 0;
  Position l_s = 0;  // 0 for an empty span
  bool capped = false;
  bool empty_span = false;
  std::vector<double> bwt_posteriors;
  double confidence = 0.0;

  bool Passes(double theta) const { return !empty_span && confidence >= theta; }
  friend bool operator==(const CandidateResult&, const CandidateResult&) = default;
};

struct AlignedPair {
  std::string segment_id;
  Span span;
  double confidence = 0.0;
  std::string text;
  friend bool operator==(const AlignedPair&, const AlignedPair&) = default;
};

enum class RejectReason { kLowConfidence, kTranscriptExhausted, kQueueOverflow };

std::string_view RejectReasonName(RejectReason reason);
RejectReason ParseRejectReason(std::string_view name);

struct RejectedSegment {
  std::string segment_id;
  RejectReason reason = RejectReason::kLowConfidence;
  std::vector<CandidateResult> candidates;
  friend bool operator==(const RejectedSegment&, const RejectedSegment&) = default;
};

struct AlignmentResult {
  std::string recording_id;
  Position transcript_length = 0;
  std::vector<AlignedPair> accepted;
  std::vector<RejectedSegment> rejected;
  std::vector<Position> final_queue;
  std::vector<std::string> trace;
  // Set when the queue cap was hit and remaining segments were skipped.
  bool partial = false;

  std::string TraceDigest() const;
};

// Runs the queue algorithm over one recording's segments (in order).
// Scorer errors are rethrown with the segment id prefixed.
AlignmentResult AlignRecording(std::span<const Segment> segments, const TokenSequence& transcript,
                               const Vocabulary& vocab, Scorer& fwt, Scorer& bwt,
                               const AlignerConfig& config);

// Throws kValidation describing the first violated result invariant
// (overlap, ordering, confidence range, segment coverage).
void CheckResultInvariants(const AlignmentResult& result, std::span<const Segment> segments,
                           const AlignerConfig& config);

}  // namespace lsalign
