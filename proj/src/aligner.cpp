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

#include "lsalign/aligner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

#include "lsalign/hash.hpp"

namespace lsalign {

bool EosRule::Fires(const PosteriorRow& row) const {
  if (kind == Kind::kThreshold) return row.eos() >= p_eos_min;
  return row.eos() > row.MaxTokenMass();
}

std::string EosRule::ToString() const {
  if (kind == Kind::kArgmax) return "argmax";
  char buf[64];
  std::snprintf(buf, sizeof buf, "threshold:%g", p_eos_min);
  return buf;
}

EosRule EosRule::Parse(std::string_view text) {
  if (text == "argmax") return EosRule{};
  constexpr std::string_view kPrefix = "threshold:";
  if (text.starts_with(kPrefix)) {
    auto num = text.substr(kPrefix.size());
    double p = 0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), p);
    if (ec == std::errc() && ptr == num.data() + num.size() && p >= 0.0 && p <= 1.0) {
      return EosRule{.kind = Kind::kThreshold, .p_eos_min = p};
    }
  }
  Throw(ErrorKind::kValidation,
        "eos rule must be 'argmax' or 'threshold:<p>' with p in [0,1], got '" +
            std::string(text) + "'");
}

void AlignerConfig::Validate() const {
  if (!(theta >= 0.0 && theta <= 1.0)) Throw(ErrorKind::kValidation, "theta must be in [0,1]");
  if (!(max_token_rate > 0.0)) Throw(ErrorKind::kValidation, "max_token_rate must be > 0");
  if (queue_cap < 1) Throw(ErrorKind::kValidation, "queue_cap must be >= 1");
  if (eos_rule.kind == EosRule::Kind::kThreshold &&
      !(eos_rule.p_eos_min >= 0.0 && eos_rule.p_eos_min <= 1.0)) {
    Throw(ErrorKind::kValidation, "p_eos_min must be in [0,1]");
  }
}

Position ScanCap(const Segment& segment, double max_token_rate) {
  const double raw = std::ceil(segment.duration() * max_token_rate - 1e-9);
  return std::max<Position>(1, static_cast<Position>(raw));
}

FinalEstimate EstimateFinal(Scorer& fwt, const std::string& segment_id, Position l_start,
                            const TokenSequence& transcript, Position cap,
                            const EosRule& rule, std::size_t row_size) {
  const Position length = transcript.size();
  if (l_start < 1 || l_start > length) {
    Throw(ErrorKind::kValidation, "l_start " + std::to_string(l_start) + " outside transcript");
  }
  if (cap < 1) Throw(ErrorKind::kValidation, "scan cap must be >= 1");
  const Position last = std::min(length, l_start + cap - 1);
  ScorerRequest req{.segment_id = segment_id,
                    .direction = Direction::kForward,
                    .prefix = {},
                    .anchor = l_start};
  for (Position l = l_start; l <= last; ++l) {
    req.prefix.push_back(transcript.at(l));
    if (rule.Fires(QueryChecked(fwt, req, row_size))) return {.l_e = l, .capped = false};
  }
  return {.l_e = last, .capped = true};
}

std::optional<InitialEstimate> EstimateInitial(Scorer& bwt, const std::string& segment_id,
                                               Position l_e, Position floor,
                                               const TokenSequence& transcript, Position cap,
                                               const EosRule& rule, std::size_t row_size) {
  if (floor < 1 || floor > l_e || l_e > transcript.size()) {
    Throw(ErrorKind::kValidation, "backward scan needs 1 <= floor <= l_e <= L");
  }
  if (cap < 1) Throw(ErrorKind::kValidation, "scan cap must be >= 1");
  const Position stop = std::max(floor, l_e - cap + 1);
  ScorerRequest req{.segment_id = segment_id,
                    .direction = Direction::kBackward,
                    .prefix = {},
                    .anchor = l_e};
  PosteriorRow row = QueryChecked(bwt, req, row_size);
  if (rule.Fires(row)) return std::nullopt;

  InitialEstimate est;
  for (Position l = l_e; l >= stop; --l) {
    const TokenId token = transcript.at(l);
    est.posteriors.push_back(row.mass(token));
    req.prefix.push_back(token);
    row = QueryChecked(bwt, req, row_size);
    if (rule.Fires(row)) {
      est.l_s = l;
      return est;
    }
  }
  est.l_s = stop;
  est.capped = true;
  return est;
}

double Confidence(std::span<const double> posteriors) {
  if (posteriors.empty()) return 0.0;
  std::vector<double> v(posteriors.begin(), posteriors.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

std::string_view RejectReasonName(RejectReason reason) {
  switch (reason) {
    case RejectReason::kLowConfidence: return "low_confidence";
    case RejectReason::kTranscriptExhausted: return "transcript_exhausted";
    case RejectReason::kQueueOverflow: return "queue_overflow";
  }
  return "unknown";
}

RejectReason ParseRejectReason(std::string_view name) {
  for (auto r : {RejectReason::kLowConfidence, RejectReason::kTranscriptExhausted,
                 RejectReason::kQueueOverflow}) {
    if (name == RejectReasonName(r)) return r;
  }
  Throw(ErrorKind::kParse, "unknown reject reason '" + std::string(name) + "'");
}

std::string AlignmentResult::TraceDigest() const {
  std::string joined;
  for (const auto& line : trace) {
    joined += line;
    joined += '\n';
  }
  return Sha256Hex(joined);
}

namespace {

std::string FormatCandidate(const std::string& segment_id, const CandidateResult& c,
                            bool accepted) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s start=%lld end=%lld%s begin=%s conf=%.6f %s",
                segment_id.c_str(), static_cast<long long>(c.l_start),
                static_cast<long long>(c.l_e), c.capped ? " capped" : "",
                c.empty_span ? "empty" : std::to_string(c.l_s).c_str(), c.confidence,
                accepted ? "accept" : "reject");
  return buf;
}

std::string FormatQueue(const std::string& segment_id, const std::vector<Position>& queue) {
  std::string line = segment_id + " queue=";
  for (std::size_t i = 0; i < queue.size(); ++i) {
    if (i) line += ',';
    line += std::to_string(queue[i]);
  }
  return line;
}

}  // namespace

AlignmentResult AlignRecording(std::span<const Segment> segments, const TokenSequence& transcript,
                               const Vocabulary& vocab, Scorer& fwt, Scorer& bwt,
                               const AlignerConfig& config) {
  config.Validate();
  ValidateRecordingSegments(segments);
  if (transcript.empty()) Throw(ErrorKind::kEmptyTranscript, "transcript has no tokens");

  const Position length = transcript.size();
  const std::size_t row_size = vocab.row_size();

  AlignmentResult result;
  result.recording_id = segments.empty() ? std::string() : segments.front().recording_id;
  result.transcript_length = length;

  std::vector<Position> queue{1};
  for (const Segment& seg : segments) {
    if (result.partial) {
      result.rejected.push_back({seg.segment_id, RejectReason::kQueueOverflow, {}});
      result.trace.push_back(seg.segment_id + " skipped after queue overflow");
      continue;
    }
    const bool any_live = std::any_of(queue.begin(), queue.end(),
                                      [&](Position p) { return p <= length; });
    if (!any_live) {
      result.rejected.push_back({seg.segment_id, RejectReason::kTranscriptExhausted, {}});
      result.trace.push_back(seg.segment_id + " transcript exhausted");
      continue;
    }

    const Position cap = ScanCap(seg, config.max_token_rate);
    const std::vector<Position> snapshot = queue;
    std::vector<CandidateResult> candidates;
    bool accepted = false;
    for (Position l_start : snapshot) {
      if (l_start > length) continue;
      CandidateResult cand;
      cand.l_start = l_start;
      const Position floor = *std::min_element(queue.begin(), queue.end());
      try {
        const auto fin = EstimateFinal(fwt, seg.segment_id, l_start, transcript, cap,
                                       config.eos_rule, row_size);
        cand.l_e = fin.l_e;
        cand.capped = fin.capped;
        auto init = EstimateInitial(bwt, seg.segment_id, fin.l_e, floor, transcript, cap,
                                    config.eos_rule, row_size);
        if (init) {
          cand.l_s = init->l_s;
          cand.capped = cand.capped || init->capped;
          cand.bwt_posteriors = std::move(init->posteriors);
          cand.confidence = Confidence(cand.bwt_posteriors);
        } else {
          cand.empty_span = true;
        }
      } catch (const Error& e) {
        throw Error(e.kind(), "segment " + seg.segment_id + ": " + e.what());
      }

      const bool pass = cand.Passes(config.theta);
      result.trace.push_back(FormatCandidate(seg.segment_id, cand, pass));
      candidates.push_back(cand);
      if (pass) {
        const Span span{.l_s = cand.l_s, .l_e = cand.l_e};
        result.accepted.push_back(
            {seg.segment_id, span, cand.confidence,
             Detokenize(transcript.Slice(span.l_s, span.l_e), transcript.mode, vocab)});
        queue.assign(1, cand.l_e + 1);
        accepted = true;
        break;
      }
      const Position next = cand.l_e + 1;
      if (next > length) continue;
      if (config.dedup_queue && std::find(queue.begin(), queue.end(), next) != queue.end()) {
        continue;
      }
      if (queue.size() >= config.queue_cap) {
        result.partial = true;
        result.trace.push_back(seg.segment_id + " queue overflow");
        break;
      }
      queue.push_back(next);
    }
    if (!accepted) {
      result.rejected.push_back({seg.segment_id,
                                 result.partial ? RejectReason::kQueueOverflow
                                                : RejectReason::kLowConfidence,
                                 std::move(candidates)});
    }
    result.trace.push_back(FormatQueue(seg.segment_id, queue));
  }
  result.final_queue = queue;
  return result;
}

void CheckResultInvariants(const AlignmentResult& result, std::span<const Segment> segments,
                           const AlignerConfig& config) {
  std::map<std::string_view, int> seen;
  std::map<std::string_view, std::size_t> order;
  for (std::size_t i = 0; i < segments.size(); ++i) order[segments[i].segment_id] = i;

  Position prev_end = 0;
  std::size_t prev_index = 0;
  bool first = true;
  for (const auto& pair : result.accepted) {
    auto it = order.find(pair.segment_id);
    if (it == order.end()) Throw(ErrorKind::kValidation, "unknown segment " + pair.segment_id);
    if (!pair.span.ValidFor(result.transcript_length)) {
      Throw(ErrorKind::kValidation, "invalid span for " + pair.segment_id);
    }
    if (!(pair.confidence >= config.theta && pair.confidence <= 1.0)) {
      Throw(ErrorKind::kValidation, "accepted confidence out of range for " + pair.segment_id);
    }
    if (!first && (it->second <= prev_index || pair.span.l_s <= prev_end)) {
      Throw(ErrorKind::kValidation, "accepted spans overlap or are out of order at " +
                                        pair.segment_id);
    }
    first = false;
    prev_end = pair.span.l_e;
    prev_index = it->second;
    ++seen[pair.segment_id];
  }
  for (const auto& rej : result.rejected) {
    if (!order.contains(rej.segment_id)) {
      Throw(ErrorKind::kValidation, "unknown segment " + rej.segment_id);
    }
    for (const auto& c : rej.candidates) {
      if (!(c.confidence >= 0.0 && c.confidence <= 1.0)) {
        Throw(ErrorKind::kValidation, "candidate confidence out of range for " + rej.segment_id);
      }
    }
    ++seen[rej.segment_id];
  }
  for (const auto& seg : segments) {
    if (seen[seg.segment_id] != 1) {
      Throw(ErrorKind::kValidation, "segment " + seg.segment_id + " appears " +
                                        std::to_string(seen[seg.segment_id]) + " times");
    }
  }
}

}  // namespace lsalign
