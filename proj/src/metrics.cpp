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

#include "lsalign/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <utility>

#include "json.hpp"

namespace lsalign {
namespace {

// (total edits, insertions), compared lexicographically.
using Cost = std::pair<std::int64_t, std::int64_t>;

Cost Add(Cost c, std::int64_t total, std::int64_t ins) {
  return {c.first + total, c.second + ins};
}

std::vector<Cost> CostMatrix(std::span<const TokenId> ref, std::span<const TokenId> hyp) {
  const std::size_t rows = ref.size() + 1;
  const std::size_t cols = hyp.size() + 1;
  std::vector<Cost> m(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) m[i * cols] = {static_cast<std::int64_t>(i), 0};
  for (std::size_t j = 0; j < cols; ++j) {
    m[j] = {static_cast<std::int64_t>(j), static_cast<std::int64_t>(j)};
  }
  for (std::size_t i = 1; i < rows; ++i) {
    for (std::size_t j = 1; j < cols; ++j) {
      const Cost diag = Add(m[(i - 1) * cols + j - 1], ref[i - 1] != hyp[j - 1], 0);
      const Cost del = Add(m[(i - 1) * cols + j], 1, 0);
      const Cost ins = Add(m[i * cols + j - 1], 1, 1);
      m[i * cols + j] = std::min({diag, del, ins});
    }
  }
  return m;
}

}  // namespace

std::vector<EditOp> EditAlignment(std::span<const TokenId> ref, std::span<const TokenId> hyp) {
  const auto m = CostMatrix(ref, hyp);
  const std::size_t cols = hyp.size() + 1;
  std::vector<EditOp> ops;
  std::size_t i = ref.size();
  std::size_t j = hyp.size();
  while (i > 0 || j > 0) {
    const Cost here = m[i * cols + j];
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (Add(m[(i - 1) * cols + j - 1], !same, 0) == here) {
        ops.push_back(same ? EditOp::kMatch : EditOp::kSub);
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && Add(m[(i - 1) * cols + j], 1, 0) == here) {
      ops.push_back(EditOp::kDel);
      --i;
      continue;
    }
    ops.push_back(EditOp::kIns);
    --j;
  }
  std::reverse(ops.begin(), ops.end());
  return ops;
}

EditCounts EditDistance(std::span<const TokenId> ref, std::span<const TokenId> hyp) {
  EditCounts c;
  for (EditOp op : EditAlignment(ref, hyp)) {
    switch (op) {
      case EditOp::kSub: ++c.subs; break;
      case EditOp::kDel: ++c.dels; break;
      case EditOp::kIns: ++c.ins; break;
      case EditOp::kMatch: break;
    }
  }
  return c;
}

double Cer(std::span<const TokenId> hyp, std::span<const TokenId> ref) {
  const auto edits = EditDistance(ref, hyp).total();
  return static_cast<double>(edits) / static_cast<double>(std::max<std::size_t>(1, ref.size()));
}

double Nrr(const AlignmentResult& result) {
  return Nrr(std::span<const AlignmentResult>(&result, 1));
}

double Nrr(std::span<const AlignmentResult> results) {
  std::int64_t covered = 0;
  std::int64_t total = 0;
  for (const auto& r : results) {
    total += r.transcript_length;
    for (const auto& p : r.accepted) covered += p.span.length();
  }
  return total > 0 ? static_cast<double>(covered) / static_cast<double>(total) : 0.0;
}

double SpanAccuracy(std::span<const AlignmentResult> results, const TruthMap& truth) {
  std::map<std::string_view, Span> aligned;
  for (const auto& r : results) {
    for (const auto& p : r.accepted) aligned[p.segment_id] = p.span;
  }
  std::int64_t utterances = 0;
  std::int64_t exact = 0;
  for (const auto& r : results) {
    auto visit = [&](const std::string& id) {
      auto it = truth.find(id);
      if (it == truth.end() || !it->second) return;
      ++utterances;
      auto a = aligned.find(id);
      if (a != aligned.end() && a->second == *it->second) ++exact;
    };
    for (const auto& p : r.accepted) visit(p.segment_id);
    for (const auto& rej : r.rejected) visit(rej.segment_id);
  }
  return utterances > 0 ? static_cast<double>(exact) / static_cast<double>(utterances) : 0.0;
}

namespace {

struct SegmentRef {
  bool is_utterance = false;
  std::optional<Span> span;
  std::vector<TokenId> tokens;
};

template <typename RefFn>
EvalReport EvaluateWith(std::span<const AlignmentResult> results,
                        std::span<const Recording> recordings, RefFn reference_of,
                        bool have_spans) {
  if (results.size() != recordings.size()) {
    Throw(ErrorKind::kValidation, "results and recordings differ in count");
  }
  EvalReport report;
  EditCounts accepted_edits;
  EditCounts all_edits;
  std::int64_t accepted_ref = 0;
  std::int64_t all_ref = 0;
  std::int64_t exact = 0;

  for (std::size_t r = 0; r < results.size(); ++r) {
    const auto& res = results[r];
    const auto& rec = recordings[r];
    std::map<std::string_view, const AlignedPair*> accepted;
    for (const auto& p : res.accepted) accepted[p.segment_id] = &p;

    for (const auto& seg : rec.segments) {
      const SegmentRef ref = reference_of(seg, rec);
      SegmentEval ev;
      ev.segment_id = seg.segment_id;
      ev.recording_id = rec.id;
      ev.is_utterance = ref.is_utterance;
      ev.truth_span = ref.span;
      ev.ref_length = static_cast<std::int64_t>(ref.tokens.size());
      auto it = accepted.find(seg.segment_id);
      if (it != accepted.end()) {
        const AlignedPair& pair = *it->second;
        ev.accepted = true;
        ev.aligned_span = pair.span;
        ev.confidence = pair.confidence;
        ev.edits = EditDistance(ref.tokens, rec.transcript.Slice(pair.span.l_s, pair.span.l_e));
        accepted_edits += ev.edits;
        accepted_ref += ev.ref_length;
        ++report.accepted;
      } else {
        ev.edits.dels = ev.ref_length;
      }
      all_edits += ev.edits;
      all_ref += ev.ref_length;
      if (ref.is_utterance) {
        ++report.utterances;
        if (ev.accepted && ref.span && ev.aligned_span == ref.span) ++exact;
      } else {
        ++report.fillers;
        if (!ev.accepted) ++report.fillers_rejected;
      }
      ++report.segments;
      report.per_segment.push_back(std::move(ev));
    }
  }
  report.cer_non_rejected = static_cast<double>(accepted_edits.total()) /
                            static_cast<double>(std::max<std::int64_t>(1, accepted_ref));
  report.cer_with_rejected_as_deletions =
      static_cast<double>(all_edits.total()) / static_cast<double>(std::max<std::int64_t>(1, all_ref));
  report.nrr = Nrr(results);
  if (have_spans) {
    report.span_exact_match =
        report.utterances > 0 ? static_cast<double>(exact) / static_cast<double>(report.utterances)
                              : 0.0;
  }
  return report;
}

}  // namespace

EvalReport Evaluate(std::span<const AlignmentResult> results,
                    std::span<const Recording> recordings, const TruthMap& truth) {
  return EvaluateWith(
      results, recordings,
      [&](const Segment& seg, const Recording& rec) {
        auto it = truth.find(seg.segment_id);
        if (it == truth.end()) {
          Throw(ErrorKind::kValidation, "no ground truth for segment " + seg.segment_id);
        }
        SegmentRef ref;
        if (it->second) {
          ref.is_utterance = true;
          ref.span = it->second;
          auto slice = rec.transcript.Slice(it->second->l_s, it->second->l_e);
          ref.tokens.assign(slice.begin(), slice.end());
        }
        return ref;
      },
      /*have_spans=*/true);
}

EvalReport EvaluateAgainstReference(std::span<const AlignmentResult> results,
                                    std::span<const Recording> recordings,
                                    const ReferenceMap& reference) {
  return EvaluateWith(
      results, recordings,
      [&](const Segment& seg, const Recording&) {
        SegmentRef ref;
        auto it = reference.find(seg.segment_id);
        if (it != reference.end()) {
          ref.is_utterance = true;
          ref.tokens = it->second;
        }
        return ref;
      },
      /*have_spans=*/false);
}

std::string EvalReportJson(const EvalReport& report, bool with_segments) {
  nlohmann::json j;
  j["cer_non_rejected"] = report.cer_non_rejected;
  j["cer_with_rejected_as_deletions"] = report.cer_with_rejected_as_deletions;
  j["nrr"] = report.nrr;
  j["span_exact_match"] = report.span_exact_match ? nlohmann::json(*report.span_exact_match)
                                                  : nlohmann::json(nullptr);
  j["segments"] = report.segments;
  j["accepted"] = report.accepted;
  j["utterances"] = report.utterances;
  j["fillers"] = report.fillers;
  j["fillers_rejected"] = report.fillers_rejected;
  if (with_segments) {
    auto rows = nlohmann::json::array();
    for (const auto& s : report.per_segment) {
      nlohmann::json row;
      row["segment"] = s.segment_id;
      row["recording"] = s.recording_id;
      row["utterance"] = s.is_utterance;
      row["accepted"] = s.accepted;
      row["confidence"] = s.confidence;
      row["ref_length"] = s.ref_length;
      row["subs"] = s.edits.subs;
      row["ins"] = s.edits.ins;
      row["dels"] = s.edits.dels;
      row["truth_span"] = s.truth_span ? nlohmann::json({s.truth_span->l_s, s.truth_span->l_e})
                                       : nlohmann::json(nullptr);
      row["aligned_span"] = s.aligned_span
                                ? nlohmann::json({s.aligned_span->l_s, s.aligned_span->l_e})
                                : nlohmann::json(nullptr);
      rows.push_back(std::move(row));
    }
    j["per_segment"] = std::move(rows);
  }
  return j.dump(2) + "\n";
}

std::string EvalReportTable(const EvalReport& report) {
  char buf[512];
  std::ostringstream out;
  std::snprintf(buf, sizeof buf,
                "segments          %lld (utterances %lld, fillers %lld)\n"
                "accepted          %lld\n"
                "fillers rejected  %lld / %lld\n"
                "NRR               %.2f%%\n"
                "CER (accepted)    %.2f%%\n"
                "CER (rej. = del)  %.2f%%\n",
                static_cast<long long>(report.segments), static_cast<long long>(report.utterances),
                static_cast<long long>(report.fillers), static_cast<long long>(report.accepted),
                static_cast<long long>(report.fillers_rejected),
                static_cast<long long>(report.fillers), 100.0 * report.nrr,
                100.0 * report.cer_non_rejected, 100.0 * report.cer_with_rejected_as_deletions);
  out << buf;
  if (report.span_exact_match) {
    std::snprintf(buf, sizeof buf, "span exact match  %.2f%%\n", 100.0 * *report.span_exact_match);
    out << buf;
  }
  return out.str();
}

}  // namespace lsalign
