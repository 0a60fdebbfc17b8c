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

#include "lsalign/simulator.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include "lsalign/hash.hpp"

namespace lsalign {

void SimConfig::Validate() const {
  auto fail = [](const std::string& what) { Throw(ErrorKind::kValidation, "sim config: " + what); };
  if (n_recordings < 1) fail("n_recordings must be >= 1");
  if (tokens_min < 1 || tokens_max < tokens_min) fail("bad tokens_per_utterance range");
  if (utterances_min < 1 || utterances_max < utterances_min) fail("bad utterances_per_recording range");
  if (vocab_size < 2) fail("vocab_size must be >= 2");
  if (!(filler_segment_prob >= 0.0 && filler_segment_prob < 1.0)) fail("filler_segment_prob must be in [0,1)");
  if (!(eps_eos_miss >= 0.0 && eps_eos_miss < 1.0)) fail("eps_eos_miss must be in [0,1)");
  if (!(eps_eos_false >= 0.0 && eps_eos_false < 1.0)) fail("eps_eos_false must be in [0,1)");
  if (!(concentration > 0.0 && concentration <= 1.0)) fail("concentration must be in (0,1]");
}

std::string SimTokenString(int i) {
  if (i < 0) Throw(ErrorKind::kValidation, "negative token index");
  if (i < 26) return std::string(1, static_cast<char>('a' + i));
  // CJK unified ideographs: one code point, three UTF-8 bytes, NFC-stable.
  const auto cp = static_cast<std::uint32_t>(0x4E00 + (i - 26));
  if (cp > 0x9FFF) Throw(ErrorKind::kValidation, "vocab_size too large for simulator tokens");
  std::string s;
  s.push_back(static_cast<char>(0xE0 | (cp >> 12)));
  s.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
  s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  return s;
}

Corpus GenerateCorpus(const SimConfig& config) {
  config.Validate();
  Corpus corpus;
  corpus.config = config;
  for (int i = 0; i < config.vocab_size; ++i) corpus.vocab.Add(SimTokenString(i));

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<int> n_utts(config.utterances_min, config.utterances_max);
  std::uniform_int_distribution<int> n_tokens(config.tokens_min, config.tokens_max);
  std::uniform_int_distribution<TokenId> token(1, config.vocab_size);
  std::uniform_real_distribution<double> gap(0.05, 0.5);
  std::uniform_real_distribution<double> jitter(0.0, 0.1);
  std::uniform_real_distribution<double> filler_len(0.3, 1.5);
  std::bernoulli_distribution filler(config.filler_segment_prob);

  for (int r = 0; r < config.n_recordings; ++r) {
    Recording rec;
    char name[32];
    std::snprintf(name, sizeof name, "rec%04d", r);
    rec.id = name;
    rec.transcript.mode = TokenMode::kChar;
    double t = 0.0;
    int seg_no = 0;
    auto add_segment = [&](double duration, std::optional<Span> span) {
      char id[48];
      std::snprintf(id, sizeof id, "%s_seg%04d", name, seg_no++);
      t += gap(rng);
      rec.segments.push_back({id, rec.id, t, t + duration});
      t += duration;
      corpus.truth[id] = span;
    };

    const int utts = n_utts(rng);
    for (int u = 0; u < utts; ++u) {
      if (filler(rng)) add_segment(filler_len(rng), std::nullopt);
      const int len = n_tokens(rng);
      const Position first = rec.transcript.size() + 1;
      for (int k = 0; k < len; ++k) rec.transcript.ids.push_back(token(rng));
      add_segment(len * kSecondsPerToken + jitter(rng), Span{first, rec.transcript.size()});
    }
    if (filler(rng)) add_segment(filler_len(rng), std::nullopt);
    corpus.recordings.push_back(std::move(rec));
  }
  return corpus;
}

OracleScorer::OracleScorer(std::shared_ptr<const Corpus> corpus, OracleParams params)
    : corpus_(std::move(corpus)), params_(params) {
  for (const auto& rec : corpus_->recordings) {
    for (const auto& seg : rec.segments) {
      auto it = corpus_->truth.find(seg.segment_id);
      if (it == corpus_->truth.end()) {
        Throw(ErrorKind::kValidation, "oracle corpus lacks ground truth for " + seg.segment_id);
      }
      segments_[seg.segment_id] = {&rec.transcript, it->second};
    }
  }
}

namespace {

double NoiseDraw(std::uint64_t seed, std::string_view segment, Direction dir, Position l) {
  std::uint64_t h = Mix64(seed);
  h = Mix64(h ^ Fnv1a64(segment));
  h = Mix64(h ^ (dir == Direction::kForward ? 0x5bd1e995ULL : 0x9e3779b9ULL));
  h = Mix64(h ^ static_cast<std::uint64_t>(l));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace

SparseRow OracleScorer::SparseNext(const ScorerRequest& req) const {
  auto it = segments_.find(req.segment_id);
  if (it == segments_.end()) {
    Throw(ErrorKind::kUnknownSegment, "oracle has no segment " + req.segment_id);
  }
  const TokenSequence& transcript = *it->second.transcript;
  const std::optional<Span>& truth = it->second.span;
  const Position length = transcript.size();
  const auto k = static_cast<Position>(req.prefix.size());
  const bool forward = req.direction == Direction::kForward;

  if (req.anchor < 1 || req.anchor > length) {
    Throw(ErrorKind::kProtocol, "oracle needs an anchor inside the transcript");
  }
  // Last consumed position and next position.
  const Position last = forward ? req.anchor + k - 1 : req.anchor - k + 1;
  const Position next = forward ? last + 1 : last - 1;
  if (k > 0 && (last < 1 || last > length)) {
    Throw(ErrorKind::kProtocol, "prefix runs past the transcript");
  }
  for (Position i = 0; i < k; ++i) {
    const Position pos = forward ? req.anchor + i : req.anchor - i;
    if (transcript.at(pos) != req.prefix[static_cast<std::size_t>(i)]) {
      Throw(ErrorKind::kProtocol, "prefix does not match the transcript at position " +
                                      std::to_string(pos));
    }
  }

  if (next < 1 || next > length) return SparseRow{.entries = {{kEosId, 1.0}}, .other_mass = 0.0};

  bool boundary = false;
  if (truth) {
    boundary = last == (forward ? truth->l_e : truth->l_s);
  } else {
    boundary = forward ? k == 1 : k == 0;
  }
  const double u = NoiseDraw(params_.seed, req.segment_id, req.direction, last);
  double e = 0.0;
  if (boundary) {
    e = u < params_.eps_eos_miss ? params_.eps_eos_miss : 1.0 - params_.eps_eos_miss;
  } else {
    e = u < params_.eps_eos_false ? 1.0 - params_.eps_eos_false : params_.eps_eos_false;
  }

  const auto vocab_size = static_cast<TokenId>(corpus_->vocab.size());
  const TokenId reference = transcript.at(next);
  const bool supported = truth && next >= truth->l_s && next <= truth->l_e;
  const TokenId target = supported ? reference : (reference % vocab_size) + 1;
  const double c = params_.concentration;

  SparseRow row;
  row.entries.emplace_back(kEosId, e);
  row.entries.emplace_back(target, (1.0 - e) * c);
  row.other_mass = (1.0 - e) * (1.0 - c);
  return row;
}

PosteriorRow OracleScorer::NextPosterior(const ScorerRequest& req) {
  return ExpandRow(SparseNext(req), corpus_->vocab.row_size(), /*require_eos=*/true);
}

AlignmentResult ReferenceAlign(const Recording& recording, const Vocabulary& vocab, Scorer& fwt,
                               Scorer& bwt, const AlignerConfig& config) {
  const Position L = recording.transcript.size();
  const std::size_t N = recording.segments.size();
  if (L > kReferenceMaxTokens || N > kReferenceMaxSegments) {
    Throw(ErrorKind::kTooLargeForOracle, "reference interpreter is limited to L <= 8, N <= 3");
  }
  const auto& y = recording.transcript;
  const std::size_t V1 = vocab.row_size();

  AlignmentResult out;
  out.recording_id = recording.id;
  out.transcript_length = L;

  std::vector<Position> Q = {1};
  bool overflow = false;
  for (std::size_t n = 1; n <= N; ++n) {
    const Segment& x = recording.segments[n - 1];
    if (overflow) {
      out.rejected.push_back({x.segment_id, RejectReason::kQueueOverflow, {}});
      continue;
    }
    bool live = false;
    for (Position q : Q) live = live || q <= L;
    if (!live) {
      out.rejected.push_back({x.segment_id, RejectReason::kTranscriptExhausted, {}});
      continue;
    }
    const Position cap = ScanCap(x, config.max_token_rate);
    std::vector<CandidateResult> tried;
    bool stored = false;
    const std::vector<Position> Q_at_start = Q;
    for (Position l_start : Q_at_start) {
      if (l_start > L) continue;
      CandidateResult c;
      c.l_start = l_start;

      // Step 1
      ScorerRequest f{x.segment_id, Direction::kForward, {}, l_start};
      Position l = l_start;
      while (true) {
        f.prefix.push_back(y.at(l));
        PosteriorRow row = QueryChecked(fwt, f, V1);
        if (config.eos_rule.Fires(row)) {
          c.l_e = l;
          break;
        }
        if (l == L || l == l_start + cap - 1) {
          c.l_e = l;
          c.capped = true;
          break;
        }
        ++l;
      }

      // Step 2
      Position floor = Q[0];
      for (Position q : Q) floor = std::min(floor, q);
      ScorerRequest b{x.segment_id, Direction::kBackward, {}, c.l_e};
      PosteriorRow row = QueryChecked(bwt, b, V1);
      if (config.eos_rule.Fires(row)) {
        c.empty_span = true;
      } else {
        Position m = c.l_e;
        Position consumed = 0;
        while (true) {
          c.bwt_posteriors.push_back(row.mass(y.at(m)));
          b.prefix.push_back(y.at(m));
          ++consumed;
          row = QueryChecked(bwt, b, V1);
          if (config.eos_rule.Fires(row)) {
            c.l_s = m;
            break;
          }
          if (m == floor || consumed == cap) {
            c.l_s = m;
            c.capped = true;
            break;
          }
          --m;
        }
        // Step 3
        std::vector<double> sorted = c.bwt_posteriors;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t h = sorted.size() / 2;
        c.confidence = sorted.size() % 2 ? sorted[h] : (sorted[h - 1] + sorted[h]) / 2.0;
      }
      tried.push_back(c);

      if (!c.empty_span && c.confidence >= config.theta) {
        out.accepted.push_back({x.segment_id,
                                Span{c.l_s, c.l_e},
                                c.confidence,
                                Detokenize(y.Slice(c.l_s, c.l_e), y.mode, vocab)});
        Q = {c.l_e + 1};
        stored = true;
        break;
      }
      const Position append = c.l_e + 1;
      if (append > L) continue;
      if (config.dedup_queue && std::count(Q.begin(), Q.end(), append) > 0) continue;
      if (Q.size() >= config.queue_cap) {
        overflow = true;
        break;
      }
      Q.push_back(append);
    }
    if (!stored) {
      out.rejected.push_back({x.segment_id,
                              overflow ? RejectReason::kQueueOverflow : RejectReason::kLowConfidence,
                              tried});
    }
  }
  out.final_queue = Q;
  out.partial = overflow;
  return out;
}

}  // namespace lsalign
