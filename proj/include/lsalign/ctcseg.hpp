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

// Frame-synchronous baseline: Viterbi alignment of a token sequence to
// frame-wise CTC posteriors (blank-interleaved trellis), in log space.

#include <cstddef>
#include <string>
#include <vector>

#include "lsalign/core.hpp"

namespace lsalign {

struct FramePosteriors {
  std::size_t frames = 0;
  std::size_t vocab_size = 0;  // V; the matrix has V + 1 columns, blank last
  double frame_shift_sec = 0.04;
  std::vector<double> probs;  // row-major frames x (V + 1)

  std::size_t columns() const { return vocab_size + 1; }
  std::size_t blank() const { return vocab_size; }
  double at(std::size_t t, std::size_t col) const { return probs[t * columns() + col]; }
  // Column of transcript token `id` (ids start at 1).
  static std::size_t Column(TokenId id) { return static_cast<std::size_t>(id - 1); }

  // Shape, range and row-sum checks; throws kValidation.
  void Validate(double tolerance = 1e-6) const;
};

struct TokenTiming {
  Position position = 0;
  std::size_t start_frame = 0;  // half-open [start_frame, end_frame)
  std::size_t end_frame = 0;
  double score = 0.0;  // lowest per-frame token probability over the interval
  friend bool operator==(const TokenTiming&, const TokenTiming&) = default;
};

struct CtcAlignment {
  std::vector<TokenTiming> timings;
  double log_prob = 0.0;
  // Posterior column chosen at each frame.
  std::vector<std::size_t> frame_columns;
};

// Best single path through the CTC trellis. Throws kInfeasibleAlignment for
// an empty token list or when no valid path exists.
CtcAlignment CtcAlign(const FramePosteriors& post, const TokenSequence& tokens);

// Binary layout: "CTCP1", u32 T, u32 V, f64 frame_shift, then T*(V+1)
// f32 values row-major; all little-endian.
void WriteFramePosteriorsBinary(const FramePosteriors& post, const std::string& path);
// Debug layout: "#frame_shift=<sec>" line, then one tab-separated row per frame.
void WriteFramePosteriorsTsv(const FramePosteriors& post, const std::string& path);
// Detects the layout from the magic bytes.
FramePosteriors ReadFramePosteriors(const std::string& path);

}  // namespace lsalign
