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

// Shared domain types: vocabulary, token sequences, segments and spans.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lsalign/error.hpp"

namespace lsalign {

using TokenId = std::int32_t;
// 1-based transcript position; 0 means "none".
using Position = std::int64_t;

inline constexpr TokenId kEosId = 0;
inline constexpr std::string_view kEosName = "eos";

enum class TokenMode { kChar, kWhitespace };

std::string_view TokenModeName(TokenMode mode);
TokenMode ParseTokenMode(std::string_view name);

// Transcript tokens get ids 1..size(); id 0 is reserved for eos.
class Vocabulary {
 public:
  Vocabulary() = default;
  static Vocabulary FromTokens(const std::vector<std::string>& tokens);

  // Returns the id of `token`, inserting it if new.
  TokenId Add(std::string_view token);
  std::optional<TokenId> Find(std::string_view token) const;
  TokenId Lookup(std::string_view token) const;  // throws kValidation

  const std::string& Token(TokenId id) const;
  bool IsToken(TokenId id) const {
    return id >= 1 && static_cast<std::size_t>(id) <= tokens_.size();
  }

  // Number of transcript tokens (excludes eos).
  std::size_t size() const { return tokens_.size(); }
  // Width of a posterior row: tokens plus eos.
  std::size_t row_size() const { return tokens_.size() + 1; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Lower-case hex SHA-256 over each token followed by '\n', in id order.
  std::string Digest() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

struct TokenSequence {
  std::vector<TokenId> ids;
  TokenMode mode = TokenMode::kChar;

  Position size() const { return static_cast<Position>(ids.size()); }
  bool empty() const { return ids.empty(); }
  // 1-based access.
  TokenId at(Position pos) const;
  std::span<const TokenId> Slice(Position first, Position last) const;
};

struct Span {
  Position l_s = 0;
  Position l_e = 0;

  Position length() const { return l_e - l_s + 1; }
  bool ValidFor(Position transcript_length) const {
    return l_s >= 1 && l_s <= l_e && l_e <= transcript_length;
  }
  friend bool operator==(const Span&, const Span&) = default;
};

struct Segment {
  std::string segment_id;
  std::string recording_id;
  double start_sec = 0.0;
  double end_sec = 0.0;

  double duration() const { return end_sec - start_sec; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

// One long recording: its pre-split segments (time order) and the
// un-aligned transcript.
struct Recording {
  std::string id;
  std::vector<Segment> segments;
  TokenSequence transcript;
};

// Checks the per-recording invariants: positive duration, unique ids,
// sorted by start time, no overlap. Throws kValidation.
void ValidateRecordingSegments(std::span<const Segment> segments);

// NFC normalization of UTF-8 text. Throws kValidation on invalid UTF-8.
std::string NormalizeNfc(std::string_view text);

// Removes every code point that appears in `strip_set` (both UTF-8).
std::string StripChars(std::string_view text, std::string_view strip_set);

// Char mode: NFC, whitespace removed, one token per code point.
// Whitespace mode: NFC, maximal non-whitespace runs. New tokens are added
// to `vocab`. Throws kEmptyTranscript when nothing remains.
TokenSequence Tokenize(std::string_view text, TokenMode mode, Vocabulary& vocab);

// Like Tokenize but never grows the vocabulary; unknown tokens throw
// kValidation.
TokenSequence TokenizeFixed(std::string_view text, TokenMode mode,
                            const Vocabulary& vocab);

std::string Detokenize(std::span<const TokenId> ids, TokenMode mode,
                       const Vocabulary& vocab);

}  // namespace lsalign
