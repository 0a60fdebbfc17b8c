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

#include "lsalign/core.hpp"

#include <openssl/evp.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <array>
#include <set>
#include <sstream>

#include "lsalign/hash.hpp"

namespace lsalign {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kEmptyTranscript: return "EmptyTranscript";
    case ErrorKind::kParse: return "ParseError";
    case ErrorKind::kValidation: return "ValidationError";
    case ErrorKind::kDuplicateKey: return "DuplicateKey";
    case ErrorKind::kUnknownKey: return "UnknownKey";
    case ErrorKind::kUnknownSegment: return "UnknownSegment";
    case ErrorKind::kProtocol: return "ProtocolError";
    case ErrorKind::kIncompatibleScorer: return "IncompatibleScorer";
    case ErrorKind::kTimeout: return "Timeout";
    case ErrorKind::kInfeasibleAlignment: return "InfeasibleAlignment";
    case ErrorKind::kTooLargeForOracle: return "TooLargeForOracle";
    case ErrorKind::kIo: return "IoError";
  }
  return "Unknown";
}

bool Error::IsScorerError() const {
  switch (kind_) {
    case ErrorKind::kUnknownKey:
    case ErrorKind::kUnknownSegment:
    case ErrorKind::kProtocol:
    case ErrorKind::kIncompatibleScorer:
    case ErrorKind::kTimeout:
      return true;
    default:
      return false;
  }
}

void Throw(ErrorKind kind, const std::string& what) {
  throw Error(kind, std::string(ErrorKindName(kind)) + ": " + what);
}

std::string Sha256Hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(),
                 nullptr) != 1) {
    Throw(ErrorKind::kIo, "sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xf]);
  }
  return out;
}

std::uint64_t Fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string_view TokenModeName(TokenMode mode) {
  return mode == TokenMode::kChar ? "char" : "whitespace";
}

TokenMode ParseTokenMode(std::string_view name) {
  if (name == "char") return TokenMode::kChar;
  if (name == "whitespace") return TokenMode::kWhitespace;
  Throw(ErrorKind::kValidation, "unknown token mode '" + std::string(name) + "'");
}

Vocabulary Vocabulary::FromTokens(const std::vector<std::string>& tokens) {
  Vocabulary v;
  for (const auto& t : tokens) {
    if (v.Find(t)) Throw(ErrorKind::kValidation, "duplicate vocabulary token '" + t + "'");
    v.Add(t);
  }
  return v;
}

TokenId Vocabulary::Add(std::string_view token) {
  if (token.empty()) Throw(ErrorKind::kValidation, "empty token");
  if (auto id = Find(token)) return *id;
  tokens_.emplace_back(token);
  auto id = static_cast<TokenId>(tokens_.size());
  index_.emplace(tokens_.back(), id);
  return id;
}

std::optional<TokenId> Vocabulary::Find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::Lookup(std::string_view token) const {
  if (auto id = Find(token)) return *id;
  Throw(ErrorKind::kValidation, "token '" + std::string(token) + "' not in vocabulary");
}

const std::string& Vocabulary::Token(TokenId id) const {
  if (!IsToken(id)) {
    Throw(ErrorKind::kValidation, "token id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id - 1)];
}

std::string Vocabulary::Digest() const {
  std::string joined;
  for (const auto& t : tokens_) {
    joined += t;
    joined += '\n';
  }
  return Sha256Hex(joined);
}

TokenId TokenSequence::at(Position pos) const {
  if (pos < 1 || pos > size()) {
    Throw(ErrorKind::kValidation, "position " + std::to_string(pos) +
                                      " outside transcript of length " +
                                      std::to_string(size()));
  }
  return ids[static_cast<std::size_t>(pos - 1)];
}

std::span<const TokenId> TokenSequence::Slice(Position first, Position last) const {
  if (first < 1 || last > size() || first > last + 1) {
    Throw(ErrorKind::kValidation, "bad slice [" + std::to_string(first) + "," +
                                      std::to_string(last) + "]");
  }
  return std::span<const TokenId>(ids).subspan(static_cast<std::size_t>(first - 1),
                                               static_cast<std::size_t>(last - first + 1));
}

void ValidateRecordingSegments(std::span<const Segment> segments) {
  std::set<std::string_view> seen;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (!(s.start_sec >= 0.0)) {
      Throw(ErrorKind::kValidation, "segment " + s.segment_id + " has negative start");
    }
    if (!(s.end_sec > s.start_sec)) {
      Throw(ErrorKind::kValidation, "segment " + s.segment_id + " has end <= start");
    }
    if (!seen.insert(s.segment_id).second) {
      Throw(ErrorKind::kValidation, "duplicate segment id " + s.segment_id);
    }
    if (i > 0) {
      const auto& prev = segments[i - 1];
      if (s.start_sec < prev.start_sec) {
        Throw(ErrorKind::kValidation, "segments of " + s.recording_id + " not sorted at " + s.segment_id);
      }
      if (s.start_sec < prev.end_sec) {
        Throw(ErrorKind::kValidation,
              "segments " + prev.segment_id + " and " + s.segment_id + " overlap");
      }
    }
  }
}

namespace {

// Decodes UTF-8 into code points; throws on malformed input.
std::vector<UChar32> DecodeUtf8(std::string_view text) {
  std::vector<UChar32> out;
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  int32_t i = 0;
  const auto n = static_cast<int32_t>(text.size());
  while (i < n) {
    UChar32 c;
    U8_NEXT(s, i, n, c);
    if (c < 0) Throw(ErrorKind::kValidation, "invalid UTF-8 in text");
    out.push_back(c);
  }
  return out;
}

void AppendUtf8(std::string& out, UChar32 c) {
  char buf[U8_MAX_LENGTH];
  int32_t len = 0;
  UBool err = false;
  U8_APPEND(reinterpret_cast<uint8_t*>(buf), len, U8_MAX_LENGTH, c, err);
  if (err) Throw(ErrorKind::kValidation, "code point cannot be encoded as UTF-8");
  out.append(buf, static_cast<std::size_t>(len));
}

bool IsSpace(UChar32 c) { return u_isUWhiteSpace(c); }

std::vector<std::string> SplitTokens(std::string_view text, TokenMode mode) {
  std::vector<std::string> tokens;
  std::string current;
  for (UChar32 c : DecodeUtf8(NormalizeNfc(text))) {
    if (IsSpace(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
      continue;
    }
    if (mode == TokenMode::kChar) {
      std::string tok;
      AppendUtf8(tok, c);
      tokens.push_back(std::move(tok));
    } else {
      AppendUtf8(current, c);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  if (tokens.empty()) Throw(ErrorKind::kEmptyTranscript, "no tokens after normalization");
  return tokens;
}

}  // namespace

std::string NormalizeNfc(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) Throw(ErrorKind::kIo, "ICU NFC normalizer unavailable");
  DecodeUtf8(text);  // validates
  icu::UnicodeString in = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString out = nfc->normalize(in, status);
  if (U_FAILURE(status)) Throw(ErrorKind::kValidation, "NFC normalization failed");
  std::string result;
  out.toUTF8String(result);
  return result;
}

std::string StripChars(std::string_view text, std::string_view strip_set) {
  if (strip_set.empty()) return std::string(text);
  auto strip = DecodeUtf8(strip_set);
  std::sort(strip.begin(), strip.end());
  std::string out;
  for (UChar32 c : DecodeUtf8(text)) {
    if (!std::binary_search(strip.begin(), strip.end(), c)) AppendUtf8(out, c);
  }
  return out;
}

TokenSequence Tokenize(std::string_view text, TokenMode mode, Vocabulary& vocab) {
  TokenSequence seq{.ids = {}, .mode = mode};
  for (const auto& tok : SplitTokens(text, mode)) seq.ids.push_back(vocab.Add(tok));
  return seq;
}

TokenSequence TokenizeFixed(std::string_view text, TokenMode mode,
                            const Vocabulary& vocab) {
  TokenSequence seq{.ids = {}, .mode = mode};
  for (const auto& tok : SplitTokens(text, mode)) seq.ids.push_back(vocab.Lookup(tok));
  return seq;
}

std::string Detokenize(std::span<const TokenId> ids, TokenMode mode,
                       const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (mode == TokenMode::kWhitespace && i > 0) out += ' ';
    out += vocab.Token(ids[i]);
  }
  return out;
}

}  // namespace lsalign
