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

#include "lsalign/scripted_scorer.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace lsalign {
namespace {

std::vector<std::string_view> Split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

TokenId ParseId(std::string_view s) {
  TokenId v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    Throw(ErrorKind::kParse, "bad token id '" + std::string(s) + "'");
  }
  return v;
}

double ParseProb(std::string_view s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    Throw(ErrorKind::kParse, "bad probability '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

SparseRow ParseRowEntries(std::string_view text) {
  SparseRow row;
  double sum = 0.0;
  for (auto item : Split(text, ',')) {
    if (item.empty()) continue;
    auto colon = item.rfind(':');
    if (colon == std::string_view::npos) {
      Throw(ErrorKind::kParse, "row entry '" + std::string(item) + "' lacks ':'");
    }
    auto key = item.substr(0, colon);
    TokenId id = key == kEosName ? kEosId : ParseId(key);
    double p = ParseProb(item.substr(colon + 1));
    if (p < 0.0 || p > 1.0) Throw(ErrorKind::kParse, "probability outside [0,1]");
    row.entries.emplace_back(id, p);
    sum += p;
  }
  if (sum > 1.0 + kRowSumTolerance) {
    Throw(ErrorKind::kParse, "row entries sum to " + std::to_string(sum));
  }
  row.other_mass = sum < 1.0 ? 1.0 - sum : 0.0;
  return row;
}

ScriptedScorer::ScriptedScorer(std::size_t row_size, Options options)
    : row_size_(row_size), options_(std::move(options)) {}

std::string ScriptedScorer::Key(std::string_view segment, Direction dir,
                                const std::vector<TokenId>& prefix) {
  std::string key(segment);
  key += '\t';
  key += DirectionName(dir);
  key += '\t';
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (i) key += ' ';
    key += std::to_string(prefix[i]);
  }
  return key;
}

void ScriptedScorer::Add(const ScorerRequest& req, const SparseRow& row) {
  for (TokenId id : req.prefix) {
    if (id == kEosId || id < 0 || static_cast<std::size_t>(id) >= row_size_) {
      Throw(ErrorKind::kValidation, "scripted prefix id " + std::to_string(id) + " invalid");
    }
  }
  auto expanded = ExpandRow(row, row_size_, /*require_eos=*/false);
  auto [it, inserted] = table_.emplace(Key(req.segment_id, req.direction, req.prefix),
                                       std::move(expanded));
  if (!inserted) {
    Throw(ErrorKind::kDuplicateKey, "(" + req.segment_id + ", " +
                                        std::string(DirectionName(req.direction)) +
                                        ", prefix) scripted twice");
  }
  segments_.insert(req.segment_id);
}

ScriptedScorer ScriptedScorer::Load(const std::string& path, std::size_t row_size,
                                    Options options) {
  std::ifstream in(path);
  if (!in) Throw(ErrorKind::kIo, "cannot open scripted scorer file " + path);
  return Parse(in, row_size, std::move(options), path);
}

ScriptedScorer ScriptedScorer::Parse(std::istream& in, std::size_t row_size,
                                     Options options, const std::string& source_name) {
  ScriptedScorer scorer(row_size, std::move(options));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    try {
      auto cols = Split(line, '\t');
      if (cols.size() != 4) {
        Throw(ErrorKind::kParse, "expected 4 tab-separated columns, got " +
                                     std::to_string(cols.size()));
      }
      if (cols[0].empty()) Throw(ErrorKind::kParse, "empty segment id");
      ScorerRequest key;
      key.segment_id = std::string(cols[0]);
      try {
        key.direction = ParseDirection(cols[1]);
      } catch (const Error&) {
        Throw(ErrorKind::kParse, "bad direction '" + std::string(cols[1]) + "'");
      }
      for (auto tok : Split(cols[2], ' ')) {
        if (!tok.empty()) key.prefix.push_back(ParseId(tok));
      }
      scorer.Add(key, ParseRowEntries(cols[3]));
    } catch (const Error& e) {
      auto kind = e.kind() == ErrorKind::kDuplicateKey ? ErrorKind::kDuplicateKey
                                                       : ErrorKind::kParse;
      throw Error(kind, source_name + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return scorer;
}

PosteriorRow ScriptedScorer::NextPosterior(const ScorerRequest& req) {
  for (TokenId id : req.prefix) {
    if (id == kEosId || id < 0 || static_cast<std::size_t>(id) >= row_size_) {
      Throw(ErrorKind::kProtocol, "prefix id " + std::to_string(id) + " invalid");
    }
  }
  if (!segments_.contains(req.segment_id)) {
    Throw(ErrorKind::kUnknownSegment, "segment " + req.segment_id + " not scripted");
  }
  auto it = table_.find(Key(req.segment_id, req.direction, req.prefix));
  if (it != table_.end()) return it->second;
  if (options_.strict) {
    Throw(ErrorKind::kUnknownKey, "no scripted row for " +
                                      Key(req.segment_id, req.direction, req.prefix));
  }
  if (options_.default_row) return ExpandRow(*options_.default_row, row_size_, false);
  return ExpandRow(SparseRow{.entries = {}, .other_mass = 1.0}, row_size_, false);
}

}  // namespace lsalign
