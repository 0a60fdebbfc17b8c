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

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "lsalign/scorer.hpp"

namespace lsalign {

// Parses `id:prob,eos:prob,...`. Unlisted mass (1 - sum) becomes
// other_mass. Throws kParse.
SparseRow ParseRowEntries(std::string_view text);

// In-memory scorer answering from a table of scripted rows.
//
// File format, one row per line, `#` starts a comment line:
//   segment_id <TAB> forward|backward <TAB> space-joined prefix ids <TAB> entries
class ScriptedScorer final : public Scorer {
 public:
  struct Options {
    // Unscripted keys of known segments throw kUnknownKey when strict;
    // otherwise they get `default_row` (uniform when unset).
    bool strict = true;
    std::optional<SparseRow> default_row;
  };

  ScriptedScorer(std::size_t row_size, Options options);

  static ScriptedScorer Load(const std::string& path, std::size_t row_size, Options options);
  static ScriptedScorer Parse(std::istream& in, std::size_t row_size, Options options,
                              const std::string& source_name = "<stream>");

  // Throws kDuplicateKey if the key is already scripted.
  void Add(const ScorerRequest& key, const SparseRow& row);

  PosteriorRow NextPosterior(const ScorerRequest& req) override;

  std::size_t rows() const { return table_.size(); }

 private:
  static std::string Key(std::string_view segment, Direction dir,
                         const std::vector<TokenId>& prefix);

  std::size_t row_size_;
  Options options_;
  std::map<std::string, PosteriorRow> table_;
  std::set<std::string, std::less<>> segments_;
};

}  // namespace lsalign
