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

// Posterior-provider contract shared by the forward and backward scorers.

#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lsalign/core.hpp"

namespace lsalign {

enum class Direction { kForward, kBackward };

std::string_view DirectionName(Direction d);
Direction ParseDirection(std::string_view name);

inline constexpr double kRowSumTolerance = 1e-6;

// Next-token distribution over eos (index 0) and tokens 1..V.
class PosteriorRow {
 public:
  PosteriorRow() = default;
  explicit PosteriorRow(std::vector<double> probs) : probs_(std::move(probs)) {}

  double eos() const { return probs_.at(0); }
  double mass(TokenId id) const { return probs_.at(static_cast<std::size_t>(id)); }
  // Largest probability over transcript tokens (excludes eos).
  double MaxTokenMass() const;
  std::size_t size() const { return probs_.size(); }
  const std::vector<double>& probs() const { return probs_; }

  friend bool operator==(const PosteriorRow&, const PosteriorRow&) = default;

 private:
  std::vector<double> probs_;
};

// Throws kProtocol unless the row has `row_size` entries, each in [0,1],
// summing to 1 within kRowSumTolerance.
void ValidateRow(const PosteriorRow& row, std::size_t row_size);

// Wire-level row: explicit entries plus mass spread uniformly over the
// unlisted ids.
struct SparseRow {
  std::vector<std::pair<TokenId, double>> entries;
  double other_mass = 0.0;
};

// Expands to a dense row and validates it. With `require_eos`, a row that
// does not list eos explicitly is a protocol error.
PosteriorRow ExpandRow(const SparseRow& sparse, std::size_t row_size, bool require_eos);

struct ScorerRequest {
  std::string segment_id;
  Direction direction = Direction::kForward;
  // Teacher-forced tokens in consumption order. Backward prefixes start at
  // the highest position.
  std::vector<TokenId> prefix;
  // Transcript position of the first token the scan consumes (l_start
  // forward, l_e backward); 0 when unknown. Only position-aware scorers
  // such as the simulator oracle read it.
  Position anchor = 0;

  friend bool operator==(const ScorerRequest&, const ScorerRequest&) = default;
};

class Scorer {
 public:
  virtual ~Scorer() = default;

  // Row for the token following `req.prefix`. Implementations must be
  // deterministic for identical requests and safe to call concurrently
  // unless serial() is true.
  virtual PosteriorRow NextPosterior(const ScorerRequest& req) = 0;

  virtual bool serial() const { return false; }
};

// Queries `scorer` and checks the row against the contract instead of
// trusting it.
PosteriorRow QueryChecked(Scorer& scorer, const ScorerRequest& req, std::size_t row_size);

// Funnels every call through one mutex; used for scorers that declare
// themselves serial.
class SerializedScorer final : public Scorer {
 public:
  explicit SerializedScorer(std::unique_ptr<Scorer> inner) : inner_(std::move(inner)) {}
  PosteriorRow NextPosterior(const ScorerRequest& req) override;
  bool serial() const override { return true; }

 private:
  std::unique_ptr<Scorer> inner_;
  std::mutex mu_;
};

}  // namespace lsalign
