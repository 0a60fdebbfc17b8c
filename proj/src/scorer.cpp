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

#include "lsalign/scorer.hpp"

#include <algorithm>
#include <cmath>

namespace lsalign {

std::string_view DirectionName(Direction d) {
  return d == Direction::kForward ? "forward" : "backward";
}

Direction ParseDirection(std::string_view name) {
  if (name == "forward") return Direction::kForward;
  if (name == "backward") return Direction::kBackward;
  Throw(ErrorKind::kProtocol, "unknown direction '" + std::string(name) + "'");
}

double PosteriorRow::MaxTokenMass() const {
  if (probs_.size() < 2) return 0.0;
  return *std::max_element(probs_.begin() + 1, probs_.end());
}

void ValidateRow(const PosteriorRow& row, std::size_t row_size) {
  if (row.size() != row_size) {
    Throw(ErrorKind::kProtocol, "row has " + std::to_string(row.size()) +
                                    " entries, expected " + std::to_string(row_size));
  }
  double sum = 0.0;
  for (double p : row.probs()) {
    if (!(p >= 0.0 && p <= 1.0)) {
      Throw(ErrorKind::kProtocol, "row probability " + std::to_string(p) + " outside [0,1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kRowSumTolerance) {
    Throw(ErrorKind::kProtocol, "row sums to " + std::to_string(sum));
  }
}

PosteriorRow ExpandRow(const SparseRow& sparse, std::size_t row_size, bool require_eos) {
  std::vector<double> probs(row_size, 0.0);
  std::vector<bool> listed(row_size, false);
  std::size_t n_listed = 0;
  for (const auto& [id, p] : sparse.entries) {
    if (id < 0 || static_cast<std::size_t>(id) >= row_size) {
      Throw(ErrorKind::kProtocol, "row entry id " + std::to_string(id) + " outside vocabulary");
    }
    auto idx = static_cast<std::size_t>(id);
    if (listed[idx]) Throw(ErrorKind::kProtocol, "row lists id " + std::to_string(id) + " twice");
    listed[idx] = true;
    probs[idx] = p;
    ++n_listed;
  }
  if (require_eos && !listed[0]) Throw(ErrorKind::kProtocol, "row is missing the eos entry");
  if (!(sparse.other_mass >= 0.0)) Throw(ErrorKind::kProtocol, "negative other_mass");
  const std::size_t n_other = row_size - n_listed;
  if (n_other > 0) {
    const double each = sparse.other_mass / static_cast<double>(n_other);
    for (std::size_t i = 0; i < row_size; ++i) {
      if (!listed[i]) probs[i] = each;
    }
  } else if (sparse.other_mass > kRowSumTolerance) {
    Throw(ErrorKind::kProtocol, "other_mass given but every id is listed");
  }
  PosteriorRow row(std::move(probs));
  ValidateRow(row, row_size);
  return row;
}

PosteriorRow QueryChecked(Scorer& scorer, const ScorerRequest& req, std::size_t row_size) {
  PosteriorRow row = scorer.NextPosterior(req);
  ValidateRow(row, row_size);
  return row;
}

PosteriorRow SerializedScorer::NextPosterior(const ScorerRequest& req) {
  std::lock_guard<std::mutex> lock(mu_);
  return inner_->NextPosterior(req);
}

}  // namespace lsalign
