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

#include <span>
#include <vector>

#include "lsalign/aligner.hpp"
#include "lsalign/core.hpp"

namespace lsalign {

// Reference path: recordings one after another.
std::vector<AlignmentResult> AlignCorpusSerial(std::span<const Recording> recordings,
                                               const Vocabulary& vocab, Scorer& fwt, Scorer& bwt,
                                               const AlignerConfig& config);

// One OpenMP task per recording, up to `jobs` threads. Results come back in
// input order whatever the completion order; the first failure (in input
// order) is rethrown after all workers finish.
std::vector<AlignmentResult> AlignCorpus(std::span<const Recording> recordings,
                                         const Vocabulary& vocab, Scorer& fwt, Scorer& bwt,
                                         const AlignerConfig& config, int jobs);

}  // namespace lsalign
