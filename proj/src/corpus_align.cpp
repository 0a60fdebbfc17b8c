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

#include "lsalign/corpus_align.hpp"

#include <omp.h>

#include <exception>

namespace lsalign {

std::vector<AlignmentResult> AlignCorpusSerial(std::span<const Recording> recordings,
                                               const Vocabulary& vocab, Scorer& fwt, Scorer& bwt,
                                               const AlignerConfig& config) {
  std::vector<AlignmentResult> results;
  results.reserve(recordings.size());
  for (const auto& rec : recordings) {
    results.push_back(AlignRecording(rec.segments, rec.transcript, vocab, fwt, bwt, config));
    results.back().recording_id = rec.id;
  }
  return results;
}

std::vector<AlignmentResult> AlignCorpus(std::span<const Recording> recordings,
                                         const Vocabulary& vocab, Scorer& fwt, Scorer& bwt,
                                         const AlignerConfig& config, int jobs) {
  if (jobs <= 1 || recordings.size() < 2) {
    return AlignCorpusSerial(recordings, vocab, fwt, bwt, config);
  }
  const auto n = static_cast<std::ptrdiff_t>(recordings.size());
  std::vector<AlignmentResult> results(recordings.size());
  std::vector<std::exception_ptr> errors(recordings.size());

#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& rec = recordings[static_cast<std::size_t>(i)];
    try {
      auto r = AlignRecording(rec.segments, rec.transcript, vocab, fwt, bwt, config);
      r.recording_id = rec.id;
      results[static_cast<std::size_t>(i)] = std::move(r);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace lsalign
