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

// Text file formats read and written by the command-line tool.
//
//   segments.tsv  segment_id <TAB> recording_id <TAB> start_sec <TAB> end_sec
//   text.tsv      recording_id <TAB> transcript text
//   vocab.txt     one token per line, id = line number
//   truth.json    {"sim_config": {...}, "segments": {"<id>": [l_s, l_e] | null}}
//   aligned.tsv   segment_id  l_s  l_e  confidence  text
//   rejected.tsv  segment_id  recording_id  reason  candidates
//   report.json   run summary

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lsalign/aligner.hpp"
#include "lsalign/core.hpp"
#include "lsalign/metrics.hpp"
#include "lsalign/simulator.hpp"

namespace lsalign {

// Segments grouped by recording id (ascending) and sorted by start time
// within a recording; per-recording invariants validated. Malformed lines
// throw kParse with the line number; overlaps and duplicate ids throw
// kValidation.
std::vector<Segment> ParseSegmentsFile(const std::string& path);
std::vector<Segment> ParseSegments(std::istream& in, const std::string& source_name);
void WriteSegmentsFile(std::span<const Segment> segments, const std::string& path);

std::map<std::string, std::string> ReadTranscripts(const std::string& path);
void WriteTranscripts(const std::map<std::string, std::string>& texts, const std::string& path);

// segment_id <TAB> reference text, for evaluation without span truth.
std::map<std::string, std::string> ReadSegmentTexts(const std::string& path);

Vocabulary ReadVocabFile(const std::string& path);
void WriteVocabFile(const Vocabulary& vocab, const std::string& path);

struct TruthFile {
  TruthMap truth;
  std::optional<SimConfig> sim_config;
};
TruthFile ReadTruthFile(const std::string& path);
void WriteTruthFile(const TruthMap& truth, const std::optional<SimConfig>& config,
                    const std::string& path);

struct TranscriptOptions {
  TokenMode mode = TokenMode::kChar;
  std::string strip_chars;
};

// Joins segments with transcripts into recordings ordered by id. With a
// fixed vocabulary unknown tokens are an error; otherwise the vocabulary
// grows in first-appearance order (recordings in id order).
std::vector<Recording> BuildRecordings(std::span<const Segment> segments,
                                       const std::map<std::string, std::string>& transcripts,
                                       Vocabulary& vocab, bool vocab_fixed,
                                       const TranscriptOptions& options);

// Simulator output directory: segments.tsv, text.tsv, vocab.txt, truth.json.
void WriteCorpusDir(const Corpus& corpus, const std::string& dir);
Corpus ReadCorpusDir(const std::string& dir);

std::string SimConfigJson(const SimConfig& config);

// Extra material echoed into report.json.
struct ReportContext {
  AlignerConfig config;
  std::map<std::string, std::string> inputs;  // echoed verbatim
  std::optional<EvalReport> eval;
};

std::string FormatConfidence(double c);  // four decimals

// Writes aligned.tsv, rejected.tsv and report.json into `dir` (created if
// needed). Byte-identical for identical inputs.
void WriteAlignmentOutput(std::span<const AlignmentResult> results, const ReportContext& context,
                          const std::string& dir);

// Parses aligned.tsv / rejected.tsv / report.json back. Confidences come
// back rounded to four decimals and traces are empty.
std::vector<AlignmentResult> ReadAlignmentOutput(const std::string& dir,
                                                 std::span<const Recording> recordings);

}  // namespace lsalign
