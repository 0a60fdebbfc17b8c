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

#include "lsalign/corpus_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lsalign/hash.hpp"

namespace lsalign {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string::npos ? pos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::ifstream OpenIn(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Throw(ErrorKind::kIo, "cannot open " + path);
  return in;
}

std::ofstream OpenOut(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Throw(ErrorKind::kIo, "cannot write " + path);
  return out;
}

void CloseOut(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) Throw(ErrorKind::kIo, "write failed for " + path);
}

// getline that strips a trailing '\r'.
bool NextLine(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

[[noreturn]] void ParseFail(const std::string& source, std::size_t line_no, const std::string& what) {
  Throw(ErrorKind::kParse, source + ":" + std::to_string(line_no) + ": " + what);
}

double ParseDouble(const std::string& s, const std::string& source, std::size_t line_no) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    ParseFail(source, line_no, "bad number '" + s + "'");
  }
  return v;
}

Position ParsePosition(const std::string& s, const std::string& source, std::size_t line_no) {
  Position v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    ParseFail(source, line_no, "bad position '" + s + "'");
  }
  return v;
}

std::string FormatSeconds(double s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", s);
  return buf;
}

}  // namespace

std::vector<Segment> ParseSegments(std::istream& in, const std::string& source) {
  std::vector<Segment> segments;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (NextLine(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto cols = SplitTabs(line);
    if (cols.size() != 4) ParseFail(source, line_no, "expected 4 tab-separated columns");
    if (cols[0].empty() || cols[1].empty()) ParseFail(source, line_no, "empty id");
    Segment seg{cols[0], cols[1], ParseDouble(cols[2], source, line_no),
                ParseDouble(cols[3], source, line_no)};
    if (!(seg.end_sec > seg.start_sec) || seg.start_sec < 0.0) {
      Throw(ErrorKind::kValidation, source + ":" + std::to_string(line_no) + ": segment " +
                                        seg.segment_id + " needs 0 <= start < end");
    }
    if (!ids.insert(seg.segment_id).second) {
      Throw(ErrorKind::kValidation, source + ":" + std::to_string(line_no) +
                                        ": duplicate segment id " + seg.segment_id);
    }
    segments.push_back(std::move(seg));
  }
  std::stable_sort(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) {
    if (a.recording_id != b.recording_id) return a.recording_id < b.recording_id;
    return a.start_sec < b.start_sec;
  });
  for (std::size_t i = 0; i < segments.size();) {
    std::size_t j = i;
    while (j < segments.size() && segments[j].recording_id == segments[i].recording_id) ++j;
    ValidateRecordingSegments(std::span<const Segment>(segments).subspan(i, j - i));
    i = j;
  }
  return segments;
}

std::vector<Segment> ParseSegmentsFile(const std::string& path) {
  auto in = OpenIn(path);
  return ParseSegments(in, path);
}

void WriteSegmentsFile(std::span<const Segment> segments, const std::string& path) {
  auto out = OpenOut(path);
  for (const auto& s : segments) {
    out << s.segment_id << '\t' << s.recording_id << '\t' << FormatSeconds(s.start_sec) << '\t'
        << FormatSeconds(s.end_sec) << '\n';
  }
  CloseOut(out, path);
}

namespace {

std::map<std::string, std::string> ReadKeyedText(const std::string& path) {
  auto in = OpenIn(path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (NextLine(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) ParseFail(path, line_no, "expected '<id><TAB><text>'");
    auto key = line.substr(0, tab);
    if (!out.emplace(key, line.substr(tab + 1)).second) {
      Throw(ErrorKind::kValidation, path + ":" + std::to_string(line_no) + ": duplicate id " + key);
    }
  }
  return out;
}

}  // namespace

std::map<std::string, std::string> ReadTranscripts(const std::string& path) {
  return ReadKeyedText(path);
}

std::map<std::string, std::string> ReadSegmentTexts(const std::string& path) {
  return ReadKeyedText(path);
}

void WriteTranscripts(const std::map<std::string, std::string>& texts, const std::string& path) {
  auto out = OpenOut(path);
  for (const auto& [id, text] : texts) out << id << '\t' << text << '\n';
  CloseOut(out, path);
}

Vocabulary ReadVocabFile(const std::string& path) {
  auto in = OpenIn(path);
  std::vector<std::string> tokens;
  std::string line;
  while (NextLine(in, line)) tokens.push_back(line);
  try {
    return Vocabulary::FromTokens(tokens);
  } catch (const Error& e) {
    Throw(ErrorKind::kValidation, path + ": " + e.what());
  }
}

void WriteVocabFile(const Vocabulary& vocab, const std::string& path) {
  auto out = OpenOut(path);
  for (const auto& t : vocab.tokens()) out << t << '\n';
  CloseOut(out, path);
}

std::string SimConfigJson(const SimConfig& c) {
  json j = {{"n_recordings", c.n_recordings},
            {"tokens_min", c.tokens_min},
            {"tokens_max", c.tokens_max},
            {"utterances_min", c.utterances_min},
            {"utterances_max", c.utterances_max},
            {"vocab_size", c.vocab_size},
            {"filler_segment_prob", c.filler_segment_prob},
            {"eps_eos_miss", c.eps_eos_miss},
            {"eps_eos_false", c.eps_eos_false},
            {"concentration", c.concentration},
            {"seed", c.seed}};
  return j.dump();
}

namespace {

SimConfig SimConfigFromJson(const json& j) {
  SimConfig c;
  c.n_recordings = j.at("n_recordings").get<int>();
  c.tokens_min = j.at("tokens_min").get<int>();
  c.tokens_max = j.at("tokens_max").get<int>();
  c.utterances_min = j.at("utterances_min").get<int>();
  c.utterances_max = j.at("utterances_max").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.filler_segment_prob = j.at("filler_segment_prob").get<double>();
  c.eps_eos_miss = j.at("eps_eos_miss").get<double>();
  c.eps_eos_false = j.at("eps_eos_false").get<double>();
  c.concentration = j.at("concentration").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.Validate();
  return c;
}

}  // namespace

TruthFile ReadTruthFile(const std::string& path) {
  auto in = OpenIn(path);
  TruthFile out;
  try {
    json j = json::parse(in);
    for (const auto& [id, v] : j.at("segments").items()) {
      if (v.is_null()) {
        out.truth[id] = std::nullopt;
      } else {
        if (!v.is_array() || v.size() != 2) Throw(ErrorKind::kParse, "span of " + id + " must be [l_s, l_e]");
        out.truth[id] = Span{v[0].get<Position>(), v[1].get<Position>()};
      }
    }
    if (j.contains("sim_config") && !j["sim_config"].is_null()) {
      out.sim_config = SimConfigFromJson(j["sim_config"]);
    }
  } catch (const json::exception& e) {
    Throw(ErrorKind::kParse, path + ": " + e.what());
  }
  return out;
}

void WriteTruthFile(const TruthMap& truth, const std::optional<SimConfig>& config,
                    const std::string& path) {
  json segs = json::object();
  for (const auto& [id, span] : truth) {
    segs[id] = span ? json::array({span->l_s, span->l_e}) : json(nullptr);
  }
  json j = {{"segments", segs},
            {"sim_config", config ? json::parse(SimConfigJson(*config)) : json(nullptr)}};
  auto out = OpenOut(path);
  out << j.dump(1) << '\n';
  CloseOut(out, path);
}

std::vector<Recording> BuildRecordings(std::span<const Segment> segments,
                                       const std::map<std::string, std::string>& transcripts,
                                       Vocabulary& vocab, bool vocab_fixed,
                                       const TranscriptOptions& options) {
  std::map<std::string, std::vector<Segment>> by_rec;
  for (const auto& s : segments) by_rec[s.recording_id].push_back(s);
  std::vector<Recording> out;
  for (auto& [id, segs] : by_rec) {
    auto it = transcripts.find(id);
    if (it == transcripts.end()) {
      Throw(ErrorKind::kValidation, "no transcript for recording " + id);
    }
    std::sort(segs.begin(), segs.end(),
              [](const Segment& a, const Segment& b) { return a.start_sec < b.start_sec; });
    ValidateRecordingSegments(segs);
    const std::string text = StripChars(it->second, options.strip_chars);
    Recording rec;
    rec.id = id;
    rec.segments = std::move(segs);
    try {
      rec.transcript = vocab_fixed ? TokenizeFixed(text, options.mode, vocab)
                                   : Tokenize(text, options.mode, vocab);
    } catch (const Error& e) {
      throw Error(e.kind(), "recording " + id + ": " + e.what());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void WriteCorpusDir(const Corpus& corpus, const std::string& dir) {
  fs::create_directories(dir);
  std::vector<Segment> segments;
  std::map<std::string, std::string> texts;
  for (const auto& rec : corpus.recordings) {
    segments.insert(segments.end(), rec.segments.begin(), rec.segments.end());
    texts[rec.id] = Detokenize(rec.transcript.ids, rec.transcript.mode, corpus.vocab);
  }
  WriteSegmentsFile(segments, (fs::path(dir) / "segments.tsv").string());
  WriteTranscripts(texts, (fs::path(dir) / "text.tsv").string());
  WriteVocabFile(corpus.vocab, (fs::path(dir) / "vocab.txt").string());
  WriteTruthFile(corpus.truth, corpus.config, (fs::path(dir) / "truth.json").string());
}

Corpus ReadCorpusDir(const std::string& dir) {
  Corpus corpus;
  corpus.vocab = ReadVocabFile((fs::path(dir) / "vocab.txt").string());
  auto segments = ParseSegmentsFile((fs::path(dir) / "segments.tsv").string());
  auto texts = ReadTranscripts((fs::path(dir) / "text.tsv").string());
  auto truth = ReadTruthFile((fs::path(dir) / "truth.json").string());
  if (!truth.sim_config) Throw(ErrorKind::kValidation, dir + "/truth.json has no sim_config");
  corpus.config = *truth.sim_config;
  corpus.truth = std::move(truth.truth);
  corpus.recordings = BuildRecordings(segments, texts, corpus.vocab, /*vocab_fixed=*/true,
                                      TranscriptOptions{TokenMode::kChar, ""});
  return corpus;
}

std::string FormatConfidence(double c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", c);
  return buf;
}

namespace {

constexpr const char* kAlignedHeader = "segment_id\tl_s\tl_e\tconfidence\ttext";
constexpr const char* kRejectedHeader = "segment_id\trecording_id\treason\tcandidates";

std::string FormatCandidates(const std::vector<CandidateResult>& cands) {
  if (cands.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto& c = cands[i];
    if (i) out += ',';
    out += std::to_string(c.l_start) + ':' + (c.empty_span ? std::string("_") : std::to_string(c.l_s)) +
           '-' + std::to_string(c.l_e) + ':' + FormatConfidence(c.confidence);
    if (c.capped) out += ":capped";
  }
  return out;
}

std::vector<CandidateResult> ParseCandidates(const std::string& text, const std::string& source,
                                             std::size_t line_no) {
  std::vector<CandidateResult> out;
  if (text == "-") return out;
  std::istringstream items(text);
  std::string item;
  while (std::getline(items, item, ',')) {
    std::vector<std::string> parts;
    std::istringstream fields(item);
    std::string f;
    while (std::getline(fields, f, ':')) parts.push_back(f);
    if (parts.size() < 3 || parts.size() > 4 || (parts.size() == 4 && parts[3] != "capped")) {
      ParseFail(source, line_no, "bad candidate '" + item + "'");
    }
    CandidateResult c;
    c.l_start = ParsePosition(parts[0], source, line_no);
    auto dash = parts[1].find('-');
    if (dash == std::string::npos) ParseFail(source, line_no, "bad candidate span '" + parts[1] + "'");
    const auto first = parts[1].substr(0, dash);
    c.empty_span = first == "_";
    c.l_s = c.empty_span ? 0 : ParsePosition(first, source, line_no);
    c.l_e = ParsePosition(parts[1].substr(dash + 1), source, line_no);
    c.confidence = ParseDouble(parts[2], source, line_no);
    c.capped = parts.size() == 4;
    out.push_back(c);
  }
  return out;
}

}  // namespace

void WriteAlignmentOutput(std::span<const AlignmentResult> results, const ReportContext& context,
                          const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) Throw(ErrorKind::kIo, "cannot create " + dir + ": " + ec.message());

  const auto aligned_path = (fs::path(dir) / "aligned.tsv").string();
  const auto rejected_path = (fs::path(dir) / "rejected.tsv").string();
  const auto report_path = (fs::path(dir) / "report.json").string();

  auto aligned = OpenOut(aligned_path);
  auto rejected = OpenOut(rejected_path);
  aligned << kAlignedHeader << '\n';
  rejected << kRejectedHeader << '\n';

  std::int64_t n_accepted = 0;
  std::int64_t n_rejected = 0;
  bool partial = false;
  std::string all_traces;
  json recs = json::array();
  for (const auto& r : results) {
    for (const auto& p : r.accepted) {
      aligned << p.segment_id << '\t' << p.span.l_s << '\t' << p.span.l_e << '\t'
              << FormatConfidence(p.confidence) << '\t' << p.text << '\n';
    }
    for (const auto& rej : r.rejected) {
      rejected << rej.segment_id << '\t' << r.recording_id << '\t' << RejectReasonName(rej.reason)
               << '\t' << FormatCandidates(rej.candidates) << '\n';
    }
    n_accepted += static_cast<std::int64_t>(r.accepted.size());
    n_rejected += static_cast<std::int64_t>(r.rejected.size());
    partial = partial || r.partial;
    for (const auto& line : r.trace) {
      all_traces += r.recording_id;
      all_traces += ' ';
      all_traces += line;
      all_traces += '\n';
    }
    recs.push_back({{"id", r.recording_id},
                    {"transcript_length", r.transcript_length},
                    {"accepted", r.accepted.size()},
                    {"rejected", r.rejected.size()},
                    {"final_queue", r.final_queue},
                    {"partial", r.partial},
                    {"nrr", Nrr(r)},
                    {"trace_sha256", r.TraceDigest()}});
  }
  CloseOut(aligned, aligned_path);
  CloseOut(rejected, rejected_path);

  json report;
  report["config"] = {{"theta", context.config.theta},
                      {"max_token_rate", context.config.max_token_rate},
                      {"eos_rule", context.config.eos_rule.ToString()},
                      {"dedup_queue", context.config.dedup_queue},
                      {"queue_cap", context.config.queue_cap}};
  report["inputs"] = context.inputs;
  report["recordings"] = recs;
  report["accepted_segments"] = n_accepted;
  report["rejected_segments"] = n_rejected;
  report["partial"] = partial;
  report["nrr"] = Nrr(results);
  report["trace_sha256"] = Sha256Hex(all_traces);
  if (context.eval) {
    report["cer_non_rejected"] = context.eval->cer_non_rejected;
    report["cer_with_rejected_as_deletions"] = context.eval->cer_with_rejected_as_deletions;
    report["span_exact_match"] = context.eval->span_exact_match
                                     ? json(*context.eval->span_exact_match)
                                     : json(nullptr);
    report["fillers_rejected"] = context.eval->fillers_rejected;
    report["fillers"] = context.eval->fillers;
  }
  auto out = OpenOut(report_path);
  out << report.dump(2) << '\n';
  CloseOut(out, report_path);
}

std::vector<AlignmentResult> ReadAlignmentOutput(const std::string& dir,
                                                 std::span<const Recording> recordings) {
  std::map<std::string, std::size_t> rec_of_segment;
  std::map<std::string, std::size_t> rec_index;
  std::vector<AlignmentResult> out(recordings.size());
  for (std::size_t i = 0; i < recordings.size(); ++i) {
    out[i].recording_id = recordings[i].id;
    out[i].transcript_length = recordings[i].transcript.size();
    rec_index[recordings[i].id] = i;
    for (const auto& s : recordings[i].segments) rec_of_segment[s.segment_id] = i;
  }

  const auto aligned_path = (fs::path(dir) / "aligned.tsv").string();
  {
    auto in = OpenIn(aligned_path);
    std::string line;
    std::size_t line_no = 0;
    while (NextLine(in, line)) {
      ++line_no;
      if (line_no == 1) {
        if (line != kAlignedHeader) ParseFail(aligned_path, 1, "unexpected header");
        continue;
      }
      if (line.empty()) continue;
      auto cols = SplitTabs(line);
      if (cols.size() != 5) ParseFail(aligned_path, line_no, "expected 5 columns");
      auto it = rec_of_segment.find(cols[0]);
      if (it == rec_of_segment.end()) ParseFail(aligned_path, line_no, "unknown segment " + cols[0]);
      out[it->second].accepted.push_back(
          {cols[0],
           Span{ParsePosition(cols[1], aligned_path, line_no), ParsePosition(cols[2], aligned_path, line_no)},
           ParseDouble(cols[3], aligned_path, line_no),
           cols[4]});
    }
  }

  const auto rejected_path = (fs::path(dir) / "rejected.tsv").string();
  {
    auto in = OpenIn(rejected_path);
    std::string line;
    std::size_t line_no = 0;
    while (NextLine(in, line)) {
      ++line_no;
      if (line_no == 1) {
        if (line != kRejectedHeader) ParseFail(rejected_path, 1, "unexpected header");
        continue;
      }
      if (line.empty()) continue;
      auto cols = SplitTabs(line);
      if (cols.size() != 4) ParseFail(rejected_path, line_no, "expected 4 columns");
      auto it = rec_index.find(cols[1]);
      if (it == rec_index.end()) ParseFail(rejected_path, line_no, "unknown recording " + cols[1]);
      RejectReason reason;
      try {
        reason = ParseRejectReason(cols[2]);
      } catch (const Error&) {
        ParseFail(rejected_path, line_no, "unknown reason " + cols[2]);
      }
      out[it->second].rejected.push_back(
          {cols[0], reason, ParseCandidates(cols[3], rejected_path, line_no)});
    }
  }

  const auto report_path = (fs::path(dir) / "report.json").string();
  auto in = OpenIn(report_path);
  try {
    json report = json::parse(in);
    for (const auto& r : report.at("recordings")) {
      auto it = rec_index.find(r.at("id").get<std::string>());
      if (it == rec_index.end()) continue;
      auto& res = out[it->second];
      res.final_queue = r.at("final_queue").get<std::vector<Position>>();
      res.partial = r.at("partial").get<bool>();
    }
  } catch (const json::exception& e) {
    Throw(ErrorKind::kParse, report_path + ": " + e.what());
  }
  return out;
}

}  // namespace lsalign
