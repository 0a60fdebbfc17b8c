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

// lsalign: label-synchronous speech-to-text alignment.
//
//   lsalign align         align pre-split segments to un-aligned transcripts
//   lsalign ctc-align     frame-synchronous CTC trellis baseline
//   lsalign simulate      write a synthetic corpus with ground truth
//   lsalign evaluate      score an alignment output directory
//   lsalign serve-oracle  expose the simulator oracle over the scorer protocol

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "lsalign/aligner.hpp"
#include "lsalign/corpus_align.hpp"
#include "lsalign/corpus_io.hpp"
#include "lsalign/ctcseg.hpp"
#include "lsalign/metrics.hpp"
#include "lsalign/remote_scorer.hpp"
#include "lsalign/scripted_scorer.hpp"
#include "lsalign/simulator.hpp"
#include "lsalign/wire.hpp"

namespace {

using namespace lsalign;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitValidation = 2;
constexpr int kExitScorer = 3;
constexpr int kExitPartial = 4;

void SetupLogging(const std::string& level_flag) {
  auto logger = spdlog::stderr_logger_mt("lsalign");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  std::string level = level_flag;
  if (level.empty()) {
    const char* env = std::getenv("LSALIGN_LOG");
    level = env != nullptr ? env : "warn";
  }
  spdlog::set_level(spdlog::level::from_str(level));
}

struct ScorerFlags {
  bool scripted_strict = true;
  std::string scripted_default;
  double timeout_sec = 30.0;
  int jobs = 1;
};

std::unique_ptr<Scorer> MakeScorer(const std::string& spec, Direction direction,
                                   const Vocabulary& vocab, const ScorerFlags& flags) {
  auto colon = spec.find(':');
  if (colon == std::string::npos) {
    Throw(ErrorKind::kValidation, "scorer spec must be oracle:, scripted:, tcp: or exec:, got '" + spec + "'");
  }
  const std::string kind = spec.substr(0, colon);
  const std::string arg = spec.substr(colon + 1);

  if (kind == "oracle") {
    auto corpus = std::make_shared<const Corpus>(ReadCorpusDir(arg));
    if (corpus->vocab.Digest() != vocab.Digest()) {
      Throw(ErrorKind::kIncompatibleScorer, "oracle corpus vocabulary differs from the input vocabulary");
    }
    return std::make_unique<OracleScorer>(corpus);
  }
  if (kind == "scripted") {
    ScriptedScorer::Options opts;
    opts.strict = flags.scripted_strict;
    if (!flags.scripted_default.empty()) opts.default_row = ParseRowEntries(flags.scripted_default);
    return std::make_unique<ScriptedScorer>(ScriptedScorer::Load(arg, vocab.row_size(), opts));
  }
  RemoteScorer::Options ropts;
  ropts.timeout = std::chrono::milliseconds(static_cast<long long>(flags.timeout_sec * 1000));
  ropts.max_connections = static_cast<std::size_t>(std::max(1, flags.jobs));
  if (kind == "tcp") {
    auto last = arg.rfind(':');
    if (last == std::string::npos) Throw(ErrorKind::kValidation, "tcp scorer needs host:port");
    const std::string host = arg.substr(0, last);
    const int port = std::stoi(arg.substr(last + 1));
    return std::make_unique<RemoteScorer>([host, port] { return MakeTcpConnection(host, port); },
                                          direction, vocab.Digest(), vocab.row_size(), ropts);
  }
  if (kind == "exec") {
    return std::make_unique<RemoteScorer>([arg] { return MakeProcessConnection(arg); }, direction,
                                          vocab.Digest(), vocab.row_size(), ropts);
  }
  Throw(ErrorKind::kValidation, "unknown scorer kind '" + kind + "'");
}

// ---------------------------------------------------------------------------

struct AlignArgs {
  std::string segments;
  std::string transcript;
  std::string vocab;
  std::string fwt;
  std::string bwt;
  std::string out;
  std::string truth;
  std::string eos_rule = "argmax";
  std::string token_mode = "char";
  std::string strip_chars;
  double theta = kDefaultTheta;
  double max_token_rate = kDefaultMaxTokenRate;
  std::size_t queue_cap = kDefaultQueueCap;
  bool no_dedup = false;
  ScorerFlags scorer;
};

int RunAlign(const AlignArgs& a) {
  AlignerConfig config;
  config.theta = a.theta;
  config.max_token_rate = a.max_token_rate;
  config.eos_rule = EosRule::Parse(a.eos_rule);
  config.dedup_queue = !a.no_dedup;
  config.queue_cap = a.queue_cap;
  config.Validate();

  TranscriptOptions topts{ParseTokenMode(a.token_mode), a.strip_chars};
  Vocabulary vocab;
  const bool fixed = !a.vocab.empty();
  if (fixed) vocab = ReadVocabFile(a.vocab);
  const auto segments = ParseSegmentsFile(a.segments);
  const auto recordings = BuildRecordings(segments, ReadTranscripts(a.transcript), vocab, fixed, topts);
  spdlog::info("{} recordings, {} segments, vocabulary {}", recordings.size(), segments.size(),
               vocab.size());

  auto fwt = MakeScorer(a.fwt, Direction::kForward, vocab, a.scorer);
  auto bwt = MakeScorer(a.bwt, Direction::kBackward, vocab, a.scorer);
  // A serial remote scorer keeps a single connection; workers queue on it.
  if (fwt->serial() || bwt->serial()) spdlog::info("scorer declared serial");
  const auto results = AlignCorpus(recordings, vocab, *fwt, *bwt, config, a.scorer.jobs);
  for (std::size_t i = 0; i < results.size(); ++i) {
    CheckResultInvariants(results[i], recordings[i].segments, config);
  }

  ReportContext ctx;
  ctx.config = config;
  ctx.inputs = {{"token_mode", a.token_mode}, {"strip_chars", a.strip_chars}};
  if (!a.truth.empty()) {
    ctx.eval = Evaluate(results, recordings, ReadTruthFile(a.truth).truth);
  }
  WriteAlignmentOutput(results, ctx, a.out);

  bool partial = false;
  for (const auto& r : results) partial = partial || r.partial;
  spdlog::info("nrr {:.4f}; wrote {}", Nrr(results), a.out);
  if (partial) {
    spdlog::warn("queue overflow: some recordings are only partially aligned");
    return kExitPartial;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CtcArgs {
  std::string posteriors;
  std::string text;
  std::string text_file;
  std::string vocab;
  std::string token_mode = "char";
  std::string out;
};

int RunCtcAlign(const CtcArgs& a) {
  const auto post = ReadFramePosteriors(a.posteriors);
  const Vocabulary vocab = ReadVocabFile(a.vocab);
  if (vocab.size() != post.vocab_size) {
    Throw(ErrorKind::kValidation, "vocabulary has " + std::to_string(vocab.size()) +
                                      " tokens but posteriors have " +
                                      std::to_string(post.vocab_size) + " columns before blank");
  }
  std::string text = a.text;
  if (!a.text_file.empty()) {
    std::ifstream in(a.text_file);
    if (!in) Throw(ErrorKind::kIo, "cannot open " + a.text_file);
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  const auto tokens = TokenizeFixed(text, ParseTokenMode(a.token_mode), vocab);
  const auto alignment = CtcAlign(post, tokens);

  std::ostringstream out;
  out << "position\ttoken\tstart_frame\tend_frame\tstart_sec\tend_sec\tscore\n";
  char buf[128];
  for (const auto& t : alignment.timings) {
    std::snprintf(buf, sizeof buf, "%zu\t%zu\t%.3f\t%.3f\t%.4f", t.start_frame, t.end_frame,
                  static_cast<double>(t.start_frame) * post.frame_shift_sec,
                  static_cast<double>(t.end_frame) * post.frame_shift_sec, t.score);
    out << t.position << '\t' << vocab.Token(tokens.at(t.position)) << '\t' << buf << '\n';
  }
  if (a.out.empty()) {
    std::cout << out.str();
  } else {
    std::ofstream f(a.out, std::ios::binary);
    if (!f) Throw(ErrorKind::kIo, "cannot write " + a.out);
    f << out.str();
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

int RunSimulate(const SimConfig& config, const std::string& out) {
  const Corpus corpus = GenerateCorpus(config);
  WriteCorpusDir(corpus, out);
  std::size_t n_segments = 0;
  for (const auto& r : corpus.recordings) n_segments += r.segments.size();
  spdlog::info("wrote {} recordings, {} segments to {}", corpus.recordings.size(), n_segments, out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string alignment;
  std::string corpus;
  std::string segments;
  std::string transcript;
  std::string vocab;
  std::string truth;
  std::string reference;
  std::string token_mode = "char";
  std::string strip_chars;
  std::string json_out;
  bool per_segment = false;
};

int RunEvaluate(EvalArgs a) {
  if (!a.corpus.empty()) {
    const fs::path dir(a.corpus);
    if (a.segments.empty()) a.segments = (dir / "segments.tsv").string();
    if (a.transcript.empty()) a.transcript = (dir / "text.tsv").string();
    if (a.vocab.empty()) a.vocab = (dir / "vocab.txt").string();
    if (a.truth.empty() && a.reference.empty()) a.truth = (dir / "truth.json").string();
  }
  if (a.segments.empty() || a.transcript.empty()) {
    Throw(ErrorKind::kValidation, "evaluate needs --corpus or --segments and --transcript");
  }
  if (a.truth.empty() == a.reference.empty()) {
    Throw(ErrorKind::kValidation, "evaluate needs exactly one of --truth or --reference");
  }
  TranscriptOptions topts{ParseTokenMode(a.token_mode), a.strip_chars};
  Vocabulary vocab;
  const bool fixed = !a.vocab.empty();
  if (fixed) vocab = ReadVocabFile(a.vocab);
  const auto segments = ParseSegmentsFile(a.segments);
  const auto recordings = BuildRecordings(segments, ReadTranscripts(a.transcript), vocab, fixed, topts);
  const auto results = ReadAlignmentOutput(a.alignment, recordings);

  EvalReport report;
  if (!a.truth.empty()) {
    report = Evaluate(results, recordings, ReadTruthFile(a.truth).truth);
  } else {
    ReferenceMap refs;
    for (const auto& [id, text] : ReadSegmentTexts(a.reference)) {
      refs[id] = TokenizeFixed(StripChars(text, a.strip_chars), topts.mode, vocab).ids;
    }
    report = EvaluateAgainstReference(results, recordings, refs);
  }
  std::cout << EvalReportTable(report);
  if (!a.json_out.empty()) {
    std::ofstream f(a.json_out, std::ios::binary);
    if (!f) Throw(ErrorKind::kIo, "cannot write " + a.json_out);
    f << EvalReportJson(report, a.per_segment);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ServeArgs {
  std::string corpus;
  std::string host = "127.0.0.1";
  int port = 0;
  bool stdio = false;
  bool serial = false;
};

int RunServeOracle(const ServeArgs& a) {
  auto corpus = std::make_shared<const Corpus>(ReadCorpusDir(a.corpus));
  auto oracle = std::make_shared<OracleScorer>(corpus);
  ScorerService service;
  service.vocab_sha256 = corpus->vocab.Digest();
  service.serial = a.serial;
  service.answer = [oracle](const ScorerRequest& req) { return oracle->SparseNext(req); };

  if (a.stdio) {
    LineChannel channel(STDIN_FILENO, STDOUT_FILENO, false);
    ServeConnection(channel, service);
    return kExitOk;
  }
  TcpListener listener(a.host, a.port);
  std::printf("listening %d\n", listener.port());
  std::fflush(stdout);
  spdlog::info("serving oracle for {} on {}:{}", a.corpus, a.host, listener.port());
  while (true) {
    auto channel = listener.Accept();
    std::thread([service, ch = std::shared_ptr<LineChannel>(std::move(channel))] {
      try {
        ServeConnection(*ch, service);
      } catch (const std::exception& e) {
        spdlog::warn("connection closed: {}", e.what());
      }
    }).detach();
  }
}

int ExitCodeFor(const Error& e) {
  if (e.IsScorerError()) return kExitScorer;
  switch (e.kind()) {
    case ErrorKind::kIo: return kExitFailure;
    default: return kExitValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-synchronous speech-to-text alignment"};
  app.require_subcommand(1);
  std::string log_level;
  app.set_config("--config", "", "key=value file, one [section] per subcommand; flags take precedence");
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off (default: $LSALIGN_LOG or warn)");

  // align
  AlignArgs align_args;
  auto* align = app.add_subcommand("align", "Align segments to transcripts with forward/backward scorers");
  align->add_option("--segments", align_args.segments, "segments TSV")->required()->check(CLI::ExistingFile);
  align->add_option("--transcript", align_args.transcript, "recording_id<TAB>text file")->required()->check(CLI::ExistingFile);
  align->add_option("--vocab", align_args.vocab, "fixed vocabulary, one token per line")->check(CLI::ExistingFile);
  align->add_option("--fwt", align_args.fwt, "forward scorer: oracle:DIR | scripted:FILE | tcp:HOST:PORT | exec:CMD")->required();
  align->add_option("--bwt", align_args.bwt, "backward scorer, same forms as --fwt")->required();
  align->add_option("--out", align_args.out, "output directory")->required();
  align->add_option("--truth", align_args.truth, "ground-truth JSON; adds CER fields to report.json")->check(CLI::ExistingFile);
  align->add_option("--theta", align_args.theta, "confidence threshold")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  align->add_option("--max-token-rate", align_args.max_token_rate, "scan cap in tokens per second")->check(CLI::PositiveNumber)->capture_default_str();
  align->add_option("--eos-rule", align_args.eos_rule, "argmax | threshold:P")->capture_default_str();
  align->add_flag("--no-dedup", align_args.no_dedup, "allow duplicate start positions in the queue");
  align->add_option("--queue-cap", align_args.queue_cap, "maximum start-position queue length")->check(CLI::PositiveNumber)->capture_default_str();
  align->add_option("--jobs", align_args.scorer.jobs, "recordings aligned in parallel")->check(CLI::PositiveNumber)->capture_default_str();
  align->add_option("--token-mode", align_args.token_mode, "char | whitespace")->check(CLI::IsMember({"char", "whitespace"}))->capture_default_str();
  align->add_option("--strip-chars", align_args.strip_chars, "characters removed from transcripts before tokenizing");
  align->add_option("--timeout", align_args.scorer.timeout_sec, "remote scorer reply timeout in seconds")->check(CLI::PositiveNumber)->capture_default_str();
  align->add_flag("!--scripted-lenient", align_args.scorer.scripted_strict, "answer unscripted keys with the default row");
  align->add_option("--scripted-default", align_args.scorer.scripted_default, "default row for lenient scripted scorers, e.g. eos:1.0");

  // ctc-align
  CtcArgs ctc_args;
  auto* ctc = app.add_subcommand("ctc-align", "Frame-level CTC trellis alignment of one transcript");
  ctc->add_option("--posteriors", ctc_args.posteriors, "CTCP1 binary or TSV posteriors")->required()->check(CLI::ExistingFile);
  ctc->add_option("--vocab", ctc_args.vocab, "vocabulary matching the posterior columns")->required()->check(CLI::ExistingFile);
  auto* text_opt = ctc->add_option("--text", ctc_args.text, "transcript text");
  ctc->add_option("--text-file", ctc_args.text_file, "transcript text file")->excludes(text_opt)->check(CLI::ExistingFile);
  ctc->add_option("--token-mode", ctc_args.token_mode, "char | whitespace")->check(CLI::IsMember({"char", "whitespace"}));
  ctc->add_option("--out", ctc_args.out, "output TSV (default stdout)");

  // simulate
  SimConfig sim;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic corpus with ground truth");
  simulate->add_option("--out", sim_out, "output directory")->required();
  simulate->add_option("--n-recordings", sim.n_recordings)->capture_default_str();
  simulate->add_option("--tokens-min", sim.tokens_min)->capture_default_str();
  simulate->add_option("--tokens-max", sim.tokens_max)->capture_default_str();
  simulate->add_option("--utterances-min", sim.utterances_min)->capture_default_str();
  simulate->add_option("--utterances-max", sim.utterances_max)->capture_default_str();
  simulate->add_option("--vocab-size", sim.vocab_size)->capture_default_str();
  simulate->add_option("--filler-prob", sim.filler_segment_prob)->capture_default_str();
  simulate->add_option("--eps-eos-miss", sim.eps_eos_miss)->capture_default_str();
  simulate->add_option("--eps-eos-false", sim.eps_eos_false)->capture_default_str();
  simulate->add_option("--concentration", sim.concentration)->capture_default_str();
  simulate->add_option("--seed", sim.seed)->capture_default_str();

  // evaluate
  EvalArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "Score an alignment output directory");
  evaluate->add_option("--alignment", eval_args.alignment, "directory written by align")->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--corpus", eval_args.corpus, "simulator corpus directory")->check(CLI::ExistingDirectory);
  evaluate->add_option("--segments", eval_args.segments)->check(CLI::ExistingFile);
  evaluate->add_option("--transcript", eval_args.transcript)->check(CLI::ExistingFile);
  evaluate->add_option("--vocab", eval_args.vocab)->check(CLI::ExistingFile);
  evaluate->add_option("--truth", eval_args.truth, "ground-truth span JSON")->check(CLI::ExistingFile);
  evaluate->add_option("--reference", eval_args.reference, "segment_id<TAB>reference text")->check(CLI::ExistingFile);
  evaluate->add_option("--token-mode", eval_args.token_mode)->check(CLI::IsMember({"char", "whitespace"}));
  evaluate->add_option("--strip-chars", eval_args.strip_chars);
  evaluate->add_option("--json", eval_args.json_out, "write the report as JSON");
  evaluate->add_flag("--per-segment", eval_args.per_segment, "include per-segment rows in the JSON");

  // serve-oracle
  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve-oracle", "Serve the simulator oracle over the scorer protocol");
  serve->add_option("--corpus", serve_args.corpus, "simulator corpus directory")->required()->check(CLI::ExistingDirectory);
  serve->add_option("--host", serve_args.host)->capture_default_str();
  serve->add_option("--port", serve_args.port, "TCP port, 0 for ephemeral")->capture_default_str();
  serve->add_flag("--stdio", serve_args.stdio, "serve one connection on stdin/stdout");
  serve->add_flag("--serial", serve_args.serial, "declare the server serial in the handshake");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  SetupLogging(log_level);
  try {
    if (*align) return RunAlign(align_args);
    if (*ctc) return RunCtcAlign(ctc_args);
    if (*simulate) return RunSimulate(sim, sim_out);
    if (*evaluate) return RunEvaluate(eval_args);
    if (*serve) return RunServeOracle(serve_args);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return ExitCodeFor(e);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
