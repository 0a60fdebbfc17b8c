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

// Drives the lsalign binary end to end.

#include <gtest/gtest.h>

#include "json.hpp"
#include "lsalign/ctcseg.hpp"
#include "test_util.hpp"

namespace lsalign {
namespace {

using testing::ReadFile;
using testing::RunCommand;
using testing::TempDir;
using testing::WriteFile;

const std::string kCli = LSALIGN_CLI_PATH;

std::string Quote(const std::string& s) { return "'" + s + "'"; }

class CliTest : public ::testing::Test {
 protected:
  void Simulate(const std::string& extra = "") {
    auto r = RunCommand(kCli + " simulate --out " + Quote(corpus()) + " --seed 4 " + extra);
    ASSERT_EQ(r.exit_code, 0);
  }
  std::string corpus() const { return dir_ / "corpus"; }
  std::string Inputs() const {
    return " --segments " + Quote(corpus() + "/segments.tsv") + " --transcript " +
           Quote(corpus() + "/text.tsv") + " --vocab " + Quote(corpus() + "/vocab.txt");
  }
  std::string OracleAlign(const std::string& out, const std::string& extra = "") const {
    return kCli + " align" + Inputs() + " --fwt oracle:" + Quote(corpus()) + " --bwt oracle:" +
           Quote(corpus()) + " --out " + Quote(out) + " " + extra;
  }

  TempDir dir_;
};

TEST_F(CliTest, HelpExitsZero) {
  EXPECT_EQ(RunCommand(kCli + " --help > /dev/null").exit_code, 0);
  EXPECT_EQ(RunCommand(kCli + " align --help > /dev/null").exit_code, 0);
}

TEST_F(CliTest, MissingSubcommandIsUsageError) {
  EXPECT_EQ(RunCommand(kCli + " 2> /dev/null").exit_code, 2);
}

TEST_F(CliTest, SimulateAlignEvaluate) {
  Simulate("--filler-prob 0.2");
  const std::string out = dir_ / "out";
  ASSERT_EQ(RunCommand(OracleAlign(out, "--truth " + Quote(corpus() + "/truth.json"))).exit_code, 0);
  auto report = nlohmann::json::parse(ReadFile(out + "/report.json"));
  EXPECT_EQ(report["nrr"].get<double>(), 1.0);
  EXPECT_EQ(report["span_exact_match"].get<double>(), 1.0);
  EXPECT_EQ(report["cer_non_rejected"].get<double>(), 0.0);
  EXPECT_EQ(report["config"]["theta"].get<double>(), 0.7);

  const std::string json_path = dir_ / "eval.json";
  auto ev = RunCommand(kCli + " evaluate --alignment " + Quote(out) + " --corpus " +
                       Quote(corpus()) + " --json " + Quote(json_path));
  ASSERT_EQ(ev.exit_code, 0);
  EXPECT_NE(ev.out.find("NRR"), std::string::npos) << ev.out;
  auto eval = nlohmann::json::parse(ReadFile(json_path));
  EXPECT_EQ(eval["span_exact_match"].get<double>(), 1.0);
  EXPECT_EQ(eval["cer_with_rejected_as_deletions"].get<double>(), 0.0);
}

TEST_F(CliTest, EvaluateAgainstReferenceText) {
  Simulate();
  const std::string out = dir_ / "out";
  ASSERT_EQ(RunCommand(OracleAlign(out)).exit_code, 0);
  // Reference text is the aligned text itself, so CER must be zero.
  std::string refs;
  std::istringstream aligned(ReadFile(out + "/aligned.tsv"));
  std::string line;
  std::getline(aligned, line);
  while (std::getline(aligned, line)) {
    auto first = line.find('\t');
    refs += line.substr(0, first) + '\t' + line.substr(line.rfind('\t') + 1) + '\n';
  }
  WriteFile(dir_ / "refs.tsv", refs);
  const std::string json_path = dir_ / "eval.json";
  auto ev = RunCommand(kCli + " evaluate --alignment " + Quote(out) + Inputs() +
                       " --reference " + Quote(dir_ / "refs.tsv") + " --json " + Quote(json_path));
  ASSERT_EQ(ev.exit_code, 0);
  auto eval = nlohmann::json::parse(ReadFile(json_path));
  EXPECT_EQ(eval["cer_non_rejected"].get<double>(), 0.0);
  EXPECT_TRUE(eval["span_exact_match"].is_null());
}

TEST_F(CliTest, ValidationErrorsExitTwo) {
  Simulate();
  WriteFile(dir_ / "bad.tsv", "s1\trec0000\t2\t1\n");
  auto r = RunCommand(kCli + " align --segments " + Quote(dir_ / "bad.tsv") + " --transcript " +
                      Quote(corpus() + "/text.tsv") + " --fwt oracle:" + Quote(corpus()) +
                      " --bwt oracle:" + Quote(corpus()) + " --out " + Quote(dir_ / "o") +
                      " 2> /dev/null");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_EQ(RunCommand(OracleAlign(dir_ / "o", "--theta 1.5 2> /dev/null")).exit_code, 2);
  EXPECT_EQ(RunCommand(OracleAlign(dir_ / "o", "--eos-rule nope 2> /dev/null")).exit_code, 2);
}

TEST_F(CliTest, ScorerErrorsExitThree) {
  Simulate();
  WriteFile(dir_ / "script.tsv", "rec0000_seg0000\tforward\t1\teos:1.0\n");
  auto r = RunCommand(kCli + " align" + Inputs() + " --fwt scripted:" + Quote(dir_ / "script.tsv") +
                      " --bwt scripted:" + Quote(dir_ / "script.tsv") + " --out " +
                      Quote(dir_ / "o") + " 2> /dev/null");
  EXPECT_EQ(r.exit_code, 3);
  // A vocabulary that differs from the oracle's is refused at startup.
  WriteFile(dir_ / "text2.tsv", "rec0000\tzzz\n");
  WriteFile(dir_ / "segs2.tsv", "rec0000_seg0000\trec0000\t0\t1\n");
  auto v = RunCommand(kCli + " align --segments " + Quote(dir_ / "segs2.tsv") + " --transcript " +
                      Quote(dir_ / "text2.tsv") + " --fwt oracle:" + Quote(corpus()) +
                      " --bwt oracle:" + Quote(corpus()) + " --out " + Quote(dir_ / "o") +
                      " 2> /dev/null");
  EXPECT_EQ(v.exit_code, 3);
}

TEST_F(CliTest, QueueOverflowExitsFour) {
  Simulate("--filler-prob 0.9 --eps-eos-false 0.3");
  auto r = RunCommand(OracleAlign(dir_ / "o", "--queue-cap 1 2> /dev/null"));
  EXPECT_EQ(r.exit_code, 4);
  auto report = nlohmann::json::parse(ReadFile(dir_ / "o/report.json"));
  EXPECT_TRUE(report["partial"].get<bool>());
}

TEST_F(CliTest, StdioServerMatchesInProcessOracle) {
  Simulate("--filler-prob 0.2 --eps-eos-false 0.05 --concentration 0.9");
  const std::string a = dir_ / "a", b = dir_ / "b";
  ASSERT_EQ(RunCommand(OracleAlign(a)).exit_code, 0);
  const std::string server = "exec:" + kCli + " serve-oracle --stdio --corpus " + corpus();
  auto r = RunCommand(kCli + " align" + Inputs() + " --fwt " + Quote(server) + " --bwt " +
                      Quote(server) + " --out " + Quote(b) + " --jobs 3");
  ASSERT_EQ(r.exit_code, 0);
  for (const char* f : {"/aligned.tsv", "/rejected.tsv", "/report.json"}) {
    EXPECT_EQ(ReadFile(a + f), ReadFile(b + f)) << f;
  }
}

TEST_F(CliTest, ConfigFileIsOverriddenByFlags) {
  Simulate("--eps-eos-false 0.1 --concentration 0.8");
  WriteFile(dir_ / "cfg.ini", "[align]\ntheta=0.2\nqueue-cap=9\n");
  const std::string with_config = kCli + " --config " + Quote(dir_ / "cfg.ini");
  auto align = [&](const std::string& out, const std::string& extra) {
    std::string cmd = OracleAlign(out, extra);
    return RunCommand(with_config + cmd.substr(kCli.size())).exit_code;
  };
  ASSERT_EQ(align(dir_ / "o", ""), 0);
  auto report = nlohmann::json::parse(ReadFile(dir_ / "o/report.json"));
  EXPECT_EQ(report["config"]["theta"].get<double>(), 0.2);
  EXPECT_EQ(report["config"]["queue_cap"].get<int>(), 9);
  ASSERT_EQ(align(dir_ / "o2", "--theta 0.6"), 0);
  report = nlohmann::json::parse(ReadFile(dir_ / "o2/report.json"));
  EXPECT_EQ(report["config"]["theta"].get<double>(), 0.6);
}

TEST_F(CliTest, CtcAlignWritesTimings) {
  FramePosteriors post;
  post.frames = 4;
  post.vocab_size = 2;
  post.frame_shift_sec = 0.04;
  post.probs = {0.7, 0.1, 0.2, 0.4, 0.1, 0.5, 0.2, 0.3, 0.5, 0.1, 0.8, 0.1};
  WriteFramePosteriorsBinary(post, dir_ / "post.bin");
  WriteFile(dir_ / "vocab.txt", "a\nb\n");
  auto r = RunCommand(kCli + " ctc-align --posteriors " + Quote(dir_ / "post.bin") + " --vocab " +
                      Quote(dir_ / "vocab.txt") + " --text ab");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out,
            "position\ttoken\tstart_frame\tend_frame\tstart_sec\tend_sec\tscore\n"
            "1\ta\t0\t1\t0.000\t0.040\t0.7000\n"
            "2\tb\t3\t4\t0.120\t0.160\t0.8000\n");
}

}  // namespace
}  // namespace lsalign
