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

#include "lsalign/ctcseg.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace lsalign {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr char kMagic[5] = {'C', 'T', 'C', 'P', '1'};

double SafeLog(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

enum : std::uint8_t { kStay = 0, kFromPrev = 1, kSkip = 2 };

template <typename T>
void PutLe(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T GetLe(std::istream& in, const std::string& path) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    Throw(ErrorKind::kParse, path + ": truncated posterior file");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void FramePosteriors::Validate(double tolerance) const {
  if (frames < 1) Throw(ErrorKind::kValidation, "posteriors need at least one frame");
  if (!(frame_shift_sec > 0.0)) Throw(ErrorKind::kValidation, "frame shift must be > 0");
  if (probs.size() != frames * columns()) {
    Throw(ErrorKind::kValidation, "posterior matrix has wrong size");
  }
  for (std::size_t t = 0; t < frames; ++t) {
    double sum = 0.0;
    for (std::size_t c = 0; c < columns(); ++c) {
      const double p = at(t, c);
      if (!(p >= 0.0 && p <= 1.0)) {
        Throw(ErrorKind::kValidation, "frame " + std::to_string(t) + " has probability outside [0,1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > tolerance) {
      Throw(ErrorKind::kValidation, "frame " + std::to_string(t) + " sums to " + std::to_string(sum));
    }
  }
}

CtcAlignment CtcAlign(const FramePosteriors& post, const TokenSequence& tokens) {
  if (tokens.empty()) Throw(ErrorKind::kInfeasibleAlignment, "empty token list");
  const std::size_t n = tokens.ids.size();
  const std::size_t frames = post.frames;
  std::size_t required = n;
  for (std::size_t i = 1; i < n; ++i) required += tokens.ids[i] == tokens.ids[i - 1];
  if (required > frames) {
    Throw(ErrorKind::kInfeasibleAlignment, std::to_string(n) + " tokens need " +
                                               std::to_string(required) + " frames, have " +
                                               std::to_string(frames));
  }

  // Expanded labels: blank, y1, blank, y2, ..., yN, blank.
  const std::size_t states = 2 * n + 1;
  std::vector<std::size_t> label(states, post.blank());
  for (std::size_t i = 0; i < n; ++i) {
    const TokenId id = tokens.ids[i];
    if (id < 1 || static_cast<std::size_t>(id) > post.vocab_size) {
      Throw(ErrorKind::kValidation, "token id " + std::to_string(id) + " outside posterior vocabulary");
    }
    label[2 * i + 1] = FramePosteriors::Column(id);
  }
  auto can_skip = [&](std::size_t s) {
    return s >= 2 && label[s] != post.blank() && label[s] != label[s - 2];
  };

  std::vector<double> prev(states, kNegInf), cur(states, kNegInf);
  std::vector<std::uint8_t> back(frames * states, kStay);
  prev[0] = SafeLog(post.at(0, label[0]));
  prev[1] = SafeLog(post.at(0, label[1]));
  for (std::size_t t = 1; t < frames; ++t) {
    // States that cannot reach the end in the remaining frames stay -inf
    // naturally; no pruning needed for correctness.
    for (std::size_t s = 0; s < states; ++s) {
      double best = prev[s];
      std::uint8_t from = kStay;
      if (s >= 1 && prev[s - 1] > best) {
        best = prev[s - 1];
        from = kFromPrev;
      }
      if (can_skip(s) && prev[s - 2] > best) {
        best = prev[s - 2];
        from = kSkip;
      }
      cur[s] = best == kNegInf ? kNegInf : best + SafeLog(post.at(t, label[s]));
      back[t * states + s] = from;
    }
    std::swap(prev, cur);
  }

  std::size_t s = states - 2;
  if (prev[states - 1] > prev[states - 2]) s = states - 1;
  if (prev[s] == kNegInf) Throw(ErrorKind::kInfeasibleAlignment, "no path with non-zero probability");

  CtcAlignment out;
  out.log_prob = prev[s];
  std::vector<std::size_t> state_path(frames);
  for (std::size_t t = frames; t-- > 0;) {
    state_path[t] = s;
    if (t == 0) break;
    const auto from = back[t * states + s];
    s -= from;
  }

  out.frame_columns.resize(frames);
  for (std::size_t t = 0; t < frames; ++t) out.frame_columns[t] = label[state_path[t]];

  out.timings.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.timings[i].position = static_cast<Position>(i + 1);
    out.timings[i].score = 1.0;
  }
  std::vector<bool> seen(n, false);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t st = state_path[t];
    if (st % 2 == 0) continue;
    const std::size_t i = st / 2;
    auto& timing = out.timings[i];
    if (!seen[i]) {
      timing.start_frame = t;
      seen[i] = true;
    }
    timing.end_frame = t + 1;
    timing.score = std::min(timing.score, post.at(t, label[st]));
  }
  return out;
}

void WriteFramePosteriorsBinary(const FramePosteriors& post, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Throw(ErrorKind::kIo, "cannot write " + path);
  out.write(kMagic, sizeof kMagic);
  PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(post.frames));
  PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(post.vocab_size));
  PutLe<double>(out, post.frame_shift_sec);
  for (double p : post.probs) PutLe<float>(out, static_cast<float>(p));
  if (!out) Throw(ErrorKind::kIo, "write failed for " + path);
}

void WriteFramePosteriorsTsv(const FramePosteriors& post, const std::string& path) {
  std::ofstream out(path);
  if (!out) Throw(ErrorKind::kIo, "cannot write " + path);
  out.precision(9);
  out << "#frame_shift=" << post.frame_shift_sec << '\n';
  for (std::size_t t = 0; t < post.frames; ++t) {
    for (std::size_t c = 0; c < post.columns(); ++c) {
      if (c) out << '\t';
      out << post.at(t, c);
    }
    out << '\n';
  }
  if (!out) Throw(ErrorKind::kIo, "write failed for " + path);
}

FramePosteriors ReadFramePosteriors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Throw(ErrorKind::kIo, "cannot open " + path);
  char head[sizeof kMagic] = {};
  in.read(head, sizeof head);
  FramePosteriors post;
  if (in.gcount() == sizeof head && std::memcmp(head, kMagic, sizeof kMagic) == 0) {
    post.frames = GetLe<std::uint32_t>(in, path);
    post.vocab_size = GetLe<std::uint32_t>(in, path);
    post.frame_shift_sec = GetLe<double>(in, path);
    post.probs.resize(post.frames * post.columns());
    for (auto& p : post.probs) p = GetLe<float>(in, path);
    // float32 storage: allow per-entry rounding on top of the row tolerance.
    post.Validate(1e-6 + static_cast<double>(post.columns()) * 6e-8);
    return post;
  }

  in.clear();
  in.seekg(0);
  std::string line;
  std::size_t line_no = 0;
  bool have_cols = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      constexpr std::string_view kKey = "#frame_shift=";
      if (line.starts_with(kKey)) {
        try {
          post.frame_shift_sec = std::stod(line.substr(kKey.size()));
        } catch (const std::exception&) {
          Throw(ErrorKind::kParse, path + ":" + std::to_string(line_no) + ": bad frame shift");
        }
      }
      continue;
    }
    std::vector<double> row;
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, '\t')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(field, &used));
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        Throw(ErrorKind::kParse, path + ":" + std::to_string(line_no) + ": bad number '" + field + "'");
      }
    }
    if (row.size() < 2) {
      Throw(ErrorKind::kParse, path + ":" + std::to_string(line_no) + ": need at least 2 columns");
    }
    if (!have_cols) {
      post.vocab_size = row.size() - 1;
      have_cols = true;
    } else if (row.size() != post.columns()) {
      Throw(ErrorKind::kParse, path + ":" + std::to_string(line_no) + ": column count changed");
    }
    post.probs.insert(post.probs.end(), row.begin(), row.end());
    ++post.frames;
  }
  post.Validate();
  return post;
}

}  // namespace lsalign
