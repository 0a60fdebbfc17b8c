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

// Line-delimited JSON scorer protocol and the byte transports under it.
//
//   -> {"op":"hello","version":1,"vocab_sha256":"<hex>","direction":"forward"}
//   <- {"op":"ready","serial":false}
//   -> {"op":"post","segment":"seg0007","prefix":[12,4,9],"anchor":5}
//   <- {"op":"row","probs":{"3":0.81,"eos":0.07},"other_mass":0.12}
//
// Failures are answered with {"op":"error","code":"<ErrorKind>","message":"..."}.

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <sys/types.h>

#include "lsalign/scorer.hpp"

namespace lsalign {

inline constexpr int kProtocolVersion = 1;

struct Hello {
  int version = kProtocolVersion;
  std::string vocab_sha256;
  Direction direction = Direction::kForward;
};

struct Ready {
  bool serial = false;
};

std::string EncodeHello(const Hello& hello);
std::string EncodeReady(const Ready& ready);
std::string EncodePost(const ScorerRequest& req);
std::string EncodeRow(const SparseRow& row);
std::string EncodeError(ErrorKind kind, std::string_view message);

Hello DecodeHello(std::string_view line);
// Throws the server-reported error kind when the reply is an error message.
Ready DecodeReady(std::string_view line);
// `direction` is supplied by the connection, posts do not carry it.
ScorerRequest DecodePost(std::string_view line, Direction direction);
SparseRow DecodeRow(std::string_view line);

// Buffered line reader/writer over a pair of file descriptors.
class LineChannel {
 public:
  LineChannel(int read_fd, int write_fd, bool is_socket);
  ~LineChannel();
  LineChannel(const LineChannel&) = delete;
  LineChannel& operator=(const LineChannel&) = delete;

  // Writes `line` followed by '\n'. Throws kIo when the peer is gone.
  void WriteLine(std::string_view line);

  // Next line without its '\n'; nullopt at end of stream. A zero or
  // negative timeout waits forever; expiry throws kTimeout.
  std::optional<std::string> ReadLine(std::chrono::milliseconds timeout);

 private:
  int read_fd_;
  int write_fd_;
  bool is_socket_;
  std::string buffer_;
};

// Child process running `/bin/sh -c command` with stdin/stdout piped.
class Subprocess {
 public:
  explicit Subprocess(const std::string& command);
  ~Subprocess();
  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  LineChannel& channel() { return *channel_; }
  pid_t pid() const { return pid_; }
  // Closes the pipes and waits; returns the exit status.
  int Wait();
  void Kill();

 private:
  pid_t pid_ = -1;
  std::unique_ptr<LineChannel> channel_;
  bool reaped_ = false;
  int status_ = 0;
};

std::unique_ptr<LineChannel> ConnectTcp(const std::string& host, int port);

class TcpListener {
 public:
  // port 0 picks an ephemeral port.
  TcpListener(const std::string& host, int port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  int port() const { return port_; }
  // Blocks until a client connects.
  std::unique_ptr<LineChannel> Accept();

 private:
  int fd_ = -1;
  int port_ = 0;
};

// Server side of the protocol, independent of transport.
struct ScorerService {
  std::string vocab_sha256;
  bool serial = false;
  std::function<SparseRow(const ScorerRequest&)> answer;
};

// Runs handshake then answers posts until the client disconnects.
// Returns false when the handshake was refused.
bool ServeConnection(LineChannel& channel, const ScorerService& service);

// Ignores SIGPIPE process-wide so a vanished peer surfaces as kIo.
void IgnoreSigpipe();

}  // namespace lsalign
