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

#include "lsalign/wire.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include "json.hpp"

namespace lsalign {
namespace {

using nlohmann::json;

json ParseMessage(std::string_view line, std::string_view expected_op) {
  json msg;
  try {
    msg = json::parse(line);
  } catch (const json::exception& e) {
    Throw(ErrorKind::kProtocol, std::string("malformed JSON line: ") + e.what());
  }
  if (!msg.is_object() || !msg.contains("op") || !msg["op"].is_string()) {
    Throw(ErrorKind::kProtocol, "message without \"op\"");
  }
  const auto op = msg["op"].get<std::string>();
  if (op == "error" && expected_op != "error") {
    const auto code = msg.value("code", std::string("ProtocolError"));
    const auto text = msg.value("message", std::string());
    for (auto kind : {ErrorKind::kUnknownSegment, ErrorKind::kUnknownKey,
                      ErrorKind::kIncompatibleScorer, ErrorKind::kProtocol,
                      ErrorKind::kTimeout}) {
      if (code == ErrorKindName(kind)) Throw(kind, "scorer reported: " + text);
    }
    Throw(ErrorKind::kProtocol, "scorer reported " + code + ": " + text);
  }
  if (op != expected_op) {
    Throw(ErrorKind::kProtocol, "expected op \"" + std::string(expected_op) + "\", got \"" + op + "\"");
  }
  return msg;
}

TokenId ParseIdKey(const std::string& key) {
  if (key == kEosName) return kEosId;
  TokenId v = 0;
  auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), v);
  if (key.empty() || ec != std::errc() || ptr != key.data() + key.size() || v < 1) {
    Throw(ErrorKind::kProtocol, "bad row key '" + key + "'");
  }
  return v;
}

[[noreturn]] void ThrowErrno(const std::string& what) {
  Throw(ErrorKind::kIo, what + ": " + std::strerror(errno));
}

}  // namespace

std::string EncodeHello(const Hello& hello) {
  json msg = {{"op", "hello"},
              {"version", hello.version},
              {"vocab_sha256", hello.vocab_sha256},
              {"direction", std::string(DirectionName(hello.direction))}};
  return msg.dump();
}

std::string EncodeReady(const Ready& ready) {
  return json{{"op", "ready"}, {"serial", ready.serial}}.dump();
}

std::string EncodePost(const ScorerRequest& req) {
  json msg = {{"op", "post"}, {"segment", req.segment_id}, {"prefix", req.prefix}};
  if (req.anchor > 0) msg["anchor"] = req.anchor;
  return msg.dump();
}

std::string EncodeRow(const SparseRow& row) {
  json probs = json::object();
  for (const auto& [id, p] : row.entries) {
    probs[id == kEosId ? std::string(kEosName) : std::to_string(id)] = p;
  }
  return json{{"op", "row"}, {"probs", probs}, {"other_mass", row.other_mass}}.dump();
}

std::string EncodeError(ErrorKind kind, std::string_view message) {
  return json{{"op", "error"},
              {"code", std::string(ErrorKindName(kind))},
              {"message", std::string(message)}}
      .dump();
}

Hello DecodeHello(std::string_view line) {
  auto msg = ParseMessage(line, "hello");
  Hello hello;
  try {
    hello.version = msg.at("version").get<int>();
    hello.vocab_sha256 = msg.at("vocab_sha256").get<std::string>();
    hello.direction = ParseDirection(msg.at("direction").get<std::string>());
  } catch (const json::exception& e) {
    Throw(ErrorKind::kProtocol, std::string("bad hello: ") + e.what());
  }
  return hello;
}

Ready DecodeReady(std::string_view line) {
  auto msg = ParseMessage(line, "ready");
  if (!msg.contains("serial") || !msg["serial"].is_boolean()) {
    Throw(ErrorKind::kProtocol, "ready without boolean \"serial\"");
  }
  return Ready{.serial = msg["serial"].get<bool>()};
}

ScorerRequest DecodePost(std::string_view line, Direction direction) {
  auto msg = ParseMessage(line, "post");
  ScorerRequest req;
  req.direction = direction;
  try {
    req.segment_id = msg.at("segment").get<std::string>();
    const auto& prefix = msg.at("prefix");
    if (!prefix.is_array()) Throw(ErrorKind::kProtocol, "prefix is not an array");
    for (const auto& v : prefix) {
      if (!v.is_number_integer()) Throw(ErrorKind::kProtocol, "prefix entry is not an integer");
      auto id = v.get<std::int64_t>();
      if (id < 1 || id > INT32_MAX) Throw(ErrorKind::kProtocol, "prefix id out of range");
      req.prefix.push_back(static_cast<TokenId>(id));
    }
    if (msg.contains("anchor")) {
      if (!msg["anchor"].is_number_integer()) Throw(ErrorKind::kProtocol, "anchor is not an integer");
      req.anchor = msg["anchor"].get<Position>();
    }
  } catch (const json::exception& e) {
    Throw(ErrorKind::kProtocol, std::string("bad post: ") + e.what());
  }
  return req;
}

SparseRow DecodeRow(std::string_view line) {
  auto msg = ParseMessage(line, "row");
  SparseRow row;
  if (!msg.contains("probs") || !msg["probs"].is_object()) {
    Throw(ErrorKind::kProtocol, "row without \"probs\" object");
  }
  for (const auto& [key, value] : msg["probs"].items()) {
    if (!value.is_number()) Throw(ErrorKind::kProtocol, "non-numeric probability for " + key);
    row.entries.emplace_back(ParseIdKey(key), value.get<double>());
  }
  if (msg.contains("other_mass")) {
    if (!msg["other_mass"].is_number()) Throw(ErrorKind::kProtocol, "non-numeric other_mass");
    row.other_mass = msg["other_mass"].get<double>();
  }
  return row;
}

// ---------------------------------------------------------------------------

LineChannel::LineChannel(int read_fd, int write_fd, bool is_socket)
    : read_fd_(read_fd), write_fd_(write_fd), is_socket_(is_socket) {}

LineChannel::~LineChannel() {
  if (read_fd_ >= 0) ::close(read_fd_);
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
}

void LineChannel::WriteLine(std::string_view line) {
  std::string data(line);
  data.push_back('\n');
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = is_socket_ ? ::send(write_fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL)
                           : ::write(write_fd_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      ThrowErrno("write to scorer channel");
    }
    off += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> LineChannel::ReadLine(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    int wait_ms = -1;
    if (timeout.count() > 0) {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) Throw(ErrorKind::kTimeout, "no reply from scorer within timeout");
      wait_ms = static_cast<int>(left.count());
    }
    pollfd pfd{.fd = read_fd_, .events = POLLIN, .revents = 0};
    int rc = ::poll(&pfd, 1, wait_ms);
    if (rc < 0) {
      if (errno == EINTR) continue;
      ThrowErrno("poll on scorer channel");
    }
    if (rc == 0) Throw(ErrorKind::kTimeout, "no reply from scorer within timeout");
    char buf[4096];
    ssize_t n = ::read(read_fd_, buf, sizeof buf);
    if (n < 0) {
      if (errno == EINTR) continue;
      ThrowErrno("read from scorer channel");
    }
    if (n == 0) {
      if (buffer_.empty()) return std::nullopt;
      std::string line = std::move(buffer_);
      buffer_.clear();
      return line;
    }
    buffer_.append(buf, static_cast<std::size_t>(n));
  }
}

// ---------------------------------------------------------------------------

Subprocess::Subprocess(const std::string& command) {
  IgnoreSigpipe();
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) ThrowErrno("pipe");
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    ThrowErrno("pipe");
  }
  pid_ = ::fork();
  if (pid_ < 0) ThrowErrno("fork");
  if (pid_ == 0) {
    // Own process group so Kill() also reaches whatever the shell spawned.
    ::setpgid(0, 0);
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid_, pid_);  // also from the parent, so an early Kill() cannot miss
  ::close(to_child[0]);
  ::close(from_child[1]);
  channel_ = std::make_unique<LineChannel>(from_child[0], to_child[1], false);
}

Subprocess::~Subprocess() {
  if (!reaped_) {
    channel_.reset();
    Kill();
    Wait();
  }
}

int Subprocess::Wait() {
  channel_.reset();
  if (!reaped_ && pid_ > 0) {
    while (::waitpid(pid_, &status_, 0) < 0 && errno == EINTR) {
    }
    reaped_ = true;
  }
  return status_;
}

void Subprocess::Kill() {
  if (!reaped_ && pid_ > 0) ::kill(-pid_, SIGTERM);
}

std::unique_ptr<LineChannel> ConnectTcp(const std::string& host, int port) {
  IgnoreSigpipe();
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const auto service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    Throw(ErrorKind::kIo, "resolve " + host + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (auto* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) ThrowErrno("connect " + host + ":" + service);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return std::make_unique<LineChannel>(fd, fd, true);
}

TcpListener::TcpListener(const std::string& host, int port) {
  IgnoreSigpipe();
  fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd_ < 0) ThrowErrno("socket");
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    Throw(ErrorKind::kValidation, "listen address must be an IPv4 literal: " + host);
  }
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) ThrowErrno("bind");
  if (::listen(fd_, 64) != 0) ThrowErrno("listen");
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<LineChannel> TcpListener::Accept() {
  while (true) {
    int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd >= 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return std::make_unique<LineChannel>(fd, fd, true);
    }
    if (errno != EINTR) ThrowErrno("accept");
  }
}

bool ServeConnection(LineChannel& channel, const ScorerService& service) {
  using std::chrono::milliseconds;
  auto first = channel.ReadLine(milliseconds(0));
  if (!first) return false;
  Hello hello;
  try {
    hello = DecodeHello(*first);
  } catch (const Error& e) {
    channel.WriteLine(EncodeError(e.kind(), e.what()));
    return false;
  }
  if (hello.version != kProtocolVersion) {
    channel.WriteLine(EncodeError(ErrorKind::kIncompatibleScorer,
                                  "unsupported protocol version " + std::to_string(hello.version)));
    return false;
  }
  if (hello.vocab_sha256 != service.vocab_sha256) {
    channel.WriteLine(EncodeError(ErrorKind::kIncompatibleScorer, "vocabulary digest mismatch"));
    return false;
  }
  channel.WriteLine(EncodeReady(Ready{.serial = service.serial}));
  while (auto line = channel.ReadLine(milliseconds(0))) {
    if (line->empty()) continue;
    std::string reply;
    try {
      reply = EncodeRow(service.answer(DecodePost(*line, hello.direction)));
    } catch (const Error& e) {
      reply = EncodeError(e.kind(), e.what());
    }
    channel.WriteLine(reply);
  }
  return true;
}

void IgnoreSigpipe() { ::signal(SIGPIPE, SIG_IGN); }

}  // namespace lsalign
