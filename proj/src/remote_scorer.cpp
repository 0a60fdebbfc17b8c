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

#include "lsalign/remote_scorer.hpp"

namespace lsalign {
namespace {

class TcpConnection final : public Connection {
 public:
  explicit TcpConnection(std::unique_ptr<LineChannel> ch) : ch_(std::move(ch)) {}
  LineChannel& channel() override { return *ch_; }

 private:
  std::unique_ptr<LineChannel> ch_;
};

class ProcessConnection final : public Connection {
 public:
  explicit ProcessConnection(const std::string& command) : proc_(command) {}
  LineChannel& channel() override { return proc_.channel(); }

 private:
  Subprocess proc_;
};

}  // namespace

std::unique_ptr<Connection> MakeTcpConnection(const std::string& host, int port) {
  return std::make_unique<TcpConnection>(ConnectTcp(host, port));
}

std::unique_ptr<Connection> MakeProcessConnection(const std::string& command) {
  return std::make_unique<ProcessConnection>(command);
}

RemoteScorer::RemoteScorer(Connector connector, Direction direction, std::string vocab_sha256,
                           std::size_t row_size, Options options)
    : connector_(std::move(connector)),
      direction_(direction),
      vocab_sha256_(std::move(vocab_sha256)),
      row_size_(row_size),
      options_(options) {
  if (options_.max_connections == 0) options_.max_connections = 1;
  auto first = OpenHandshaken();
  if (serial_) options_.max_connections = 1;
  open_ = 1;
  idle_.push_back(std::move(first));
}

RemoteScorer::~RemoteScorer() = default;

std::unique_ptr<Connection> RemoteScorer::OpenHandshaken() {
  auto conn = connector_();
  auto& ch = conn->channel();
  ch.WriteLine(EncodeHello(Hello{.version = kProtocolVersion,
                                 .vocab_sha256 = vocab_sha256_,
                                 .direction = direction_}));
  auto reply = ch.ReadLine(options_.timeout);
  if (!reply) Throw(ErrorKind::kProtocol, "scorer closed the connection during handshake");
  Ready ready = DecodeReady(*reply);
  serial_ = serial_ || ready.serial;
  return conn;
}

std::unique_ptr<Connection> RemoteScorer::Acquire() {
  std::unique_lock<std::mutex> lock(mu_);
  while (true) {
    if (!idle_.empty()) {
      auto conn = std::move(idle_.back());
      idle_.pop_back();
      return conn;
    }
    if (open_ < options_.max_connections) {
      ++open_;
      lock.unlock();
      try {
        return OpenHandshaken();
      } catch (...) {
        std::lock_guard<std::mutex> relock(mu_);
        --open_;
        cv_.notify_one();
        throw;
      }
    }
    cv_.wait(lock);
  }
}

void RemoteScorer::Release(std::unique_ptr<Connection> conn) {
  std::lock_guard<std::mutex> lock(mu_);
  if (conn) {
    idle_.push_back(std::move(conn));
  } else {
    --open_;
  }
  cv_.notify_one();
}

PosteriorRow RemoteScorer::NextPosterior(const ScorerRequest& req) {
  if (req.direction != direction_) {
    Throw(ErrorKind::kProtocol, "request direction does not match the connection");
  }
  auto conn = Acquire();
  bool reusable = false;
  try {
    auto& ch = conn->channel();
    ch.WriteLine(EncodePost(req));
    auto reply = ch.ReadLine(options_.timeout);
    if (!reply) Throw(ErrorKind::kProtocol, "scorer closed the connection");
    SparseRow sparse;
    try {
      sparse = DecodeRow(*reply);
    } catch (const Error& e) {
      // A well-formed error reply leaves the stream in sync.
      reusable = e.kind() != ErrorKind::kProtocol;
      throw;
    }
    reusable = true;
    auto row = ExpandRow(sparse, row_size_, /*require_eos=*/true);
    Release(std::move(conn));
    return row;
  } catch (...) {
    Release(reusable ? std::move(conn) : nullptr);
    throw;
  }
}

}  // namespace lsalign
