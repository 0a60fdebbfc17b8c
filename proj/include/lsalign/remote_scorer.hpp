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

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "lsalign/scorer.hpp"
#include "lsalign/wire.hpp"

namespace lsalign {

class Connection {
 public:
  virtual ~Connection() = default;
  virtual LineChannel& channel() = 0;
};

std::unique_ptr<Connection> MakeTcpConnection(const std::string& host, int port);
std::unique_ptr<Connection> MakeProcessConnection(const std::string& command);

// Scorer reached over the line protocol. Keeps a small pool of handshaken
// connections; each connection carries one request at a time so replies
// cannot be reordered.
class RemoteScorer final : public Scorer {
 public:
  using Connector = std::function<std::unique_ptr<Connection>()>;

  struct Options {
    std::chrono::milliseconds timeout{30000};
    // Upper bound on parallel connections; forced to 1 for serial servers.
    std::size_t max_connections = 1;
  };

  // Connects and handshakes once up front so incompatibilities surface
  // before any alignment starts.
  RemoteScorer(Connector connector, Direction direction, std::string vocab_sha256,
               std::size_t row_size, Options options);
  ~RemoteScorer() override;

  PosteriorRow NextPosterior(const ScorerRequest& req) override;
  bool serial() const override { return serial_; }

 private:
  std::unique_ptr<Connection> OpenHandshaken();
  std::unique_ptr<Connection> Acquire();
  void Release(std::unique_ptr<Connection> conn);

  Connector connector_;
  Direction direction_;
  std::string vocab_sha256_;
  std::size_t row_size_;
  Options options_;
  bool serial_ = false;

  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::unique_ptr<Connection>> idle_;
  std::size_t open_ = 0;
};

}  // namespace lsalign
