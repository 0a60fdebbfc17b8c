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

#include <stdexcept>
#include <string>
#include <string_view>

namespace lsalign {

enum class ErrorKind {
  kEmptyTranscript,
  kParse,
  kValidation,
  kDuplicateKey,
  kUnknownKey,
  kUnknownSegment,
  kProtocol,
  kIncompatibleScorer,
  kTimeout,
  kInfeasibleAlignment,
  kTooLargeForOracle,
  kIo,
};

std::string_view ErrorKindName(ErrorKind kind);

// Single exception type for the library; `kind()` drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  // True for failures that originate at a scorer or its transport.
  bool IsScorerError() const;

 private:
  ErrorKind kind_;
};

[[noreturn]] void Throw(ErrorKind kind, const std::string& what);

}  // namespace lsalign
