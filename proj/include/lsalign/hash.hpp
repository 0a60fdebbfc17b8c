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

#include <cstdint>
#include <string>
#include <string_view>

namespace lsalign {

// Lower-case hex SHA-256 digest.
std::string Sha256Hex(std::string_view data);

// 64-bit FNV-1a; stable across platforms, used for seeded noise keys.
std::uint64_t Fnv1a64(std::string_view data);

// splitmix64 finalizer.
std::uint64_t Mix64(std::uint64_t x);

}  // namespace lsalign
