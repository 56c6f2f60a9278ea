// Copyright 2026 The kforge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
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

namespace kf {

enum class Errc {
  input,        // malformed or inconsistent data
  parameter,    // invalid numeric parameter
  shape,        // dimension mismatch or asymmetric matrix
  index,        // index out of range
  degenerate,   // input that admits no well-defined result
  expression,   // kernel expression refers to a missing kernel
  parse,        // malformed expression text
  config,       // run configuration problems
  lookup,       // unknown item id
  io,           // file system / format problems
  numerical,    // solver failure
};

std::string_view errc_name(Errc code) noexcept;

/// Process exit code for an error category: 2 config, 3 data, 4 numerical.
int exit_code(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::input: return "input";
    case Errc::parameter: return "parameter";
    case Errc::shape: return "shape";
    case Errc::index: return "index";
    case Errc::degenerate: return "degenerate";
    case Errc::expression: return "expression";
    case Errc::parse: return "parse";
    case Errc::config: return "config";
    case Errc::lookup: return "lookup";
    case Errc::io: return "io";
    case Errc::numerical: return "numerical";
  }
  return "unknown";
}

inline int exit_code(Errc code) noexcept {
  switch (code) {
    case Errc::config:
    case Errc::parameter:
      return 2;
    case Errc::numerical:
      return 4;
    default:
      return 3;
  }
}

}  // namespace kf
