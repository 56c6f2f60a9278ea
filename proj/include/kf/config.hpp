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

// Run configuration: a flat `key = value` file (dotted keys such as
// gp.population_size) overlaid on defaults, with command-line overrides
// applied last. Unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kf/gp.hpp"
#include "kf/harness.hpp"
#include "kf/svm.hpp"

namespace kf {

struct RunConfig {
  std::vector<std::filesystem::path> features;  // data.features (comma separated)
  bool features_header = false;                 // data.header
  std::filesystem::path manifest;               // data.manifest
  std::filesystem::path labels;                 // data.labels (overrides manifest labels)
  std::optional<double> gamma;                  // kernel.gamma; median heuristic if unset
  GpParams gp;
  SvmParams svm;
  ProtocolConfig protocol;
  std::optional<std::uint64_t> seed;  // seed
  std::filesystem::path output_dir = "kf-out";  // output.dir
  std::size_t threads = 0;                      // 0 = all cores
};

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Parses `key = value` lines; '#' starts a comment. Throws Errc::config.
ConfigEntries parse_config_text(std::string_view text, std::string_view source = "<config>");

/// Applies one key; throws Errc::config for unknown keys or bad values.
void apply_config_value(RunConfig& config, std::string_view key, std::string_view value);

/// Defaults, then the file (if any), then overrides.
RunConfig load_config(const std::optional<std::filesystem::path>& file,
                      const ConfigEntries& overrides);

/// Every key load_config accepts.
const std::vector<std::string>& known_config_keys();

enum class Command { gram, evolve, compare };

/// Checks what `command` needs before any computation: required keys,
/// existing input paths, parameter ranges.
void validate_config(const RunConfig& config, Command command);

}  // namespace kf
