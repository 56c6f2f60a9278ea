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

// The pipeline stages behind the `kf` subcommands. Each command takes a
// validated RunConfig and writes its outputs under config.output_dir.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kf/config.hpp"
#include "kf/gp.hpp"
#include "kf/harness.hpp"
#include "kf/retrieval.hpp"

namespace kf {

inline constexpr const char* kManifestSchema = "kf-manifest-1";

struct LoadedBank {
  KernelBank bank;
  std::vector<int> labels;
};

/// Reads a manifest written by cmd_gram (kernel paths are relative to it).
/// `labels_override`, if non-empty, replaces the manifest's label file.
LoadedBank load_manifest(const std::filesystem::path& manifest,
                         const std::filesystem::path& labels_override = {});

/// One normalized Gaussian kernel file per feature CSV, plus labels.txt and
/// manifest.json. Returns the manifest path.
std::filesystem::path cmd_gram(const RunConfig& config);

/// Writes best_expr.txt, evolution.csv, result.json and model.json.
EvolutionResult cmd_evolve(const RunConfig& config);

struct CompareOutput {
  ComparisonReport report;
  std::filesystem::path run_dir;
};

/// Runs the three-way comparison into output_dir/run-<UTC timestamp>-seed<seed>.
CompareOutput cmd_compare(const RunConfig& config);

/// Builds and saves a similarity index; returns it.
SimilarityIndex cmd_build_index(const std::filesystem::path& manifest, std::string_view expr,
                                const std::filesystem::path& ids_file,
                                const std::filesystem::path& index_path);

/// Resolves `item` as an id, then as a decimal index. Unknown items raise
/// Errc::lookup listing the closest ids.
std::size_t resolve_item(const SimilarityIndex& index, std::string_view item);

/// Prints `rank,item_id,score` rows.
void cmd_retrieve(const std::filesystem::path& index_path, std::string_view item, std::size_t k,
                  RankOrder order, std::ostream& out);

/// Pretty-prints a kernel expression (file contents or literal text).
void cmd_inspect(std::string_view expr_text, std::ostream& out,
                 const std::vector<std::string>& names = {});

}  // namespace kf
