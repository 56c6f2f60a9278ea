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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "kf/kernel.hpp"

namespace kf {

struct LabeledFeatures {
  FeatureMatrix features;
  std::vector<int> labels;
};

/// One row per item; the last column is an integer class label, the others
/// are real features. A header row is skipped when `has_header` is set.
LabeledFeatures read_feature_csv(const std::filesystem::path& path, bool has_header);
LabeledFeatures parse_feature_csv(std::string_view text, bool has_header,
                                  std::string_view source = "<memory>");

// Binary kernel format: "KGM1", u32 m, m*m f64 row-major, u32 name length,
// UTF-8 name. All integers and floats little-endian.
std::string encode_kernel(const Gram& g);
Gram decode_kernel(std::string_view bytes, std::string_view source = "<memory>");
void write_kernel_binary(const std::filesystem::path& path, const Gram& g);
Gram read_kernel_binary(const std::filesystem::path& path);

/// Headerless CSV, one matrix row per line.
void write_kernel_csv(const std::filesystem::path& path, const Gram& g);
Gram read_kernel_csv(const std::filesystem::path& path, std::string name = {});

std::vector<int> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const std::vector<int>& labels);

std::vector<std::string> read_lines(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace kf
