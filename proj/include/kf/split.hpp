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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

namespace kf {

/// Disjoint train / validation / test index lists over 0..m-1.
struct DatasetSplit {
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> val_idx;
  std::vector<std::size_t> test_idx;
  std::uint64_t seed = 0;

  /// Sorted union of train and validation: everything a model may see.
  std::vector<std::size_t> pool() const;

  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

/// Checks disjointness and index range, and that train (and validation,
/// when `need_validation`) hold at least two classes. Throws Errc::input.
void validate_split(const DatasetSplit& split, std::span<const int> labels, bool need_validation);

std::vector<int> gather(std::span<const int> labels, std::span<const std::size_t> idx);

void to_json(nlohmann::json& j, const DatasetSplit& s);
void from_json(const nlohmann::json& j, DatasetSplit& s);

}  // namespace kf
