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

#include "kf/split.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "kf/errors.hpp"

namespace kf {

std::vector<std::size_t> DatasetSplit::pool() const {
  std::vector<std::size_t> out = train_idx;
  out.insert(out.end(), val_idx.begin(), val_idx.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> gather(std::span<const int> labels, std::span<const std::size_t> idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) {
    if (i >= labels.size()) throw Error(Errc::index, fmt::format("label index {} out of range", i));
    out.push_back(labels[i]);
  }
  return out;
}

void validate_split(const DatasetSplit& split, std::span<const int> labels, bool need_validation) {
  std::vector<char> seen(labels.size(), 0);
  const auto mark = [&](const std::vector<std::size_t>& idx, const char* name) {
    for (std::size_t i : idx) {
      if (i >= labels.size()) {
        throw Error(Errc::input, fmt::format("split: {} index {} out of range ({} items)", name, i,
                                             labels.size()));
      }
      if (seen[i]) throw Error(Errc::input, fmt::format("split: index {} appears twice", i));
      seen[i] = 1;
    }
  };
  mark(split.train_idx, "train");
  mark(split.val_idx, "validation");
  mark(split.test_idx, "test");
  const auto classes = [&](const std::vector<std::size_t>& idx) {
    std::set<int> c;
    for (std::size_t i : idx) c.insert(labels[i]);
    return c.size();
  };
  if (classes(split.train_idx) < 2) throw Error(Errc::input, "split: training set needs two classes");
  if (need_validation && split.val_idx.empty()) {
    throw Error(Errc::input, "split: validation set is empty");
  }
}

void to_json(nlohmann::json& j, const DatasetSplit& s) {
  j = {{"train_idx", s.train_idx}, {"val_idx", s.val_idx}, {"test_idx", s.test_idx}, {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, DatasetSplit& s) {
  j.at("train_idx").get_to(s.train_idx);
  j.at("val_idx").get_to(s.val_idx);
  j.at("test_idx").get_to(s.test_idx);
  j.at("seed").get_to(s.seed);
}

}  // namespace kf
