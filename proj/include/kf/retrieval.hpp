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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kf/expr.hpp"

namespace kf {

/// Item-by-item similarity matrix M built from a kernel expression.
struct SimilarityIndex {
  Gram similarity;
  std::vector<std::string> item_ids;
  std::optional<KernelExpr> expr;  // absent when loaded from a foreign kernel file

  std::size_t size() const noexcept { return item_ids.size(); }
  /// Index of `id`, or std::nullopt.
  std::optional<std::size_t> find(std::string_view id) const;
};

enum class RankOrder {
  similarity,  // descending M[i, .]
  paper_min,   // ascending M[i, .]
};

RankOrder parse_rank_order(std::string_view text);

/// M = normalize(evaluate(expr, bank)). Item ids default to "0".."m-1".
SimilarityIndex build_index(const KernelExpr& expr, const KernelBank& bank,
                            std::vector<std::string> item_ids = {});

struct Match {
  std::size_t item = 0;
  double score = 0.0;

  friend bool operator==(const Match&, const Match&) = default;
};

/// The k items other than `item`, ranked by `order`; equal scores rank the
/// smaller index first.
std::vector<Match> query(const SimilarityIndex& index, std::size_t item, std::size_t k,
                         RankOrder order = RankOrder::similarity);

/// Ids closest to `id` by edit distance (for "did you mean" messages).
std::vector<std::string> nearest_ids(const SimilarityIndex& index, std::string_view id,
                                     std::size_t count = 3);

/// Kernel binary file at `path`, ids sidecar at `path` + ".ids".
void save_index(const std::filesystem::path& path, const SimilarityIndex& index);
SimilarityIndex load_index(const std::filesystem::path& path);

}  // namespace kf
