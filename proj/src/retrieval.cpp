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

#include "kf/retrieval.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "kf/kernel_io.hpp"

namespace kf {
namespace {

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::filesystem::path ids_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".ids");
}

}  // namespace

std::optional<std::size_t> SimilarityIndex::find(std::string_view id) const {
  const auto it = std::find(item_ids.begin(), item_ids.end(), id);
  if (it == item_ids.end()) return std::nullopt;
  return static_cast<std::size_t>(it - item_ids.begin());
}

RankOrder parse_rank_order(std::string_view text) {
  if (text == "similarity") return RankOrder::similarity;
  if (text == "paper-min") return RankOrder::paper_min;
  throw Error(Errc::parameter, fmt::format("unknown order '{}' (similarity | paper-min)", text));
}

SimilarityIndex build_index(const KernelExpr& expr, const KernelBank& bank,
                            std::vector<std::string> item_ids) {
  const auto m = static_cast<std::size_t>(bank.items());
  if (item_ids.empty()) {
    for (std::size_t i = 0; i < m; ++i) item_ids.push_back(std::to_string(i));
  }
  if (item_ids.size() != m) {
    throw Error(Errc::input, fmt::format("{} item ids for a {}-item bank", item_ids.size(), m));
  }
  SimilarityIndex index;
  index.similarity = normalize(evaluate(expr, bank));
  index.item_ids = std::move(item_ids);
  index.expr = expr;
  return index;
}

std::vector<Match> query(const SimilarityIndex& index, std::size_t item, std::size_t k,
                         RankOrder order) {
  const std::size_t m = index.size();
  if (item >= m) throw Error(Errc::index, fmt::format("item {} out of range ({} items)", item, m));
  if (k < 1 || k + 1 > m) {
    throw Error(Errc::parameter, fmt::format("k must be in [1, {}], got {}", m - 1, k));
  }
  const auto row = index.similarity.matrix().row(static_cast<Eigen::Index>(item));
  std::vector<Match> candidates;
  candidates.reserve(m - 1);
  for (std::size_t j = 0; j < m; ++j)
    if (j != item) candidates.push_back({j, row(static_cast<Eigen::Index>(j))});
  const auto before = [order](const Match& a, const Match& b) {
    if (a.score != b.score) return order == RankOrder::similarity ? a.score > b.score : a.score < b.score;
    return a.item < b.item;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                    candidates.end(), before);
  candidates.resize(k);
  return candidates;
}

std::vector<std::string> nearest_ids(const SimilarityIndex& index, std::string_view id,
                                     std::size_t count) {
  std::vector<std::pair<std::size_t, std::size_t>> scored;
  for (std::size_t i = 0; i < index.item_ids.size(); ++i) scored.emplace_back(edit_distance(id, index.item_ids[i]), i);
  std::sort(scored.begin(), scored.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < scored.size() && i < count; ++i) out.push_back(index.item_ids[scored[i].second]);
  return out;
}

void save_index(const std::filesystem::path& path, const SimilarityIndex& index) {
  write_kernel_binary(path, index.similarity);
  std::string ids;
  for (const auto& id : index.item_ids) ids += id + "\n";
  write_file(ids_path(path), ids);
}

SimilarityIndex load_index(const std::filesystem::path& path) {
  SimilarityIndex index;
  index.similarity = read_kernel_binary(path);
  const auto sidecar = ids_path(path);
  if (std::filesystem::exists(sidecar)) {
    index.item_ids = read_lines(sidecar);
  } else {
    for (Eigen::Index i = 0; i < index.similarity.size(); ++i) index.item_ids.push_back(std::to_string(i));
  }
  if (index.item_ids.size() != static_cast<std::size_t>(index.similarity.size())) {
    throw Error(Errc::input, fmt::format("{}: {} ids for a {}x{} index", sidecar.string(),
                                         index.item_ids.size(), index.similarity.size(),
                                         index.similarity.size()));
  }
  try {
    index.expr = parse_expr(index.similarity.tag());
  } catch (const Error&) {
    index.expr.reset();
  }
  return index;
}

}  // namespace kf
