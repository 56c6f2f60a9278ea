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

#include <doctest.h>

#include <filesystem>

#include "kf/harness.hpp"
#include "kf/retrieval.hpp"
#include "oracles.hpp"

using kf::Match;
using kf::RankOrder;

namespace {

kf::Errc error_code(const auto& fn) {
  try {
    fn();
  } catch (const kf::Error& e) {
    return e.code();
  }
  FAIL("no kf::Error thrown");
  return kf::Errc::input;
}

kf::SimilarityIndex from_matrix(const kf::Matrix& m) {
  kf::SimilarityIndex index{kf::Gram(m), {}, std::nullopt};
  for (Eigen::Index i = 0; i < m.rows(); ++i) index.item_ids.push_back("img" + std::to_string(i));
  return index;
}

std::vector<std::size_t> items(const std::vector<Match>& matches) {
  std::vector<std::size_t> out;
  for (const Match& m : matches) out.push_back(m.item);
  return out;
}

}  // namespace

TEST_CASE("build_index") {
  kf::Rng rng(1);
  const kf::KernelBank bank = kf::testing::random_bank(5, 7, rng);
  const kf::SimilarityIndex index = kf::build_index(kf::sum_of_leaves(5), bank);
  CHECK(index.size() == 7);
  CHECK(index.item_ids.front() == "0");
  const kf::Matrix expected = kf::normalize(kf::addition_kernel(bank)).matrix();
  CHECK((index.similarity.matrix() - expected).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(index.expr == kf::sum_of_leaves(5));

  const kf::Gram eye(kf::Matrix::Identity(4, 4));
  const kf::SimilarityIndex ident = kf::build_index(kf::KernelExpr::leaf(0), kf::KernelBank({eye}));
  CHECK(ident.similarity.matrix() == kf::Matrix::Identity(4, 4));

  CHECK(error_code([&] { (void)kf::build_index(kf::KernelExpr::leaf(0), bank, {"a", "b"}); }) ==
        kf::Errc::input);
  CHECK(error_code([&] { (void)kf::build_index(kf::KernelExpr::leaf(5), bank); }) == kf::Errc::expression);
}

TEST_CASE("query examples") {
  kf::Matrix m(4, 4);
  m << 1, .9, .2, .7,
      .9, 1, .1, .3,
      .2, .1, 1, .4,
      .7, .3, .4, 1;
  const kf::SimilarityIndex index = from_matrix(m);
  CHECK(items(kf::query(index, 0, 2)) == std::vector<std::size_t>{1, 3});
  CHECK(items(kf::query(index, 0, 2, RankOrder::paper_min)) == std::vector<std::size_t>{2, 3});
  CHECK(kf::query(index, 0, 1).front() == Match{1, 0.9});

  const kf::SimilarityIndex eye = from_matrix(kf::Matrix::Identity(5, 5));
  for (std::size_t i = 0; i < 5; ++i) {
    const std::vector<Match> top = kf::query(eye, i, 1);
    CHECK(top.front().item == (i == 0 ? 1 : 0));
    CHECK(top.front().score == 0.0);
  }

  CHECK(error_code([&] { (void)kf::query(index, 0, 0); }) == kf::Errc::parameter);
  CHECK(error_code([&] { (void)kf::query(index, 0, 4); }) == kf::Errc::parameter);
  CHECK(error_code([&] { (void)kf::query(index, 4, 1); }) == kf::Errc::index);
}

TEST_CASE("rank order parsing and id lookup") {
  CHECK(kf::parse_rank_order("similarity") == RankOrder::similarity);
  CHECK(kf::parse_rank_order("paper-min") == RankOrder::paper_min);
  CHECK(error_code([] { (void)kf::parse_rank_order("max"); }) == kf::Errc::parameter);
  const kf::SimilarityIndex index = from_matrix(kf::Matrix::Identity(3, 3));
  CHECK(index.find("img2") == 2);
  CHECK(!index.find("img9").has_value());
  CHECK(kf::nearest_ids(index, "img9", 1).size() == 1);
}

TEST_CASE("property: query invariants") {
  kf::Rng rng(2);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t m = 3 + static_cast<std::size_t>(trial % 8);
    const kf::KernelBank bank = kf::testing::random_bank(3, m, rng);
    const kf::SimilarityIndex index = kf::build_index(kf::parse_expr("(+ (* K1 K2) K3)"), bank);
    kf::SimilarityIndex scaled = index;
    scaled.similarity = kf::Gram(3.5 * index.similarity.matrix());
    for (std::size_t i = 0; i < m; ++i) {
      const std::vector<Match> up = kf::query(index, i, m - 1);
      std::vector<Match> down = kf::query(index, i, m - 1, RankOrder::paper_min);
      for (const Match& x : up) CHECK(x.item != i);
      std::reverse(down.begin(), down.end());
      CHECK(items(up) == items(down));
      CHECK(items(kf::query(scaled, i, m - 1)) == items(up));
      for (std::size_t r = 1; r < up.size(); ++r) CHECK(up[r - 1].score >= up[r].score);
    }
  }
}

TEST_CASE("save and load") {
  kf::Rng rng(3);
  const kf::KernelBank bank = kf::testing::random_bank(2, 5, rng);
  const kf::SimilarityIndex index =
      kf::build_index(kf::parse_expr("(* K1 K2)"), bank, {"a.jpg", "b.jpg", "c.jpg", "d.jpg", "e.jpg"});
  const auto path = std::filesystem::temp_directory_path() / "kf_test_index.kgm";
  kf::save_index(path, index);
  CHECK(std::filesystem::exists(path.string() + ".ids"));
  const kf::SimilarityIndex back = kf::load_index(path);
  CHECK(back.item_ids == index.item_ids);
  CHECK(back.similarity.matrix() == index.similarity.matrix());
  CHECK(back.expr == index.expr);
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".ids");
  CHECK(error_code([&] { (void)kf::load_index(path); }) == kf::Errc::io);
}
