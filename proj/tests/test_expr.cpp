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

#include "kf/expr.hpp"
#include "kf/gp.hpp"
#include "oracles.hpp"

using kf::KernelExpr;

namespace {

const KernelExpr L0 = KernelExpr::leaf(0);
const KernelExpr L1 = KernelExpr::leaf(1);
const KernelExpr L4 = KernelExpr::leaf(4);

}  // namespace

TEST_CASE("canonical strings") {
  CHECK(kf::canonical_string(KernelExpr::leaf(2)) == "K3");
  CHECK(kf::canonical_string(KernelExpr::add(KernelExpr::mul(L0, L0), L4)) == "(+ (* K1 K1) K5)");
  CHECK(kf::canonical_string(kf::parse_expr("(+ K2 K1)")) == "(+ K1 K2)");
  CHECK(kf::to_string(kf::parse_expr("(+ K2 K1)")) == "(+ K2 K1)");
  CHECK(kf::canonicalize(kf::parse_expr("(* K3 (+ K2 K1))")) == kf::parse_expr("(* (+ K1 K2) K3)"));
}

TEST_CASE("parse errors report a position") {
  for (const char* bad : {"", "(", "(+ K1)", "(- K1 K2)", "K0", "(+ K1 K2) K3", "X1", "(+K1 K2)", "(+ K1 K2"}) {
    CAPTURE(bad);
    try {
      (void)kf::parse_expr(bad);
      FAIL("expected a parse error");
    } catch (const kf::Error& e) {
      CHECK(e.code() == kf::Errc::parse);
      CHECK(std::string(e.what()).find("position") != std::string::npos);
    }
  }
  CHECK(kf::parse_expr("  ( *  k1\n K2 )  ") == KernelExpr::mul(L0, L1));
}

TEST_CASE("tree structure queries") {
  const KernelExpr e = kf::parse_expr("(+ (+ (* K1 K1) (* K1 K2)) K5)");
  CHECK(e.depth() == 4);
  CHECK(e.node_count() == 9);
  CHECK(e.kernels_referenced() == 5);
  CHECK(e.subtree_end(0) == 9);
  CHECK(e.subtree_end(1) == 8);
  CHECK(e.level_of(0) == 1);
  CHECK(e.level_of(3) == 4);
  CHECK(e.level_of(8) == 2);
  CHECK(e.subtree(2) == KernelExpr::mul(L0, L0));
  CHECK(e.with_subtree(8, L1) == kf::parse_expr("(+ (+ (* K1 K1) (* K1 K2)) K2)"));
  CHECK(KernelExpr::leaf(3).depth() == 1);
  CHECK_THROWS_AS(KernelExpr::from_nodes({kf::Node{kf::Op::add, 0}}), kf::Error);
}

TEST_CASE("evaluate") {
  kf::Rng rng(9);
  const kf::KernelBank identities({kf::Gram(kf::Matrix::Identity(2, 2)), kf::Gram(kf::Matrix::Identity(2, 2))});
  CHECK(kf::evaluate(L0, identities).matrix() == kf::Matrix::Identity(2, 2));
  CHECK(kf::evaluate(KernelExpr::add(L0, L1), identities).matrix() == 2.0 * kf::Matrix::Identity(2, 2));
  CHECK(kf::evaluate(L0, identities).tag() == "K1");

  SUBCASE("square(K1) + K1*K2 + K5 entrywise") {
    std::vector<kf::Gram> kernels;
    for (int i = 0; i < 5; ++i) kernels.emplace_back(kf::testing::random_psd(3, rng));
    const kf::KernelBank bank(kernels);
    const KernelExpr m = KernelExpr::add(KernelExpr::add(KernelExpr::mul(L0, L0), KernelExpr::mul(L0, L1)), L4);
    const kf::Gram got = kf::evaluate(m, bank);
    CHECK(got.tag() == "(+ (+ (* K1 K1) (* K1 K2)) K5)");
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double k1 = kernels[0](i, j), k2 = kernels[1](i, j), k5 = kernels[4](i, j);
        CHECK(got(i, j) == doctest::Approx(k1 * k1 + k1 * k2 + k5).epsilon(1e-14));
      }
    }
  }

  CHECK_THROWS_AS(kf::evaluate(KernelExpr::leaf(2), identities), kf::Error);
  try {
    (void)kf::evaluate(KernelExpr::leaf(2), identities);
  } catch (const kf::Error& e) {
    CHECK(e.code() == kf::Errc::expression);
  }
}

TEST_CASE("sum_of_leaves is the left-deep addition chain") {
  CHECK(kf::canonical_string(kf::sum_of_leaves(1)) == "K1");
  CHECK(kf::to_string(kf::sum_of_leaves(3)) == "(+ (+ K1 K2) K3)");
}

TEST_CASE("render_tree") {
  const std::vector<std::string> names{"sift", "csift"};
  const std::string text = kf::render_tree(kf::parse_expr("(* K1 (+ K1 K2))"), names);
  CHECK(text == "*\n|-- K1 [sift]\n`-- +\n    |-- K1 [sift]\n    `-- K2 [csift]\n");
}

TEST_CASE("property: canonical round-trip and algebra consistency on random trees") {
  kf::Rng rng(31);
  kf::GpParams params;
  params.init_depth_min = 1;
  params.init_depth_max = 5;
  const kf::KernelBank bank = kf::testing::random_bank(4, 6, rng);
  for (int trial = 0; trial < 300; ++trial) {
    const KernelExpr e = kf::random_tree(params, 4, rng);
    const std::string text = kf::canonical_string(e);
    const KernelExpr back = kf::parse_expr(text);
    CHECK(back == kf::canonicalize(e));
    CHECK(kf::canonical_string(back) == text);
    CHECK(kf::parse_expr(kf::to_string(e)) == e);

    if (!e.is_leaf()) {
      const KernelExpr left = e.subtree(1);
      const KernelExpr right = e.subtree(e.right_child(0));
      const kf::Gram l = kf::evaluate(left, bank), r = kf::evaluate(right, bank);
      const kf::Gram whole = kf::evaluate(e, bank);
      const kf::Gram folded = e.root().op == kf::Op::add ? kf::add(l, r) : kf::multiply(l, r);
      CHECK(whole.matrix() == folded.matrix());
    }
    // Reordering commutative children does not change the kernel.
    CHECK((kf::evaluate(kf::canonicalize(e), bank).matrix() - kf::evaluate(e, bank).matrix()).cwiseAbs().maxCoeff() == 0.0);
  }
}
