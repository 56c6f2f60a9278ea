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

// Kernel-combination chromosomes: binary expression trees whose leaves are
// base-kernel indices and whose internal nodes are + (entrywise sum) or
// * (entrywise product). Trees are stored as a flat prefix-ordered node
// array, so every subtree is a contiguous range.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kf/kernel.hpp"

namespace kf {

enum class Op : std::uint8_t { leaf, add, mul };

struct Node {
  Op op = Op::leaf;
  std::uint32_t kernel = 0;  // only meaningful for leaves

  friend bool operator==(const Node&, const Node&) = default;
};

class KernelExpr {
 public:
  /// A single leaf referencing kernel 0.
  KernelExpr() : nodes_{Node{}} {}

  static KernelExpr leaf(std::size_t kernel);
  static KernelExpr add(const KernelExpr& left, const KernelExpr& right);
  static KernelExpr mul(const KernelExpr& left, const KernelExpr& right);
  static KernelExpr binary(Op op, const KernelExpr& left, const KernelExpr& right);

  /// Builds from prefix-ordered nodes; throws Errc::expression if malformed.
  static KernelExpr from_nodes(std::vector<Node> nodes);

  std::span<const Node> nodes() const noexcept { return nodes_; }
  const Node& root() const noexcept { return nodes_.front(); }
  bool is_leaf() const noexcept { return nodes_.size() == 1; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t depth() const;

  /// One past the last node of the subtree rooted at `pos`.
  std::size_t subtree_end(std::size_t pos) const;
  /// Depth of position `pos` counted from the root (root = 1).
  std::size_t level_of(std::size_t pos) const;
  /// Largest leaf index + 1.
  std::size_t kernels_referenced() const noexcept;

  KernelExpr subtree(std::size_t pos) const;
  KernelExpr with_subtree(std::size_t pos, const KernelExpr& replacement) const;
  /// Children of an internal node at `pos` (left starts at pos + 1).
  std::size_t right_child(std::size_t pos) const { return subtree_end(pos + 1); }

  friend bool operator==(const KernelExpr&, const KernelExpr&) = default;

 private:
  explicit KernelExpr(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  std::vector<Node> nodes_;
};

/// Prefix text with 1-based kernel names, e.g. "(+ (* K1 K1) K5)". Children
/// of each commutative node are printed in lexicographic order of their own
/// canonical text.
std::string canonical_string(const KernelExpr& expr);
/// Prefix text in stored child order.
std::string to_string(const KernelExpr& expr);
/// Reorders children so that parse_expr(canonical_string(e)) == canonicalize(e).
KernelExpr canonicalize(const KernelExpr& expr);
/// Inverse of canonical_string / to_string. Throws Errc::parse with the
/// character offset on malformed text.
KernelExpr parse_expr(std::string_view text);
/// Multi-line indented rendering used by `kf inspect`.
std::string render_tree(const KernelExpr& expr, std::span<const std::string> names = {});

/// Left-deep Add chain over K1..Kn.
KernelExpr sum_of_leaves(std::size_t n);

/// Folds the tree with add/multiply; the result is tagged with the
/// canonical string. Throws Errc::expression for out-of-range leaves.
template <typename Scalar>
BasicGram<Scalar> evaluate(const KernelExpr& expr, const BasicKernelBank<Scalar>& bank) {
  if (expr.kernels_referenced() > bank.count()) {
    throw Error(Errc::expression, "expression " + canonical_string(expr) + " references K" +
                                      std::to_string(expr.kernels_referenced()) +
                                      " but the bank holds " + std::to_string(bank.count()) +
                                      " kernels");
  }
  const auto nodes = expr.nodes();
  // Post-order over the prefix array with an explicit value stack.
  std::vector<DenseMatrix<Scalar>> stack;
  for (std::size_t i = nodes.size(); i-- > 0;) {
    const Node& node = nodes[i];
    if (node.op == Op::leaf) {
      stack.push_back(bank[node.kernel].matrix());
      continue;
    }
    DenseMatrix<Scalar> left = std::move(stack.back());
    stack.pop_back();
    DenseMatrix<Scalar>& right = stack.back();
    if (node.op == Op::add) {
      left += right;
    } else {
      left.array() *= right.array();
    }
    right = std::move(left);
  }
  return BasicGram<Scalar>(std::move(stack.back()), canonical_string(expr));
}

}  // namespace kf
