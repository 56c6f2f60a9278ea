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

#include "kf/expr.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

namespace kf {

KernelExpr KernelExpr::leaf(std::size_t kernel) {
  return KernelExpr(std::vector<Node>{Node{Op::leaf, static_cast<std::uint32_t>(kernel)}});
}

KernelExpr KernelExpr::binary(Op op, const KernelExpr& left, const KernelExpr& right) {
  if (op == Op::leaf) throw Error(Errc::expression, "binary node needs + or *");
  std::vector<Node> nodes;
  nodes.reserve(1 + left.nodes_.size() + right.nodes_.size());
  nodes.push_back(Node{op, 0});
  nodes.insert(nodes.end(), left.nodes_.begin(), left.nodes_.end());
  nodes.insert(nodes.end(), right.nodes_.begin(), right.nodes_.end());
  return KernelExpr(std::move(nodes));
}

KernelExpr KernelExpr::add(const KernelExpr& left, const KernelExpr& right) {
  return binary(Op::add, left, right);
}

KernelExpr KernelExpr::mul(const KernelExpr& left, const KernelExpr& right) {
  return binary(Op::mul, left, right);
}

KernelExpr KernelExpr::from_nodes(std::vector<Node> nodes) {
  // A prefix array is well formed iff the open-slot count hits zero exactly
  // at the last node.
  std::size_t open = 1;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (open == 0) throw Error(Errc::expression, "trailing nodes after a complete tree");
    open += nodes[i].op == Op::leaf ? 0 : 2;
    open -= 1;
    if (nodes[i].op != Op::leaf) nodes[i].kernel = 0;
  }
  if (nodes.empty() || open != 0) throw Error(Errc::expression, "incomplete expression tree");
  return KernelExpr(std::move(nodes));
}

std::size_t KernelExpr::subtree_end(std::size_t pos) const {
  if (pos >= nodes_.size()) throw Error(Errc::index, "subtree position out of range");
  std::size_t open = 1;
  std::size_t i = pos;
  while (open > 0) {
    open += nodes_[i].op == Op::leaf ? 0 : 2;
    open -= 1;
    ++i;
  }
  return i;
}

std::size_t KernelExpr::depth() const {
  // Walk the prefix array tracking the depth of each pending child slot.
  std::vector<std::size_t> pending{1};
  std::size_t deepest = 0;
  for (const Node& node : nodes_) {
    const std::size_t level = pending.back();
    pending.pop_back();
    deepest = std::max(deepest, level);
    if (node.op != Op::leaf) {
      pending.push_back(level + 1);
      pending.push_back(level + 1);
    }
  }
  return deepest;
}

std::size_t KernelExpr::level_of(std::size_t pos) const {
  if (pos >= nodes_.size()) throw Error(Errc::index, "node position out of range");
  std::vector<std::size_t> pending{1};
  for (std::size_t i = 0;; ++i) {
    const std::size_t level = pending.back();
    pending.pop_back();
    if (i == pos) return level;
    if (nodes_[i].op != Op::leaf) {
      pending.push_back(level + 1);
      pending.push_back(level + 1);
    }
  }
}

std::size_t KernelExpr::kernels_referenced() const noexcept {
  std::size_t n = 0;
  for (const Node& node : nodes_)
    if (node.op == Op::leaf) n = std::max<std::size_t>(n, node.kernel + 1);
  return n;
}

KernelExpr KernelExpr::subtree(std::size_t pos) const {
  const std::size_t end = subtree_end(pos);
  return KernelExpr(std::vector<Node>(nodes_.begin() + static_cast<std::ptrdiff_t>(pos),
                                      nodes_.begin() + static_cast<std::ptrdiff_t>(end)));
}

KernelExpr KernelExpr::with_subtree(std::size_t pos, const KernelExpr& replacement) const {
  const std::size_t end = subtree_end(pos);
  std::vector<Node> nodes;
  nodes.reserve(nodes_.size() - (end - pos) + replacement.nodes_.size());
  nodes.insert(nodes.end(), nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(pos));
  nodes.insert(nodes.end(), replacement.nodes_.begin(), replacement.nodes_.end());
  nodes.insert(nodes.end(), nodes_.begin() + static_cast<std::ptrdiff_t>(end), nodes_.end());
  return KernelExpr(std::move(nodes));
}

namespace {

char op_symbol(Op op) { return op == Op::add ? '+' : '*'; }

std::string print(const KernelExpr& expr, std::size_t pos, bool sorted) {
  const Node& node = expr.nodes()[pos];
  if (node.op == Op::leaf) return fmt::format("K{}", node.kernel + 1);
  std::string left = print(expr, pos + 1, sorted);
  std::string right = print(expr, expr.right_child(pos), sorted);
  if (sorted && right < left) std::swap(left, right);
  return fmt::format("({} {} {})", op_symbol(node.op), left, right);
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  KernelExpr parse() {
    KernelExpr expr = parse_node();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return expr;
  }

 private:
  [[noreturn]] void fail(std::string_view what) const {
    throw Error(Errc::parse, fmt::format("parse error at position {}: {}", pos_, what));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  KernelExpr parse_node() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      skip_space();
      if (pos_ >= text_.size()) fail("expected operator");
      Op op;
      if (text_[pos_] == '+') {
        op = Op::add;
      } else if (text_[pos_] == '*') {
        op = Op::mul;
      } else {
        fail(fmt::format("expected '+' or '*', found '{}'", text_[pos_]));
      }
      ++pos_;
      if (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
          text_[pos_] != '(') {
        fail("expected whitespace after operator");
      }
      KernelExpr left = parse_node();
      KernelExpr right = parse_node();
      skip_space();
      if (pos_ >= text_.size() || text_[pos_] != ')') fail("expected ')'");
      ++pos_;
      return KernelExpr::binary(op, left, right);
    }
    if (c == 'K' || c == 'k') {
      ++pos_;
      const std::size_t start = pos_;
      std::size_t value = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        value = value * 10 + static_cast<std::size_t>(text_[pos_] - '0');
        if (value > 0xffffffffULL) fail("kernel index too large");
        ++pos_;
      }
      if (pos_ == start) fail("expected kernel number after 'K'");
      if (value == 0) {
        pos_ = start;
        fail("kernel names are 1-based (K1, K2, ...)");
      }
      return KernelExpr::leaf(value - 1);
    }
    fail(fmt::format("unexpected character '{}'", c));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

KernelExpr canonical_at(const KernelExpr& expr, std::size_t pos) {
  const Node& node = expr.nodes()[pos];
  if (node.op == Op::leaf) return KernelExpr::leaf(node.kernel);
  KernelExpr left = canonical_at(expr, pos + 1);
  KernelExpr right = canonical_at(expr, expr.right_child(pos));
  if (canonical_string(right) < canonical_string(left)) std::swap(left, right);
  return KernelExpr::binary(node.op, left, right);
}

void render(const KernelExpr& expr, std::size_t pos, std::span<const std::string> names,
            const std::string& indent, bool last, bool root, std::string& out) {
  const Node& node = expr.nodes()[pos];
  out += indent;
  if (!root) out += last ? "`-- " : "|-- ";
  if (node.op == Op::leaf) {
    out += fmt::format("K{}", node.kernel + 1);
    if (node.kernel < names.size()) out += fmt::format(" [{}]", names[node.kernel]);
    out += '\n';
    return;
  }
  out += node.op == Op::add ? "+\n" : "*\n";
  const std::string child_indent = root ? indent : indent + (last ? "    " : "|   ");
  render(expr, pos + 1, names, child_indent, false, false, out);
  render(expr, expr.right_child(pos), names, child_indent, true, false, out);
}

}  // namespace

std::string canonical_string(const KernelExpr& expr) { return print(expr, 0, true); }

std::string to_string(const KernelExpr& expr) { return print(expr, 0, false); }

KernelExpr canonicalize(const KernelExpr& expr) { return canonical_at(expr, 0); }

KernelExpr parse_expr(std::string_view text) { return Parser(text).parse(); }

std::string render_tree(const KernelExpr& expr, std::span<const std::string> names) {
  std::string out;
  render(expr, 0, names, "", true, true, out);
  return out;
}

KernelExpr sum_of_leaves(std::size_t n) {
  if (n == 0) throw Error(Errc::parameter, "sum_of_leaves needs at least one kernel");
  KernelExpr expr = KernelExpr::leaf(0);
  for (std::size_t k = 1; k < n; ++k) expr = KernelExpr::add(expr, KernelExpr::leaf(k));
  return expr;
}

}  // namespace kf
