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

// Gram matrices and the kernel algebra the GP function set is built from.
// Everything here is templated on the Eigen scalar type; the rest of the
// library instantiates it with double (see `Gram`).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kf/errors.hpp"

namespace kf {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Matrix = DenseMatrix<double>;
using FeatureMatrix = DenseMatrix<double>;

/// Symmetry tolerance used when constructing a Gram matrix.
inline constexpr double kSymmetryTol = 1e-10;
/// Default tolerance for check_psd (relative to the largest diagonal entry).
inline constexpr double kPsdTol = 1e-8;

/// A symmetric m-by-m similarity matrix. Immutable once built, so instances
/// can be shared read-only between threads.
template <typename Scalar>
class BasicGram {
 public:
  using MatrixType = DenseMatrix<Scalar>;

  BasicGram() = default;

  explicit BasicGram(MatrixType entries, std::string tag = {})
      : entries_(std::move(entries)), tag_(std::move(tag)) {
    if (entries_.rows() != entries_.cols()) {
      throw Error(Errc::shape, "gram matrix must be square, got " +
                                   std::to_string(entries_.rows()) + "x" +
                                   std::to_string(entries_.cols()));
    }
    if (!entries_.allFinite()) {
      throw Error(Errc::input, "gram matrix '" + tag_ + "' has non-finite entries");
    }
    const Scalar scale = std::max<Scalar>(Scalar(1), entries_.cwiseAbs().maxCoeff());
    if (entries_.size() > 0 &&
        (entries_ - entries_.transpose()).cwiseAbs().maxCoeff() > Scalar(kSymmetryTol) * scale) {
      throw Error(Errc::shape, "gram matrix '" + tag_ + "' is not symmetric");
    }
  }

  const MatrixType& matrix() const noexcept { return entries_; }
  Eigen::Index size() const noexcept { return entries_.rows(); }
  const std::string& tag() const noexcept { return tag_; }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

  BasicGram retagged(std::string tag) const {
    BasicGram copy = *this;
    copy.tag_ = std::move(tag);
    return copy;
  }

  friend bool operator==(const BasicGram& a, const BasicGram& b) {
    return a.entries_.rows() == b.entries_.rows() && a.entries_ == b.entries_;
  }

 private:
  MatrixType entries_;
  std::string tag_;
};

using Gram = BasicGram<double>;

/// An ordered set of n base kernels over the same m items.
template <typename Scalar>
class BasicKernelBank {
 public:
  using GramType = BasicGram<Scalar>;

  BasicKernelBank() = default;

  explicit BasicKernelBank(std::vector<GramType> kernels, std::vector<std::string> names = {})
      : kernels_(std::move(kernels)), names_(std::move(names)) {
    if (kernels_.empty()) throw Error(Errc::input, "kernel bank must hold at least one kernel");
    if (names_.empty()) {
      for (const auto& k : kernels_) names_.push_back(k.tag());
    }
    if (names_.size() != kernels_.size()) {
      throw Error(Errc::input, "kernel bank: name count does not match kernel count");
    }
    for (const auto& k : kernels_) {
      if (k.size() != kernels_.front().size()) {
        throw Error(Errc::shape, "kernel bank: kernels differ in size (" +
                                     std::to_string(k.size()) + " vs " +
                                     std::to_string(kernels_.front().size()) + ")");
      }
    }
  }

  std::size_t count() const noexcept { return kernels_.size(); }
  Eigen::Index items() const noexcept { return kernels_.empty() ? 0 : kernels_.front().size(); }
  const GramType& operator[](std::size_t i) const { return kernels_.at(i); }
  const std::vector<GramType>& kernels() const noexcept { return kernels_; }
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<GramType> kernels_;
  std::vector<std::string> names_;
};

using KernelBank = BasicKernelBank<double>;

namespace detail {

template <typename Derived>
void require_valid_features(const Eigen::MatrixBase<Derived>& features) {
  if (features.rows() < 2) {
    throw Error(Errc::degenerate, "feature matrix needs at least 2 rows, got " +
                                      std::to_string(features.rows()));
  }
  if (features.cols() < 1) throw Error(Errc::input, "feature matrix has no columns");
  if (!features.allFinite()) throw Error(Errc::input, "feature matrix has non-finite values");
}

template <typename Scalar>
void require_same_size(const BasicGram<Scalar>& a, const BasicGram<Scalar>& b) {
  if (a.size() != b.size()) {
    throw Error(Errc::shape, "gram size mismatch: " + std::to_string(a.size()) + " vs " +
                                 std::to_string(b.size()));
  }
}

}  // namespace detail

/// G[i,j] = exp(-gamma * |x_i - x_j|^2), with an exact unit diagonal.
template <typename Derived>
BasicGram<typename Derived::Scalar> gaussian_gram(const Eigen::MatrixBase<Derived>& features,
                                                  typename Derived::Scalar gamma,
                                                  std::string tag = {}) {
  using Scalar = typename Derived::Scalar;
  detail::require_valid_features(features);
  if (!(gamma > Scalar(0)) || !std::isfinite(gamma)) {
    throw Error(Errc::parameter, "gaussian gamma must be positive and finite");
  }
  const Eigen::Index m = features.rows();
  DenseMatrix<Scalar> g(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    g(i, i) = Scalar(1);
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const Scalar d2 = (features.row(i) - features.row(j)).squaredNorm();
      g(i, j) = g(j, i) = std::exp(-gamma * d2);
    }
  }
  return BasicGram<Scalar>(std::move(g), std::move(tag));
}

/// 1 / median of the nonzero pairwise squared distances.
template <typename Derived>
typename Derived::Scalar median_heuristic_gamma(const Eigen::MatrixBase<Derived>& features) {
  using Scalar = typename Derived::Scalar;
  detail::require_valid_features(features);
  const Eigen::Index m = features.rows();
  std::vector<Scalar> d2;
  d2.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const Scalar d = (features.row(i) - features.row(j)).squaredNorm();
      if (d > Scalar(0)) d2.push_back(d);
    }
  }
  if (d2.empty()) {
    throw Error(Errc::degenerate, "all pairwise feature distances are zero");
  }
  const std::size_t mid = d2.size() / 2;
  std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid), d2.end());
  Scalar median = d2[mid];
  if (d2.size() % 2 == 0) {
    const Scalar lower = *std::max_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid));
    median = (median + lower) / Scalar(2);
  }
  return Scalar(1) / median;
}

template <typename Scalar>
BasicGram<Scalar> add(const BasicGram<Scalar>& a, const BasicGram<Scalar>& b) {
  detail::require_same_size(a, b);
  return BasicGram<Scalar>(a.matrix() + b.matrix(), "(+ " + a.tag() + " " + b.tag() + ")");
}

/// Entrywise (Schur) product; closed over PSD matrices.
template <typename Scalar>
BasicGram<Scalar> multiply(const BasicGram<Scalar>& a, const BasicGram<Scalar>& b) {
  detail::require_same_size(a, b);
  return BasicGram<Scalar>(a.matrix().cwiseProduct(b.matrix()),
                           "(* " + a.tag() + " " + b.tag() + ")");
}

/// G'[i,j] = G[i,j] / sqrt(G[i,i] G[j,j]).
template <typename Scalar>
BasicGram<Scalar> normalize(const BasicGram<Scalar>& g) {
  const auto& k = g.matrix();
  const Eigen::Index m = k.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_sqrt(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(k(i, i) > Scalar(0))) {
      throw Error(Errc::degenerate, "cannot normalize '" + g.tag() + "': diagonal entry " +
                                        std::to_string(i) + " is not positive");
    }
    inv_sqrt(i) = Scalar(1) / std::sqrt(k(i, i));
  }
  DenseMatrix<Scalar> out = inv_sqrt.asDiagonal() * k * inv_sqrt.asDiagonal();
  out.diagonal().setOnes();
  // keep exact symmetry after rounding
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) out(j, i) = out(i, j);
  return BasicGram<Scalar>(std::move(out), g.tag());
}

/// True iff the smallest eigenvalue is >= -tol * max(1, largest diagonal entry).
template <typename Derived>
bool check_psd(const Eigen::MatrixBase<Derived>& k, double tol = kPsdTol) {
  using Scalar = typename Derived::Scalar;
  if (k.rows() != k.cols()) throw Error(Errc::shape, "check_psd: matrix is not square");
  if (k.size() == 0) return true;
  const Scalar scale = std::max<Scalar>(Scalar(1), k.cwiseAbs().maxCoeff());
  if ((k - k.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-8) * scale) {
    throw Error(Errc::shape, "check_psd: matrix is not symmetric");
  }
  const Scalar diag_scale = std::max<Scalar>(Scalar(1), k.diagonal().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> solver(
      k.eval(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error(Errc::numerical, "check_psd: eigenvalue iteration did not converge");
  }
  return solver.eigenvalues().minCoeff() >= -Scalar(tol) * diag_scale;
}

template <typename Scalar>
bool check_psd(const BasicGram<Scalar>& g, double tol = kPsdTol) {
  return check_psd(g.matrix(), tol);
}

/// Sub-matrix G[rows x cols]; no symmetry requirement on the result.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> slice(const Eigen::MatrixBase<Derived>& k,
                                            std::span<const std::size_t> rows,
                                            std::span<const std::size_t> cols) {
  const auto check = [](std::span<const std::size_t> idx, Eigen::Index limit) {
    for (std::size_t i : idx) {
      if (i >= static_cast<std::size_t>(limit)) {
        throw Error(Errc::index, "slice index " + std::to_string(i) + " out of range [0, " +
                                     std::to_string(limit) + ")");
      }
    }
  };
  check(rows, k.rows());
  check(cols, k.cols());
  DenseMatrix<typename Derived::Scalar> out(static_cast<Eigen::Index>(rows.size()),
                                            static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = k.row(static_cast<Eigen::Index>(rows[r]));
    for (std::size_t c = 0; c < cols.size(); ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          src(static_cast<Eigen::Index>(cols[c]));
    }
  }
  return out;
}

template <typename Scalar>
DenseMatrix<Scalar> slice(const BasicGram<Scalar>& g, std::span<const std::size_t> rows,
                          std::span<const std::size_t> cols) {
  return slice(g.matrix(), rows, cols);
}

/// Restricts a Gram matrix to the items in `idx` (rows and columns).
template <typename Scalar>
BasicGram<Scalar> restrict_to(const BasicGram<Scalar>& g, std::span<const std::size_t> idx) {
  return BasicGram<Scalar>(slice(g.matrix(), idx, idx), g.tag());
}

template <typename Scalar>
BasicKernelBank<Scalar> restrict_to(const BasicKernelBank<Scalar>& bank,
                                    std::span<const std::size_t> idx) {
  std::vector<BasicGram<Scalar>> kernels;
  kernels.reserve(bank.count());
  for (const auto& k : bank.kernels()) kernels.push_back(restrict_to(k, idx));
  return BasicKernelBank<Scalar>(std::move(kernels), bank.names());
}

}  // namespace kf
