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

// C-SVM on precomputed kernels. The solver never sees feature vectors:
// every entry point takes Gram blocks (train x train, query x train).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "kf/kernel.hpp"
#include "kf/rng.hpp"

namespace kf {

struct SvmParams {
  double C = 10.0;
  double kkt_tol = 1e-3;
  /// Update budget is max_passes * (training set size) pair steps.
  std::size_t max_passes = 1000;
  double eps = 1e-12;
  /// Seeds the scan order used to break ties between equal violators.
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const SvmParams&, const SvmParams&) = default;
};

struct SvmModel {
  std::vector<double> alpha;  // one per training point, in [0, C]
  double bias = 0.0;
  std::vector<std::size_t> support_idx;  // alpha > eps
  std::vector<int> train_labels;         // +1 / -1
  bool converged = true;
  std::size_t iterations = 0;
};

/// Maximizes sum(a) - 1/2 a'(yy' o K)a subject to 0 <= a <= C, a'y = 0 by
/// SMO pair updates on the maximal violating pair. Non-convergence within
/// the update budget returns the best-effort model with converged = false.
SvmModel train_binary(const Eigen::Ref<const Matrix>& train_gram, std::span<const int> labels,
                      const SvmParams& params, Rng& rng);

/// f(x) = sum_i a_i y_i K(x, x_i) + b for each row of `cross_gram` (q x m_t).
Eigen::VectorXd decision(const SvmModel& model, const Eigen::Ref<const Matrix>& cross_gram);

double dual_objective(std::span<const double> alpha, std::span<const int> labels,
                      const Eigen::Ref<const Matrix>& train_gram);
double dual_objective(const SvmModel& model, const Eigen::Ref<const Matrix>& train_gram);

/// Largest KKT violation over training points, measured on y_i f(x_i).
double kkt_residual(const SvmModel& model, const Eigen::Ref<const Matrix>& train_gram,
                    double C);

struct PairModel {
  int negative_class = 0;  // smaller class id, mapped to -1
  int positive_class = 0;
  std::vector<std::size_t> train_idx;  // global item indices, in training order
  SvmModel model;
};

struct MulticlassModel {
  std::vector<int> class_labels;  // sorted ascending
  std::vector<PairModel> pairs;   // (a, b) with a < b, lexicographic order
  SvmParams params;

  bool converged() const;
};

/// One binary model per unordered class pair, each trained on the rows and
/// columns of `gram` belonging to that pair's training points. `labels`
/// covers all m items; only those in `train_idx` are used.
MulticlassModel train_multiclass(const Eigen::Ref<const Matrix>& gram, std::span<const int> labels,
                                 std::span<const std::size_t> train_idx, const SvmParams& params,
                                 std::size_t threads = 1);

/// Decision values of every pair model for query rows (q x m, columns over
/// all items). Result is q x pairs.
Matrix pair_decisions(const MulticlassModel& model, const Eigen::Ref<const Matrix>& rows);

/// 1-vs-1 voting. Ties go to the class with the larger summed |f| over the
/// votes it won, then to the smaller class id.
std::vector<int> predict(const MulticlassModel& model, const Eigen::Ref<const Matrix>& rows);

double accuracy(std::span<const int> predicted, std::span<const int> actual);

void to_json(nlohmann::json& j, const SvmParams& p);
void from_json(const nlohmann::json& j, SvmParams& p);
void to_json(nlohmann::json& j, const SvmModel& m);
void from_json(const nlohmann::json& j, SvmModel& m);
void to_json(nlohmann::json& j, const PairModel& m);
void from_json(const nlohmann::json& j, PairModel& m);
void to_json(nlohmann::json& j, const MulticlassModel& m);
void from_json(const nlohmann::json& j, MulticlassModel& m);

}  // namespace kf
