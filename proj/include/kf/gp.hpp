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

// Genetic programming over kernel-combination trees: initialization,
// variation operators, SVM-accuracy fitness and the generational loop.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kf/expr.hpp"
#include "kf/rng.hpp"
#include "kf/split.hpp"
#include "kf/svm.hpp"

namespace kf {

enum class FitnessMode { validation, k_fold, leave_one_out };

struct FitnessOptions {
  FitnessMode mode = FitnessMode::validation;
  std::size_t folds = 5;  // k_fold only

  friend bool operator==(const FitnessOptions&, const FitnessOptions&) = default;
};

struct GpParams {
  std::size_t population_size = 50;
  std::size_t max_generations = 30;
  double crossover_rate = 0.9;
  double mutation_rate = 0.1;
  std::size_t tournament_size = 3;
  std::size_t max_depth = 6;
  std::size_t init_depth_min = 2;
  std::size_t init_depth_max = 4;
  std::size_t stagnation_limit = 5;
  std::size_t elitism = 1;
  std::uint64_t rng_seed = 0;
  FitnessOptions fitness;
  /// Put every single-kernel chromosome K1..Kn into generation 0.
  bool seed_leaves = true;

  void validate() const;
  friend bool operator==(const GpParams&, const GpParams&) = default;
};

std::string to_string(FitnessMode mode);
/// "validation", "leave_one_out", "k_fold" or "k_fold:<k>".
FitnessOptions parse_fitness_mode(std::string_view text);

enum class InitMethod { full, grow };

/// Full trees have every leaf at exactly `depth`; grow trees stop early at
/// random (depth <= `depth`, root is internal whenever depth > 1).
KernelExpr generate_tree(InitMethod method, std::size_t depth, std::size_t n, Rng& rng);

/// One random tree, depth drawn from the init range, full or grow with
/// equal probability.
KernelExpr random_tree(const GpParams& params, std::size_t n, Rng& rng);

/// Ramped half-and-half over the init depth range, with the n single-leaf
/// trees injected first when seed_leaves is set.
std::vector<KernelExpr> initial_population(const GpParams& params, std::size_t n, Rng& rng);

/// Index of the winner among k candidates drawn with replacement. When
/// k >= population size every individual takes part. Ties go to the
/// smaller tree (if `node_counts` is given), then to the lower index.
std::size_t tournament_select(std::span<const double> fitnesses,
                              std::span<const std::size_t> node_counts, std::size_t k, Rng& rng);
std::size_t tournament_select(std::span<const double> fitnesses, std::size_t k, Rng& rng);

/// Swaps a uniformly chosen subtree of `a` with one of `b`. A child deeper
/// than max_depth is replaced by its own parent.
std::pair<KernelExpr, KernelExpr> crossover(const KernelExpr& a, const KernelExpr& b, Rng& rng,
                                            std::size_t max_depth);

enum class MutationKind { point, swap_op, subtree };

KernelExpr mutate(const KernelExpr& expr, MutationKind kind, Rng& rng, const GpParams& params,
                  std::size_t n);
/// Picks one of the three mutation kinds with equal probability.
KernelExpr mutate(const KernelExpr& expr, Rng& rng, const GpParams& params, std::size_t n);

/// Accuracy in [0, 1] of an SVM built on the evaluated kernel: validation
/// accuracy, or cross-validated accuracy over train+validation. Solver
/// failures score 0 and are logged.
double fitness(const KernelExpr& expr, const KernelBank& bank, std::span<const int> labels,
               const DatasetSplit& split, const SvmParams& svm,
               const FitnessOptions& options = {});

/// Same computation on an already evaluated Gram matrix.
double kernel_fitness(const Eigen::Ref<const Matrix>& gram, std::span<const int> labels,
                      const DatasetSplit& split, const SvmParams& svm,
                      const FitnessOptions& options = {});

struct GenerationStats {
  std::size_t generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  std::string best_expr;

  friend bool operator==(const GenerationStats&, const GenerationStats&) = default;
};

struct EvolutionResult {
  KernelExpr best_expr;
  double best_fitness = 0.0;
  std::vector<GenerationStats> per_generation;
  /// Accuracy of the final model (trained on train+validation) on the test
  /// set; empty when the split has no test points.
  std::optional<double> final_test_accuracy;
  std::size_t fitness_evaluations = 0;

  friend bool operator==(const EvolutionResult&, const EvolutionResult&) = default;
};

/// Generational GP with elitism; stops after max_generations or when the
/// best fitness has not improved by more than 1e-6 for stagnation_limit
/// generations. Fitness evaluation runs on `threads` workers; the result
/// does not depend on the thread count.
EvolutionResult evolve(const KernelBank& bank, std::span<const int> labels,
                       const DatasetSplit& split, const GpParams& params, const SvmParams& svm,
                       std::size_t threads = 1);

/// generation,best_fitness,mean_fitness,best_expr
std::string evolution_log_csv(const EvolutionResult& result);

void to_json(nlohmann::json& j, const GpParams& p);
void from_json(const nlohmann::json& j, GpParams& p);
void to_json(nlohmann::json& j, const GenerationStats& s);
void from_json(const nlohmann::json& j, GenerationStats& s);

}  // namespace kf
