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

// Repeated-split protocol comparing the addition kernel, the best single
// kernel and the evolved kernel, plus the report/CSV emitters.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kf/gp.hpp"
#include "kf/split.hpp"
#include "kf/svm.hpp"

namespace kf {

inline constexpr const char* kReportSchema = "kf-report-1";

/// Stratified splits: per class, `per_class_train` members are sampled into
/// the model pool (of which `per_class_val` become validation) and the rest
/// form the test set. Each repeat draws from its own seeded stream.
std::vector<DatasetSplit> make_splits(std::span<const int> labels, std::size_t per_class_train,
                                      std::size_t per_class_val, std::size_t repeats,
                                      std::uint64_t seed);

/// Unweighted entrywise sum of every kernel in the bank.
Gram addition_kernel(const KernelBank& bank);

/// Index and validation accuracy of the best base kernel (ties: lower index).
std::pair<std::size_t, double> best_single_kernel(const KernelBank& bank, std::span<const int> labels,
                                                  const DatasetSplit& split, const SvmParams& svm,
                                                  const FitnessOptions& options = {});

struct TestScore {
  double accuracy = 0.0;
  /// Accuracy of each pair classifier on the test points of its two classes.
  std::vector<double> pair_accuracy;
};

/// Trains a 1-vs-1 model on `train` and scores it on `test`.
TestScore score_on_test(const Eigen::Ref<const Matrix>& gram, std::span<const int> labels,
                        std::span<const std::size_t> train, std::span<const std::size_t> test,
                        const SvmParams& svm);

/// Picks C from {0.1, 1, 10, 100} by validation accuracy (ties: first).
double select_c(const Eigen::Ref<const Matrix>& gram, std::span<const int> labels,
                const DatasetSplit& split, const SvmParams& svm);

struct ProtocolConfig {
  std::size_t per_class_train = 15;
  std::size_t per_class_val = 5;
  std::size_t repeats = 10;
  bool grid_search_c = false;

  friend bool operator==(const ProtocolConfig&, const ProtocolConfig&) = default;
};

struct ComparisonConfig {
  ProtocolConfig protocol;
  GpParams gp;
  SvmParams svm;
  /// Master seed; split, GP and SVM seeds are derived from it.
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct MethodResult {
  std::string name;
  std::vector<double> test_accuracy;               // per repeat
  double mean = 0.0;
  double std = 0.0;                                 // sample (n-1)
  std::vector<std::vector<double>> pair_accuracy;  // per repeat, per class pair
  std::vector<std::string> selection;               // kernel name or expression per repeat
  std::vector<double> validation_fitness;           // per repeat

  friend bool operator==(const MethodResult&, const MethodResult&) = default;
};

struct ComparisonReport {
  std::string schema = kReportSchema;
  nlohmann::json config;
  std::size_t repeats = 0;
  std::vector<std::pair<int, int>> class_pairs;
  std::vector<MethodResult> methods;  // addition, best_single, evolved
  std::vector<std::vector<GenerationStats>> generations;  // per repeat

  const MethodResult& method(std::string_view name) const;
  friend bool operator==(const ComparisonReport&, const ComparisonReport&) = default;
};

ComparisonReport run_comparison(const KernelBank& bank, std::span<const int> labels,
                                const ComparisonConfig& config);

/// Sample mean and (n-1) standard deviation; std is 0 for a single value.
std::pair<double, double> mean_std(std::span<const double> values);

std::string summary_table(const ComparisonReport& report);
std::string summary_csv(const ComparisonReport& report);
/// method,repeat,accuracy: one row per repeat per method.
std::string iterations_csv(const ComparisonReport& report);
/// generation,mean_best_fitness,mean_mean_fitness over repeats.
std::string generations_csv(const ComparisonReport& report);
/// method,pair,class_a,class_b,mean_accuracy.
std::string binary_csv(const ComparisonReport& report);

/// Writes report.json, summary.txt, summary.csv, iterations.csv,
/// generations.csv, binary.csv and evolution_repeat<r>.csv into `dir`.
void write_report(const std::filesystem::path& dir, const ComparisonReport& report);

void to_json(nlohmann::json& j, const ProtocolConfig& p);
void from_json(const nlohmann::json& j, ProtocolConfig& p);
void to_json(nlohmann::json& j, const MethodResult& m);
void from_json(const nlohmann::json& j, MethodResult& m);
void to_json(nlohmann::json& j, const ComparisonReport& r);
void from_json(const nlohmann::json& j, ComparisonReport& r);

}  // namespace kf
