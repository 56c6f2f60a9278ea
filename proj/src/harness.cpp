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

#include "kf/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "kf/kernel_io.hpp"
#include "kf/parallel.hpp"

namespace kf {
namespace {

constexpr const char* kMethodNames[] = {"addition", "best_single", "evolved"};
constexpr const char* kMethodTitles[] = {"Addition of Kernels", "Best Kernel", "Non-Linear Kernel"};

std::vector<std::size_t> all_indices(Eigen::Index m) {
  std::vector<std::size_t> out(static_cast<std::size_t>(m));
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

struct RepeatOutcome {
  TestScore score[3];
  std::string selection[3];
  double validation[3] = {0.0, 0.0, 0.0};
  std::vector<GenerationStats> generations;
};

SvmParams with_selected_c(const Eigen::Ref<const Matrix>& gram, std::span<const int> labels,
                          const DatasetSplit& split, const SvmParams& svm, bool grid) {
  SvmParams out = svm;
  if (grid) out.C = select_c(gram, labels, split, svm);
  return out;
}

}  // namespace

std::vector<DatasetSplit> make_splits(std::span<const int> labels, std::size_t per_class_train,
                                      std::size_t per_class_val, std::size_t repeats,
                                      std::uint64_t seed) {
  if (repeats < 1) throw Error(Errc::parameter, "protocol.repeats must be at least 1");
  if (per_class_val < 1 || per_class_val >= per_class_train) {
    throw Error(Errc::parameter,
                "protocol.per_class_val must be at least 1 and smaller than protocol.per_class_train");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  if (by_class.size() < 2) throw Error(Errc::input, "make_splits: need at least two classes");
  for (const auto& [label, members] : by_class) {
    if (members.size() <= per_class_train) {
      throw Error(Errc::input, fmt::format("class {} has {} members; needs more than {} "
                                           "(per_class_train) to leave a test set",
                                           label, members.size(), per_class_train));
    }
  }

  std::vector<DatasetSplit> splits;
  splits.reserve(repeats);
  for (std::size_t r = 0; r < repeats; ++r) {
    DatasetSplit split;
    split.seed = derive_seed(seed, static_cast<std::uint64_t>(r));
    Rng rng(split.seed);
    for (const auto& [label, members] : by_class) {
      std::vector<std::size_t> shuffled = members;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      for (std::size_t k = 0; k < shuffled.size(); ++k) {
        if (k < per_class_val) {
          split.val_idx.push_back(shuffled[k]);
        } else if (k < per_class_train) {
          split.train_idx.push_back(shuffled[k]);
        } else {
          split.test_idx.push_back(shuffled[k]);
        }
      }
    }
    std::sort(split.train_idx.begin(), split.train_idx.end());
    std::sort(split.val_idx.begin(), split.val_idx.end());
    std::sort(split.test_idx.begin(), split.test_idx.end());
    splits.push_back(std::move(split));
  }
  return splits;
}

Gram addition_kernel(const KernelBank& bank) { return evaluate(sum_of_leaves(bank.count()), bank); }

std::pair<std::size_t, double> best_single_kernel(const KernelBank& bank, std::span<const int> labels,
                                                  const DatasetSplit& split, const SvmParams& svm,
                                                  const FitnessOptions& options) {
  std::size_t best = 0;
  double best_fit = -1.0;
  for (std::size_t k = 0; k < bank.count(); ++k) {
    const double f = fitness(KernelExpr::leaf(k), bank, labels, split, svm, options);
    if (f > best_fit) {
      best = k;
      best_fit = f;
    }
  }
  return {best, best_fit};
}

TestScore score_on_test(const Eigen::Ref<const Matrix>& gram, std::span<const int> labels,
                        std::span<const std::size_t> train, std::span<const std::size_t> test,
                        const SvmParams& svm) {
  if (test.empty()) throw Error(Errc::input, "score_on_test: empty test set");
  const MulticlassModel model = train_multiclass(gram, labels, train, svm);
  if (!model.converged()) spdlog::warn("final SVM did not reach kkt_tol; using best-effort model");
  const Matrix rows = slice(gram, test, all_indices(gram.cols()));
  const std::vector<int> truth = gather(labels, test);

  TestScore out;
  out.accuracy = accuracy(predict(model, rows), truth);
  const Matrix f = pair_decisions(model, rows);
  for (std::size_t p = 0; p < model.pairs.size(); ++p) {
    const PairModel& pair = model.pairs[p];
    std::size_t hits = 0, total = 0;
    for (std::size_t q = 0; q < truth.size(); ++q) {
      if (truth[q] != pair.negative_class && truth[q] != pair.positive_class) continue;
      const double v = f(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(p));
      const int guess = v >= 0.0 ? pair.positive_class : pair.negative_class;
      hits += guess == truth[q] ? 1 : 0;
      ++total;
    }
    out.pair_accuracy.push_back(total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0);
  }
  return out;
}

double select_c(const Eigen::Ref<const Matrix>& gram, std::span<const int> labels,
                const DatasetSplit& split, const SvmParams& svm) {
  double best_c = svm.C;
  double best = -1.0;
  for (double c : {0.1, 1.0, 10.0, 100.0}) {
    SvmParams trial = svm;
    trial.C = c;
    double acc = 0.0;
    try {
      acc = kernel_fitness(gram, labels, split, trial);
    } catch (const Error& e) {
      if (e.code() != Errc::numerical) throw;
    }
    if (acc > best) {
      best = acc;
      best_c = c;
    }
  }
  return best_c;
}

std::pair<double, double> mean_std(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

const MethodResult& ComparisonReport::method(std::string_view name) const {
  for (const auto& m : methods)
    if (m.name == name) return m;
  throw Error(Errc::lookup, fmt::format("report has no method '{}'", name));
}

ComparisonReport run_comparison(const KernelBank& bank, std::span<const int> labels,
                                const ComparisonConfig& config) {
  if (labels.size() != static_cast<std::size_t>(bank.items())) {
    throw Error(Errc::input, fmt::format("{} labels for {} items", labels.size(), bank.items()));
  }
  config.gp.validate();
  config.svm.validate();
  const ProtocolConfig& protocol = config.protocol;
  const std::vector<DatasetSplit> splits =
      make_splits(labels, protocol.per_class_train, protocol.per_class_val, protocol.repeats,
                  derive_seed(config.seed, "splits"));

  SvmParams svm = config.svm;
  svm.seed = derive_seed(config.seed, "svm");
  const std::uint64_t gp_seed = derive_seed(config.seed, "gp");

  const std::size_t threads = resolve_threads(config.threads);
  const std::size_t outer = std::min(threads, splits.size());
  const std::size_t inner = std::max<std::size_t>(1, threads / std::max<std::size_t>(outer, 1));

  const Gram addition = addition_kernel(bank);
  std::vector<RepeatOutcome> outcomes(splits.size());
  parallel_for(splits.size(), outer, [&](std::size_t r) {
    const DatasetSplit& split = splits[r];
    try {
      validate_split(split, labels, true);
      const std::vector<std::size_t> pool = split.pool();
      for (std::size_t t : split.test_idx) {
        if (std::binary_search(pool.begin(), pool.end(), t)) {
          throw Error(Errc::input, fmt::format("test index {} leaked into the model pool", t));
        }
      }
      RepeatOutcome& out = outcomes[r];

      const SvmParams add_svm = with_selected_c(addition.matrix(), labels, split, svm, protocol.grid_search_c);
      out.score[0] = score_on_test(addition.matrix(), labels, pool, split.test_idx, add_svm);
      out.selection[0] = canonical_string(sum_of_leaves(bank.count()));
      out.validation[0] = kernel_fitness(addition.matrix(), labels, split, svm, config.gp.fitness);

      const auto [best, best_fit] = best_single_kernel(bank, labels, split, svm, config.gp.fitness);
      const SvmParams best_svm = with_selected_c(bank[best].matrix(), labels, split, svm, protocol.grid_search_c);
      out.score[1] = score_on_test(bank[best].matrix(), labels, pool, split.test_idx, best_svm);
      out.selection[1] = canonical_string(KernelExpr::leaf(best));
      out.validation[1] = best_fit;

      GpParams gp = config.gp;
      gp.rng_seed = derive_seed(gp_seed, static_cast<std::uint64_t>(r));
      const EvolutionResult evolved = evolve(bank, labels, split, gp, svm, inner);
      const Gram evolved_gram = evaluate(evolved.best_expr, bank);
      const SvmParams evo_svm = with_selected_c(evolved_gram.matrix(), labels, split, svm, protocol.grid_search_c);
      out.score[2] = score_on_test(evolved_gram.matrix(), labels, pool, split.test_idx, evo_svm);
      out.selection[2] = canonical_string(evolved.best_expr);
      out.validation[2] = evolved.best_fitness;
      out.generations = evolved.per_generation;

      spdlog::info("repeat {}: addition {:.4f}, best single ({}) {:.4f}, evolved {} {:.4f}", r,
                   out.score[0].accuracy, out.selection[1], out.score[1].accuracy, out.selection[2],
                   out.score[2].accuracy);
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("repeat {} failed: {}", r, e.what()));
    }
  });

  ComparisonReport report;
  report.repeats = splits.size();
  report.config = {{"seed", config.seed},
                   {"protocol", protocol},
                   {"gp", config.gp},
                   {"svm", config.svm},
                   {"kernels", bank.names()},
                   {"items", bank.items()}};
  std::set<int> classes(labels.begin(), labels.end());
  for (auto a = classes.begin(); a != classes.end(); ++a)
    for (auto b = std::next(a); b != classes.end(); ++b) report.class_pairs.emplace_back(*a, *b);

  for (int m = 0; m < 3; ++m) {
    MethodResult method;
    method.name = kMethodNames[m];
    for (const auto& out : outcomes) {
      method.test_accuracy.push_back(out.score[m].accuracy);
      method.pair_accuracy.push_back(out.score[m].pair_accuracy);
      method.selection.push_back(out.selection[m]);
      method.validation_fitness.push_back(out.validation[m]);
    }
    std::tie(method.mean, method.std) = mean_std(method.test_accuracy);
    report.methods.push_back(std::move(method));
  }
  for (auto& out : outcomes) report.generations.push_back(std::move(out.generations));
  return report;
}

std::string summary_table(const ComparisonReport& report) {
  std::string out = fmt::format("{:<22} {}\n", "Kernel", "Accuracy (%)");
  for (int m = 0; m < 3; ++m) {
    const MethodResult& r = report.method(kMethodNames[m]);
    out += fmt::format("{:<22} {:.2f}±{:.2f}\n", kMethodTitles[m], 100.0 * r.mean, 100.0 * r.std);
  }
  out += fmt::format("({} repeat{})\n", report.repeats, report.repeats == 1 ? "" : "s");
  return out;
}

std::string summary_csv(const ComparisonReport& report) {
  std::string out = "method,mean,std,formatted\n";
  for (const auto& m : report.methods) {
    out += fmt::format("{},{},{},{:.2f}±{:.2f}\n", m.name, m.mean, m.std, 100.0 * m.mean, 100.0 * m.std);
  }
  return out;
}

std::string iterations_csv(const ComparisonReport& report) {
  std::string out = "method,repeat,accuracy\n";
  for (const auto& m : report.methods)
    for (std::size_t r = 0; r < m.test_accuracy.size(); ++r)
      out += fmt::format("{},{},{}\n", m.name, r, m.test_accuracy[r]);
  return out;
}

std::string generations_csv(const ComparisonReport& report) {
  std::size_t longest = 0;
  for (const auto& g : report.generations) longest = std::max(longest, g.size());
  std::string out = "generation,mean_best_fitness,mean_mean_fitness\n";
  for (std::size_t gen = 0; gen < longest; ++gen) {
    double best = 0.0, mean = 0.0;
    for (const auto& g : report.generations) {
      // Runs that stopped early hold their last generation.
      const GenerationStats& s = g[std::min(gen, g.size() - 1)];
      best += s.best_fitness;
      mean += s.mean_fitness;
    }
    const double n = static_cast<double>(report.generations.size());
    out += fmt::format("{},{},{}\n", gen, best / n, mean / n);
  }
  return out;
}

std::string binary_csv(const ComparisonReport& report) {
  std::string out = "method,pair,class_a,class_b,mean_accuracy\n";
  for (const auto& m : report.methods) {
    for (std::size_t p = 0; p < report.class_pairs.size(); ++p) {
      double sum = 0.0;
      std::size_t count = 0;
      for (const auto& per_repeat : m.pair_accuracy) {
        if (p < per_repeat.size()) {
          sum += per_repeat[p];
          ++count;
        }
      }
      out += fmt::format("{},{},{},{},{}\n", m.name, p + 1, report.class_pairs[p].first,
                         report.class_pairs[p].second, count ? sum / static_cast<double>(count) : 0.0);
    }
  }
  return out;
}

void write_report(const std::filesystem::path& dir, const ComparisonReport& report) {
  std::filesystem::create_directories(dir);
  write_file(dir / "report.json", nlohmann::json(report).dump(2) + "\n");
  write_file(dir / "summary.txt", summary_table(report));
  write_file(dir / "summary.csv", summary_csv(report));
  write_file(dir / "iterations.csv", iterations_csv(report));
  write_file(dir / "generations.csv", generations_csv(report));
  write_file(dir / "binary.csv", binary_csv(report));
  for (std::size_t r = 0; r < report.generations.size(); ++r) {
    EvolutionResult log;
    log.per_generation = report.generations[r];
    write_file(dir / fmt::format("evolution_repeat{}.csv", r), evolution_log_csv(log));
  }
}

void to_json(nlohmann::json& j, const ProtocolConfig& p) {
  j = {{"per_class_train", p.per_class_train},
       {"per_class_val", p.per_class_val},
       {"repeats", p.repeats},
       {"grid_search_c", p.grid_search_c}};
}

void from_json(const nlohmann::json& j, ProtocolConfig& p) {
  j.at("per_class_train").get_to(p.per_class_train);
  j.at("per_class_val").get_to(p.per_class_val);
  j.at("repeats").get_to(p.repeats);
  j.at("grid_search_c").get_to(p.grid_search_c);
}

void to_json(nlohmann::json& j, const MethodResult& m) {
  j = {{"name", m.name},
       {"test_accuracy", m.test_accuracy},
       {"mean", m.mean},
       {"std", m.std},
       {"pair_accuracy", m.pair_accuracy},
       {"selection", m.selection},
       {"validation_fitness", m.validation_fitness}};
}

void from_json(const nlohmann::json& j, MethodResult& m) {
  j.at("name").get_to(m.name);
  j.at("test_accuracy").get_to(m.test_accuracy);
  j.at("mean").get_to(m.mean);
  j.at("std").get_to(m.std);
  j.at("pair_accuracy").get_to(m.pair_accuracy);
  j.at("selection").get_to(m.selection);
  j.at("validation_fitness").get_to(m.validation_fitness);
}

void to_json(nlohmann::json& j, const ComparisonReport& r) {
  j = {{"schema", r.schema},           {"config", r.config},   {"repeats", r.repeats},
       {"class_pairs", r.class_pairs}, {"methods", r.methods}, {"generations", r.generations}};
}

void from_json(const nlohmann::json& j, ComparisonReport& r) {
  j.at("schema").get_to(r.schema);
  if (r.schema != kReportSchema) {
    throw Error(Errc::input, fmt::format("unsupported report schema '{}'", r.schema));
  }
  r.config = j.at("config");
  j.at("repeats").get_to(r.repeats);
  j.at("class_pairs").get_to(r.class_pairs);
  j.at("methods").get_to(r.methods);
  j.at("generations").get_to(r.generations);
}

}  // namespace kf
