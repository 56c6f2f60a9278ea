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

#include "kf/commands.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <map>
#include <ostream>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "kf/kernel_io.hpp"

namespace kf {
namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y%m%dT%H%M%SZ", &tm);
  return buffer;
}

LoadedBank bank_for(const RunConfig& config) {
  LoadedBank loaded = load_manifest(config.manifest, config.labels);
  if (loaded.labels.size() != static_cast<std::size_t>(loaded.bank.items())) {
    throw Error(Errc::input, fmt::format("{} labels for {} items", loaded.labels.size(), loaded.bank.items()));
  }
  return loaded;
}

}  // namespace

LoadedBank load_manifest(const std::filesystem::path& manifest,
                         const std::filesystem::path& labels_override) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(manifest));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::input, fmt::format("{}: {}", manifest.string(), e.what()));
  }
  if (doc.value("schema", "") != kManifestSchema) {
    throw Error(Errc::input, fmt::format("{}: not a {} manifest", manifest.string(), kManifestSchema));
  }
  const auto base = manifest.parent_path();
  std::vector<Gram> kernels;
  std::vector<std::string> names;
  for (const auto& entry : doc.at("kernels")) {
    const std::filesystem::path file = base / entry.at("file").get<std::string>();
    kernels.push_back(file.extension() == ".csv" ? read_kernel_csv(file, entry.at("name").get<std::string>())
                                                 : read_kernel_binary(file));
    names.push_back(entry.at("name").get<std::string>());
  }
  LoadedBank out{KernelBank(std::move(kernels), std::move(names)), {}};
  if (!labels_override.empty()) {
    out.labels = read_labels(labels_override);
  } else if (doc.contains("labels")) {
    out.labels = read_labels(base / doc.at("labels").get<std::string>());
  }
  return out;
}

std::filesystem::path cmd_gram(const RunConfig& config) {
  validate_config(config, Command::gram);
  const auto& out_dir = config.output_dir;
  std::vector<int> labels;
  Eigen::Index rows = -1;
  std::filesystem::path first;
  std::set<std::string> used_names;
  nlohmann::json manifest = {{"schema", kManifestSchema}};
  nlohmann::json entries = nlohmann::json::array();

  for (const auto& path : config.features) {
    const LabeledFeatures data = read_feature_csv(path, config.features_header);
    if (rows < 0) {
      rows = data.features.rows();
      labels = data.labels;
      first = path;
    } else if (data.features.rows() != rows) {
      throw Error(Errc::input, fmt::format("row count mismatch: {} has {} rows, {} has {}",
                                           first.string(), rows, path.string(), data.features.rows()));
    } else if (data.labels != labels) {
      throw Error(Errc::input, fmt::format("label column of {} disagrees with {}", path.string(), first.string()));
    }

    std::string name = path.stem().string();
    for (int suffix = 2; used_names.count(name); ++suffix) name = fmt::format("{}_{}", path.stem().string(), suffix);
    used_names.insert(name);

    const double gamma = config.gamma ? *config.gamma : median_heuristic_gamma(data.features);
    const Gram gram = normalize(gaussian_gram(data.features, gamma, name));
    const std::string file = name + ".kgm";
    write_kernel_binary(out_dir / file, gram);
    entries.push_back({{"name", name},
                       {"file", file},
                       {"source", path.filename().string()},
                       {"gamma", gamma},
                       {"rows", gram.size()},
                       {"cols", gram.size()},
                       {"dim", data.features.cols()}});
    spdlog::info("{}: {} items, {} features, gamma {}", name, gram.size(), data.features.cols(), gamma);
  }
  write_labels(out_dir / "labels.txt", labels);
  manifest["n"] = entries.size();
  manifest["m"] = rows;
  manifest["kernels"] = entries;
  manifest["labels"] = "labels.txt";
  const auto manifest_path = out_dir / "manifest.json";
  write_file(manifest_path, manifest.dump(2) + "\n");
  return manifest_path;
}

EvolutionResult cmd_evolve(const RunConfig& config) {
  validate_config(config, Command::evolve);
  const LoadedBank data = bank_for(config);
  const std::uint64_t seed = *config.seed;
  const DatasetSplit split = make_splits(data.labels, config.protocol.per_class_train,
                                         config.protocol.per_class_val, 1,
                                         derive_seed(seed, "splits"))
                                 .front();
  GpParams gp = config.gp;
  gp.rng_seed = derive_seed(seed, "gp");
  SvmParams svm = config.svm;
  svm.seed = derive_seed(seed, "svm");

  const EvolutionResult result = evolve(data.bank, data.labels, split, gp, svm, config.threads);

  const Gram gram = evaluate(result.best_expr, data.bank);
  const MulticlassModel model = train_multiclass(gram.matrix(), data.labels, split.pool(), svm, config.threads);

  const auto& dir = config.output_dir;
  const std::string expr = canonical_string(result.best_expr);
  write_file(dir / "best_expr.txt", expr + "\n");
  write_file(dir / "evolution.csv", evolution_log_csv(result));
  nlohmann::json summary = {{"best_expr", expr},
                            {"best_fitness", result.best_fitness},
                            {"final_test_accuracy", result.final_test_accuracy
                                                        ? nlohmann::json(*result.final_test_accuracy)
                                                        : nlohmann::json(nullptr)},
                            {"fitness_evaluations", result.fitness_evaluations},
                            {"generations", result.per_generation},
                            {"split", split},
                            {"gp", gp},
                            {"svm", svm},
                            {"seed", seed}};
  write_file(dir / "result.json", summary.dump(2) + "\n");
  nlohmann::json model_doc = {{"expr", expr}, {"kernels", data.bank.names()}, {"model", model}};
  write_file(dir / "model.json", model_doc.dump(2) + "\n");
  return result;
}

CompareOutput cmd_compare(const RunConfig& config) {
  validate_config(config, Command::compare);
  const LoadedBank data = bank_for(config);
  ComparisonConfig cc;
  cc.protocol = config.protocol;
  cc.gp = config.gp;
  cc.svm = config.svm;
  cc.seed = *config.seed;
  cc.threads = config.threads;

  CompareOutput out;
  out.report = run_comparison(data.bank, data.labels, cc);
  const std::string stem = fmt::format("run-{}-seed{}", utc_timestamp(), cc.seed);
  out.run_dir = config.output_dir / stem;
  for (int attempt = 2; std::filesystem::exists(out.run_dir); ++attempt) {
    out.run_dir = config.output_dir / fmt::format("{}-{}", stem, attempt);
  }
  write_report(out.run_dir, out.report);
  return out;
}

SimilarityIndex cmd_build_index(const std::filesystem::path& manifest, std::string_view expr,
                                const std::filesystem::path& ids_file,
                                const std::filesystem::path& index_path) {
  const LoadedBank data = load_manifest(manifest);
  std::vector<std::string> ids;
  if (!ids_file.empty()) ids = read_lines(ids_file);
  SimilarityIndex index = build_index(parse_expr(expr), data.bank, std::move(ids));
  save_index(index_path, index);
  return index;
}

std::size_t resolve_item(const SimilarityIndex& index, std::string_view item) {
  if (const auto found = index.find(item)) return *found;
  if (!item.empty() && std::all_of(item.begin(), item.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    const std::size_t i = std::stoull(std::string(item));
    if (i < index.size()) return i;
  }
  const auto near = nearest_ids(index, item);
  std::string list;
  for (const auto& id : near) list += (list.empty() ? "" : ", ") + id;
  throw Error(Errc::lookup, fmt::format("unknown item '{}'; closest ids: {}", item, list));
}

void cmd_retrieve(const std::filesystem::path& index_path, std::string_view item, std::size_t k,
                  RankOrder order, std::ostream& out) {
  const SimilarityIndex index = load_index(index_path);
  const std::size_t i = resolve_item(index, item);
  out << "rank,item_id,score\n";
  std::size_t rank = 1;
  for (const Match& m : query(index, i, k, order)) {
    out << fmt::format("{},{},{}\n", rank++, index.item_ids[m.item], m.score);
  }
}

void cmd_inspect(std::string_view expr_text, std::ostream& out, const std::vector<std::string>& names) {
  const KernelExpr expr = parse_expr(expr_text);
  std::set<std::size_t> leaves;
  for (const Node& node : expr.nodes())
    if (node.op == Op::leaf) leaves.insert(node.kernel);
  std::string used;
  for (std::size_t k : leaves) used += fmt::format("{}K{}", used.empty() ? "" : " ", k + 1);
  out << fmt::format("canonical: {}\ndepth: {}\nnodes: {}\nkernels: {}\n", canonical_string(expr),
                     expr.depth(), expr.node_count(), used);
  out << render_tree(expr, names);
}

}  // namespace kf
