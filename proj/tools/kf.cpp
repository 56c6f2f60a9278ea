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

// kf: evolve non-linear kernel combinations and compare them against the
// addition kernel and the best single kernel.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "kf/commands.hpp"
#include "kf/kernel_io.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("kf");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("KF_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
}

int report_error(std::string_view kind, std::string_view message, int code) {
  const nlohmann::json doc = {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  std::cerr << doc.dump() << '\n';
  return code;
}

struct CommonOptions {
  std::optional<std::string> config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_file, "Run configuration file (key = value lines)");
  cmd->add_option("--set", o.sets, "Override a config key: --set gp.population_size=80")->allow_extra_args(false);
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("-o,--out", o.out, "Output directory");
  cmd->add_option("--threads", o.threads, "Worker threads (default: all cores)");
}

kf::RunConfig build_config(const CommonOptions& o, kf::ConfigEntries extra) {
  kf::ConfigEntries overrides;
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw kf::Error(kf::Errc::config, "--set expects KEY=VALUE, got '" + s + "'");
    overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  for (auto& e : extra) overrides.push_back(std::move(e));
  if (o.seed) overrides.emplace_back("seed", std::to_string(*o.seed));
  if (o.out) overrides.emplace_back("output.dir", *o.out);
  if (o.threads) overrides.emplace_back("threads", std::to_string(*o.threads));
  std::optional<std::filesystem::path> file;
  if (o.config_file) file = *o.config_file;
  return kf::load_config(file, overrides);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"kf - genetic programming over kernel combinations"};
  app.require_subcommand(1);
  CommonOptions common;
  app.add_option("--threads", common.threads, "Worker threads (default: all cores)");

  // gram
  auto* gram = app.add_subcommand("gram", "Build normalized Gaussian kernels from feature CSVs");
  add_common(gram, common);
  std::vector<std::string> features;
  bool header = false;
  std::optional<double> gamma;
  gram->add_option("features", features, "Feature CSV files (last column = class label)");
  gram->add_flag("--header", header, "Feature files start with a header row");
  gram->add_option("--gamma", gamma, "Gaussian gamma (default: median heuristic per descriptor)");

  // evolve / compare
  std::optional<std::string> manifest;
  auto* evolve = app.add_subcommand("evolve", "Evolve a kernel expression on one split");
  add_common(evolve, common);
  evolve->add_option("--manifest", manifest, "Kernel manifest written by 'kf gram'");
  auto* compare = app.add_subcommand("compare", "Addition vs best single vs evolved kernel over repeated splits");
  add_common(compare, common);
  compare->add_option("--manifest", manifest, "Kernel manifest written by 'kf gram'");

  // retrieve
  auto* retrieve = app.add_subcommand("retrieve", "Query (or build) a similarity index");
  std::string index_path, item, order_text = "similarity", expr_text, ids_file;
  std::size_t k = 5;
  bool build = false;
  retrieve->add_option("--index", index_path, "Index file (kernel binary format + .ids sidecar)")->required();
  retrieve->add_option("--item", item, "Item id or index");
  retrieve->add_option("--k", k, "Number of results");
  retrieve->add_option("--order", order_text, "similarity | paper-min");
  retrieve->add_flag("--build", build, "Build the index from --manifest and --expr instead of querying");
  retrieve->add_option("--manifest", manifest, "Kernel manifest (with --build)");
  retrieve->add_option("--expr", expr_text, "Kernel expression, e.g. \"(+ (* K1 K1) K5)\" (with --build)");
  retrieve->add_option("--ids", ids_file, "Item ids, one per line (with --build)");

  // inspect
  auto* inspect = app.add_subcommand("inspect", "Pretty-print a kernel expression file");
  std::string inspect_file, inspect_expr;
  std::optional<std::string> inspect_manifest;
  inspect->add_option("file", inspect_file, "File holding a kernel expression");
  inspect->add_option("--expr", inspect_expr, "Expression text instead of a file");
  inspect->add_option("--manifest", inspect_manifest, "Manifest used to label the leaves");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("config", e.what(), 2);
  }

  try {
    if (*gram) {
      kf::ConfigEntries extra;
      if (!features.empty()) {
        std::string joined;
        for (const auto& f : features) joined += (joined.empty() ? "" : ",") + f;
        extra.emplace_back("data.features", joined);
      }
      if (header) extra.emplace_back("data.header", "true");
      if (gamma) extra.emplace_back("kernel.gamma", std::to_string(*gamma));
      const auto path = kf::cmd_gram(build_config(common, std::move(extra)));
      std::cout << path.string() << '\n';
    } else if (*evolve || *compare) {
      kf::ConfigEntries extra;
      if (manifest) extra.emplace_back("data.manifest", *manifest);
      const kf::RunConfig config = build_config(common, std::move(extra));
      if (*evolve) {
        const auto result = kf::cmd_evolve(config);
        std::cout << kf::canonical_string(result.best_expr) << '\n';
      } else {
        const auto out = kf::cmd_compare(config);
        std::cout << kf::summary_table(out.report) << "written to " << out.run_dir.string() << '\n';
      }
    } else if (*retrieve) {
      if (build) {
        if (!manifest || expr_text.empty()) {
          throw kf::Error(kf::Errc::config, "--build needs --manifest and --expr");
        }
        const auto index = kf::cmd_build_index(*manifest, expr_text, ids_file, index_path);
        std::cout << index_path << ": " << index.size() << " items, M = "
                  << kf::canonical_string(*index.expr) << '\n';
      } else {
        if (item.empty()) throw kf::Error(kf::Errc::config, "--item is required");
        kf::cmd_retrieve(index_path, item, k, kf::parse_rank_order(order_text), std::cout);
      }
    } else if (*inspect) {
      std::string text = inspect_expr;
      if (text.empty()) {
        if (inspect_file.empty()) throw kf::Error(kf::Errc::config, "inspect needs a file or --expr");
        text = kf::read_file(inspect_file);
      }
      std::vector<std::string> names;
      if (inspect_manifest) names = kf::load_manifest(*inspect_manifest).bank.names();
      kf::cmd_inspect(text, std::cout, names);
    }
  } catch (const kf::Error& e) {
    return report_error(kf::errc_name(e.code()), e.what(), kf::exit_code(e.code()));
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 1);
  }
  return 0;
}
