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

#include "kf/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>

#include <fmt/format.h>

#include "kf/kernel_io.hpp"

namespace kf {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw Error(Errc::config, fmt::format("{}: '{}' is not {}", key, value, expected));
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    bad_value(key, value, std::is_integral_v<T> ? "a non-negative integer" : "a number");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value, "a boolean");
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;
    t["seed"] = [](RunConfig& c, auto k, auto v) { c.seed = parse_number<std::uint64_t>(k, v); };
    t["threads"] = [](RunConfig& c, auto k, auto v) { c.threads = parse_number<std::size_t>(k, v); };
    t["output.dir"] = [](RunConfig& c, auto, auto v) { c.output_dir = std::string(v); };
    t["data.features"] = [](RunConfig& c, auto, auto v) {
      c.features.clear();
      std::size_t start = 0;
      for (;;) {
        const auto pos = v.find(',', start);
        const auto item = trim(v.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (!item.empty()) c.features.emplace_back(std::string(item));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
      }
    };
    t["data.header"] = [](RunConfig& c, auto k, auto v) { c.features_header = parse_bool(k, v); };
    t["data.manifest"] = [](RunConfig& c, auto, auto v) { c.manifest = std::string(v); };
    t["data.labels"] = [](RunConfig& c, auto, auto v) { c.labels = std::string(v); };
    t["kernel.gamma"] = [](RunConfig& c, auto k, auto v) {
      if (v == "auto" || v == "median") {
        c.gamma.reset();
      } else {
        c.gamma = parse_number<double>(k, v);
      }
    };
    t["gp.population_size"] = [](RunConfig& c, auto k, auto v) { c.gp.population_size = parse_number<std::size_t>(k, v); };
    t["gp.max_generations"] = [](RunConfig& c, auto k, auto v) { c.gp.max_generations = parse_number<std::size_t>(k, v); };
    t["gp.crossover_rate"] = [](RunConfig& c, auto k, auto v) { c.gp.crossover_rate = parse_number<double>(k, v); };
    t["gp.mutation_rate"] = [](RunConfig& c, auto k, auto v) { c.gp.mutation_rate = parse_number<double>(k, v); };
    t["gp.tournament_size"] = [](RunConfig& c, auto k, auto v) { c.gp.tournament_size = parse_number<std::size_t>(k, v); };
    t["gp.max_depth"] = [](RunConfig& c, auto k, auto v) { c.gp.max_depth = parse_number<std::size_t>(k, v); };
    t["gp.init_depth_min"] = [](RunConfig& c, auto k, auto v) { c.gp.init_depth_min = parse_number<std::size_t>(k, v); };
    t["gp.init_depth_max"] = [](RunConfig& c, auto k, auto v) { c.gp.init_depth_max = parse_number<std::size_t>(k, v); };
    t["gp.stagnation_limit"] = [](RunConfig& c, auto k, auto v) { c.gp.stagnation_limit = parse_number<std::size_t>(k, v); };
    t["gp.elitism"] = [](RunConfig& c, auto k, auto v) { c.gp.elitism = parse_number<std::size_t>(k, v); };
    t["gp.fitness_mode"] = [](RunConfig& c, auto, auto v) { c.gp.fitness = parse_fitness_mode(v); };
    t["gp.seed_leaves"] = [](RunConfig& c, auto k, auto v) { c.gp.seed_leaves = parse_bool(k, v); };
    t["svm.C"] = [](RunConfig& c, auto k, auto v) { c.svm.C = parse_number<double>(k, v); };
    t["svm.kkt_tol"] = [](RunConfig& c, auto k, auto v) { c.svm.kkt_tol = parse_number<double>(k, v); };
    t["svm.max_passes"] = [](RunConfig& c, auto k, auto v) { c.svm.max_passes = parse_number<std::size_t>(k, v); };
    t["svm.eps"] = [](RunConfig& c, auto k, auto v) { c.svm.eps = parse_number<double>(k, v); };
    t["protocol.per_class_train"] = [](RunConfig& c, auto k, auto v) { c.protocol.per_class_train = parse_number<std::size_t>(k, v); };
    t["protocol.per_class_val"] = [](RunConfig& c, auto k, auto v) { c.protocol.per_class_val = parse_number<std::size_t>(k, v); };
    t["protocol.repeats"] = [](RunConfig& c, auto k, auto v) { c.protocol.repeats = parse_number<std::size_t>(k, v); };
    t["protocol.grid_search_c"] = [](RunConfig& c, auto k, auto v) { c.protocol.grid_search_c = parse_bool(k, v); };
    return t;
  }();
  return table;
}

void require_file(const std::filesystem::path& path, std::string_view key) {
  if (path.empty()) throw Error(Errc::config, fmt::format("{} is required", key));
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(Errc::config, fmt::format("{}: file not found: {}", key, path.string()));
  }
}

}  // namespace

ConfigEntries parse_config_text(std::string_view text, std::string_view source) {
  ConfigEntries out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? end : end - start);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw Error(Errc::config, fmt::format("{}:{}: expected 'key = value'", source, line_no));
      }
      const auto key = trim(line.substr(0, eq));
      if (key.empty()) throw Error(Errc::config, fmt::format("{}:{}: empty key", source, line_no));
      out.emplace_back(std::string(key), std::string(trim(line.substr(eq + 1))));
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

void apply_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw Error(Errc::config, fmt::format("unknown config key '{}'", key));
  it->second(config, key, trim(value));
}

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, setter] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

RunConfig load_config(const std::optional<std::filesystem::path>& file, const ConfigEntries& overrides) {
  RunConfig config;
  if (file) {
    if (!std::filesystem::is_regular_file(*file)) {
      throw Error(Errc::config, "config file not found: " + file->string());
    }
    for (const auto& [k, v] : parse_config_text(read_file(*file), file->string())) apply_config_value(config, k, v);
  }
  for (const auto& [k, v] : overrides) apply_config_value(config, k, v);
  return config;
}

void validate_config(const RunConfig& config, Command command) {
  const auto as_config_error = [](const auto& check) {
    try {
      check();
    } catch (const Error& e) {
      if (e.code() == Errc::config) throw;
      throw Error(Errc::config, e.what());
    }
  };
  switch (command) {
    case Command::gram:
      if (config.features.empty()) throw Error(Errc::config, "data.features is required");
      for (const auto& f : config.features) require_file(f, "data.features");
      if (config.gamma && !(*config.gamma > 0.0)) throw Error(Errc::config, "kernel.gamma must be positive");
      break;
    case Command::evolve:
    case Command::compare:
      if (!config.seed) throw Error(Errc::config, "seed is required (no wall-clock default)");
      require_file(config.manifest, "data.manifest");
      if (!config.labels.empty()) require_file(config.labels, "data.labels");
      as_config_error([&] { config.gp.validate(); });
      as_config_error([&] { config.svm.validate(); });
      if (config.protocol.repeats < 1) throw Error(Errc::config, "protocol.repeats must be at least 1");
      if (config.protocol.per_class_val < 1 ||
          config.protocol.per_class_val >= config.protocol.per_class_train) {
        throw Error(Errc::config,
                    "protocol.per_class_val must be at least 1 and below protocol.per_class_train");
      }
      break;
  }
}

}  // namespace kf
