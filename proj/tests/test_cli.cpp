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

#include <doctest.h>

#include <filesystem>
#include <sstream>

#include <fmt/format.h>

#include "kf/commands.hpp"
#include "kf/config.hpp"
#include "kf/kernel_io.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

kf::Errc error_code(const auto& fn) {
  try {
    fn();
  } catch (const kf::Error& e) {
    return e.code();
  }
  FAIL("no kf::Error thrown");
  return kf::Errc::input;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Writes one feature CSV per descriptor; all share the label column.
std::vector<fs::path> write_descriptors(const fs::path& dir, std::size_t count, std::size_t per_class,
                                        kf::Rng& rng) {
  std::normal_distribution<double> noise(0.0, 0.3);
  std::vector<fs::path> files;
  for (std::size_t d = 0; d < count; ++d) {
    std::string text;
    for (int cls = 0; cls < 3; ++cls) {
      for (std::size_t i = 0; i < per_class; ++i) {
        text += fmt::format("{},{},{}\n", cls * (d % 2 == 0 ? 1.0 : 0.2) + noise(rng), noise(rng), cls);
      }
    }
    files.push_back(dir / fmt::format("desc{}.csv", d));
    kf::write_file(files.back(), text);
  }
  return files;
}

std::string read(const fs::path& p) { return kf::read_file(p); }

}  // namespace

TEST_CASE("config text parsing") {
  const kf::ConfigEntries e = kf::parse_config_text("# run\nseed = 5\n\ngp.population_size=20  # small\n");
  REQUIRE(e.size() == 2);
  CHECK(e[0] == std::pair<std::string, std::string>{"seed", "5"});
  CHECK(e[1] == std::pair<std::string, std::string>{"gp.population_size", "20"});
  CHECK(error_code([] { (void)kf::parse_config_text("seed 5\n"); }) == kf::Errc::config);
  CHECK(error_code([] { (void)kf::parse_config_text("= 5\n"); }) == kf::Errc::config);
}

TEST_CASE("unknown keys and bad values are rejected") {
  kf::RunConfig c;
  CHECK(error_code([&] { kf::apply_config_value(c, "gp.populaton_size", "10"); }) == kf::Errc::config);
  CHECK(error_code([&] { kf::apply_config_value(c, "gp.population_size", "ten"); }) == kf::Errc::config);
  CHECK(error_code([&] { kf::apply_config_value(c, "svm.C", "1e"); }) == kf::Errc::config);
  CHECK(error_code([&] { kf::apply_config_value(c, "gp.fitness_mode", "bagging"); }) == kf::Errc::config);
  kf::apply_config_value(c, "gp.fitness_mode", "k_fold:4");
  CHECK(c.gp.fitness.mode == kf::FitnessMode::k_fold);
  CHECK(c.gp.fitness.folds == 4);
  kf::apply_config_value(c, "kernel.gamma", "0.5");
  CHECK(c.gamma == 0.5);
  kf::apply_config_value(c, "kernel.gamma", "median");
  CHECK(!c.gamma.has_value());
  kf::apply_config_value(c, "protocol.grid_search_c", "true");
  CHECK(c.protocol.grid_search_c);

  // Every advertised key accepts a value of its own type.
  for (const std::string& key : kf::known_config_keys()) CHECK(!key.empty());
}

TEST_CASE("precedence: overrides beat the file, the file beats defaults") {
  TempDir tmp("kf_cli_precedence");
  const fs::path file = tmp.path / "run.cfg";
  kf::write_file(file, "seed = 3\ngp.population_size = 20\nsvm.C = 2.5\n");
  const kf::RunConfig c = kf::load_config(file, {{"gp.population_size", "30"}});
  CHECK(c.seed == 3u);
  CHECK(c.gp.population_size == 30);
  CHECK(c.svm.C == 2.5);
  CHECK(c.gp.max_generations == kf::GpParams{}.max_generations);
  CHECK(error_code([&] { (void)kf::load_config(tmp.path / "missing.cfg", {}); }) == kf::Errc::config);
}

TEST_CASE("validation before compute") {
  TempDir tmp("kf_cli_validate");
  kf::RunConfig c;
  c.manifest = tmp.path / "manifest.json";
  kf::write_file(c.manifest, "{}");
  CHECK(error_code([&] { kf::validate_config(c, kf::Command::evolve); }) == kf::Errc::config);
  c.seed = 1;
  CHECK_NOTHROW(kf::validate_config(c, kf::Command::evolve));
  c.gp.tournament_size = 500;
  CHECK(error_code([&] { kf::validate_config(c, kf::Command::compare); }) == kf::Errc::config);
  c.gp.tournament_size = 3;
  c.manifest = tmp.path / "nope.json";
  CHECK(error_code([&] { kf::validate_config(c, kf::Command::compare); }) == kf::Errc::config);
  kf::RunConfig g;
  CHECK(error_code([&] { kf::validate_config(g, kf::Command::gram); }) == kf::Errc::config);
}

TEST_CASE("gram, evolve, compare, retrieve end to end") {
  TempDir tmp("kf_cli_pipeline");
  kf::Rng rng(1);
  kf::RunConfig c;
  c.features = write_descriptors(tmp.path, 5, 10, rng);
  c.output_dir = tmp.path / "kernels";
  c.seed = 9;
  c.threads = 1;
  const fs::path manifest = kf::cmd_gram(c);
  CHECK(manifest == c.output_dir / "manifest.json");
  const nlohmann::json mj = nlohmann::json::parse(read(manifest));
  CHECK(mj.at("n") == 5);
  CHECK(mj.at("m") == 30);
  CHECK(mj.at("schema") == "kf-manifest-1");
  for (int d = 0; d < 5; ++d) {
    const kf::Gram g = kf::read_kernel_binary(c.output_dir / fmt::format("desc{}.kgm", d));
    CHECK(g.size() == 30);
    CHECK(g.tag() == fmt::format("desc{}", d));
    for (Eigen::Index i = 0; i < 30; ++i) CHECK(g(i, i) == 1.0);
  }

  SUBCASE("reruns are byte-identical") {
    const std::string before = read(c.output_dir / "desc0.kgm");
    const std::string manifest_before = read(manifest);
    (void)kf::cmd_gram(c);
    CHECK(read(c.output_dir / "desc0.kgm") == before);
    CHECK(read(manifest) == manifest_before);
  }

  SUBCASE("evolve writes its outputs") {
    kf::RunConfig e = c;
    e.manifest = manifest;
    e.output_dir = tmp.path / "evolve";
    e.gp.population_size = 10;
    e.gp.max_generations = 3;
    e.protocol.per_class_train = 6;
    e.protocol.per_class_val = 2;
    const kf::EvolutionResult r = kf::cmd_evolve(e);
    const std::string best = read(e.output_dir / "best_expr.txt");
    CHECK(kf::parse_expr(best) == kf::parse_expr(kf::canonical_string(r.best_expr)));
    CHECK(fs::exists(e.output_dir / "evolution.csv"));
    CHECK(fs::exists(e.output_dir / "model.json"));
    const nlohmann::json result = nlohmann::json::parse(read(e.output_dir / "result.json"));
    CHECK(result.contains("final_test_accuracy"));
    CHECK(kf::cmd_evolve(e) == r);
  }

  SUBCASE("compare writes a run directory") {
    kf::RunConfig e = c;
    e.manifest = manifest;
    e.output_dir = tmp.path / "compare";
    e.gp.population_size = 8;
    e.gp.max_generations = 2;
    e.protocol.per_class_train = 6;
    e.protocol.per_class_val = 2;
    e.protocol.repeats = 1;
    const kf::CompareOutput out = kf::cmd_compare(e);
    CHECK(out.run_dir.parent_path() == e.output_dir);
    CHECK(out.run_dir.filename().string().starts_with("run-"));
    CHECK(out.run_dir.filename().string().find("-seed9") != std::string::npos);
    CHECK(fs::exists(out.run_dir / "report.json"));
    CHECK(out.report.methods.size() == 3);
    for (const auto& m : out.report.methods) CHECK(m.std == 0.0);
    const kf::CompareOutput again = kf::cmd_compare(e);
    CHECK(again.run_dir != out.run_dir);
    CHECK(read(again.run_dir / "report.json") == read(out.run_dir / "report.json"));
  }

  SUBCASE("retrieve") {
    const fs::path ids = tmp.path / "ids.txt";
    std::string text;
    for (int i = 0; i < 30; ++i) text += fmt::format("img{:02}.jpg\n", i);
    kf::write_file(ids, text);
    const fs::path index_path = tmp.path / "index.kgm";
    const kf::SimilarityIndex index = kf::cmd_build_index(manifest, "(+ (* K1 K1) K3)", ids, index_path);
    CHECK(index.item_ids[3] == "img03.jpg");
    CHECK(kf::resolve_item(index, "img05.jpg") == 5);
    CHECK(kf::resolve_item(index, "7") == 7);
    try {
      (void)kf::resolve_item(index, "img5.jpg");
      FAIL("expected a lookup error");
    } catch (const kf::Error& e) {
      CHECK(e.code() == kf::Errc::lookup);
      CHECK(std::string(e.what()).find("img05.jpg") != std::string::npos);
    }

    std::ostringstream out;
    kf::cmd_retrieve(index_path, "img00.jpg", 3, kf::RankOrder::similarity, out);
    const std::vector<kf::Match> expected = kf::query(index, 0, 3);
    std::string want = "rank,item_id,score\n";
    for (std::size_t r = 0; r < expected.size(); ++r) {
      want += fmt::format("{},{},{}\n", r + 1, index.item_ids[expected[r].item], expected[r].score);
    }
    CHECK(out.str() == want);
  }
}

TEST_CASE("gram errors") {
  TempDir tmp("kf_cli_gram_errors");
  kf::RunConfig c;
  c.output_dir = tmp.path / "out";
  c.features = {tmp.path / "one.csv"};
  kf::write_file(c.features[0], "0.5,1.0,0\n");
  CHECK(error_code([&] { (void)kf::cmd_gram(c); }) == kf::Errc::degenerate);

  kf::write_file(tmp.path / "a.csv", "0,0\n1,1\n2,0\n");
  kf::write_file(tmp.path / "b.csv", "0,0\n1,1\n");
  c.features = {tmp.path / "a.csv", tmp.path / "b.csv"};
  try {
    (void)kf::cmd_gram(c);
    FAIL("expected a row-count error");
  } catch (const kf::Error& e) {
    CHECK(e.code() == kf::Errc::input);
    CHECK(std::string(e.what()).find("a.csv") != std::string::npos);
    CHECK(std::string(e.what()).find("b.csv") != std::string::npos);
  }
}

TEST_CASE("single-kernel evolve picks K1") {
  TempDir tmp("kf_cli_single");
  kf::Rng rng(2);
  kf::RunConfig c;
  c.features = write_descriptors(tmp.path, 1, 8, rng);
  c.output_dir = tmp.path / "k";
  c.seed = 4;
  c.threads = 1;
  kf::RunConfig e = c;
  e.manifest = kf::cmd_gram(c);
  e.output_dir = tmp.path / "e";
  e.gp.population_size = 6;
  e.gp.max_generations = 2;
  e.gp.max_depth = 1;
  e.gp.init_depth_min = e.gp.init_depth_max = 1;
  e.protocol.per_class_train = 5;
  e.protocol.per_class_val = 2;
  CHECK(kf::canonical_string(kf::cmd_evolve(e).best_expr) == "K1");
  CHECK(read(e.output_dir / "best_expr.txt").starts_with("K1"));
}

TEST_CASE("inspect") {
  std::ostringstream out;
  kf::cmd_inspect("(+ K2 (* K1 K1))\n", out, {"sift", "csift"});
  const std::string text = out.str();
  CHECK(text.find("canonical: (+ (* K1 K1) K2)") != std::string::npos);
  CHECK(text.find("depth: 3") != std::string::npos);
  CHECK(text.find("[csift]") != std::string::npos);
  std::ostringstream sink;
  CHECK(error_code([&] { kf::cmd_inspect("(+ K1", sink); }) == kf::Errc::parse);
}
