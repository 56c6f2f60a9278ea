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

#include "kf/gp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "kf/parallel.hpp"

namespace kf {
namespace {

constexpr double kImprovementEps = 1e-6;

std::size_t uniform_index(std::size_t n, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

bool coin(double p, Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

Op random_op(Rng& rng) { return coin(0.5, rng) ? Op::add : Op::mul; }

KernelExpr grow_or_full(InitMethod method, std::size_t level, std::size_t depth, std::size_t n,
                        Rng& rng) {
  bool leaf = level >= depth;
  if (!leaf && method == InitMethod::grow && level > 1) leaf = coin(0.5, rng);
  if (leaf) return KernelExpr::leaf(uniform_index(n, rng));
  const Op op = random_op(rng);
  KernelExpr left = grow_or_full(method, level + 1, depth, n, rng);
  KernelExpr right = grow_or_full(method, level + 1, depth, n, rng);
  return KernelExpr::binary(op, left, right);
}

KernelExpr tree_in_range(InitMethod method, std::size_t depth, std::size_t min_depth,
                         std::size_t n, Rng& rng) {
  if (method == InitMethod::grow) {
    for (int attempt = 0; attempt < 32; ++attempt) {
      KernelExpr t = generate_tree(InitMethod::grow, depth, n, rng);
      if (t.depth() >= min_depth) return t;
    }
  }
  return generate_tree(InitMethod::full, depth, n, rng);
}

// Ordering used for elitism and reporting: fitter first, then smaller, then
// earlier.
bool ranks_before(double fa, std::size_t na, std::size_t ia, double fb, std::size_t nb,
                  std::size_t ib) {
  if (fa != fb) return fa > fb;
  if (na != nb) return na < nb;
  return ia < ib;
}

// Trains on `train`, predicts `held_out` and adds the number of correct
// predictions to `hits`.
void score_predictions(const Eigen::Ref<const Matrix>& gram, std::span<const int> labels,
                       std::span<const std::size_t> train, std::span<const std::size_t> held_out,
                       const SvmParams& svm, std::size_t& hits) {
  std::vector<std::size_t> all(static_cast<std::size_t>(gram.cols()));
  std::iota(all.begin(), all.end(), std::size_t{0});
  const std::vector<int> truth = gather(labels, held_out);
  std::vector<int> predicted;
  std::map<int, int> seen;
  for (std::size_t i : train) seen[labels[i]]++;
  if (seen.size() < 2) {
    // A fold whose training part holds one class can only predict that class.
    predicted.assign(held_out.size(), seen.empty() ? 0 : seen.begin()->first);
  } else {
    const MulticlassModel model = train_multiclass(gram, labels, train, svm);
    if (!model.converged()) throw Error(Errc::numerical, "SVM did not converge");
    predicted = predict(model, slice(gram, held_out, all));
  }
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
}

double cross_validated(const Eigen::Ref<const Matrix>& gram, std::span<const int> labels,
                       const DatasetSplit& split, const SvmParams& svm, std::size_t folds) {
  const std::vector<std::size_t> pool = split.pool();
  if (folds == 0 || folds > pool.size()) folds = pool.size();
  // Stratified fold assignment: members of each class dealt round-robin.
  std::vector<std::size_t> fold_of(pool.size());
  std::map<int, std::size_t> dealt;
  for (std::size_t p = 0; p < pool.size(); ++p) fold_of[p] = dealt[labels[pool[p]]]++ % folds;
  if (folds == pool.size()) std::iota(fold_of.begin(), fold_of.end(), std::size_t{0});

  std::size_t hits = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train, held_out;
    for (std::size_t p = 0; p < pool.size(); ++p) (fold_of[p] == f ? held_out : train).push_back(pool[p]);
    if (held_out.empty()) continue;
    score_predictions(gram, labels, train, held_out, svm, hits);
  }
  return static_cast<double>(hits) / static_cast<double>(pool.size());
}

}  // namespace

void GpParams::validate() const {
  const auto fail = [](const std::string& what) { throw Error(Errc::parameter, what); };
  if (population_size < 1) fail("gp.population_size must be at least 1");
  if (crossover_rate < 0.0 || crossover_rate > 1.0) fail("gp.crossover_rate must be in [0, 1]");
  if (mutation_rate < 0.0 || mutation_rate > 1.0) fail("gp.mutation_rate must be in [0, 1]");
  if (tournament_size < 1 || tournament_size > population_size) {
    fail("gp.tournament_size must be in [1, population_size]");
  }
  if (max_depth < 1) fail("gp.max_depth must be at least 1");
  if (init_depth_min < 1 || init_depth_min > init_depth_max) {
    fail("gp.init_depth_min must be in [1, gp.init_depth_max]");
  }
  if (init_depth_max > max_depth) fail("gp.init_depth_max exceeds gp.max_depth");
  if (elitism >= population_size) fail("gp.elitism must be smaller than gp.population_size");
  if (stagnation_limit < 1) fail("gp.stagnation_limit must be at least 1");
  if (fitness.mode == FitnessMode::k_fold && fitness.folds < 2) fail("k_fold needs at least 2 folds");
}

std::string to_string(FitnessMode mode) {
  switch (mode) {
    case FitnessMode::validation: return "validation";
    case FitnessMode::k_fold: return "k_fold";
    case FitnessMode::leave_one_out: return "leave_one_out";
  }
  return "validation";
}

FitnessOptions parse_fitness_mode(std::string_view text) {
  FitnessOptions out;
  if (text == "validation") {
    out.mode = FitnessMode::validation;
  } else if (text == "leave_one_out" || text == "loo") {
    out.mode = FitnessMode::leave_one_out;
  } else if (text.starts_with("k_fold")) {
    out.mode = FitnessMode::k_fold;
    if (text.size() > 6) {
      if (text[6] != ':') throw Error(Errc::config, fmt::format("bad fitness mode '{}'", text));
      const std::string k(text.substr(7));
      try {
        std::size_t used = 0;
        out.folds = std::stoul(k, &used);
        if (used != k.size()) throw std::invalid_argument(k);
      } catch (const std::exception&) {
        throw Error(Errc::config, fmt::format("bad fold count in '{}'", text));
      }
      if (out.folds < 2) throw Error(Errc::config, fmt::format("k_fold needs at least 2 folds, got '{}'", text));
    }
  } else {
    throw Error(Errc::config,
                fmt::format("unknown fitness mode '{}' (validation | k_fold[:k] | leave_one_out)", text));
  }
  return out;
}

KernelExpr generate_tree(InitMethod method, std::size_t depth, std::size_t n, Rng& rng) {
  if (n == 0) throw Error(Errc::parameter, "tree generation needs at least one kernel");
  if (depth == 0) throw Error(Errc::parameter, "tree depth must be at least 1");
  return grow_or_full(method, 1, depth, n, rng);
}

KernelExpr random_tree(const GpParams& params, std::size_t n, Rng& rng) {
  params.validate();
  const std::size_t depth =
      std::uniform_int_distribution<std::size_t>(params.init_depth_min, params.init_depth_max)(rng);
  const InitMethod method = coin(0.5, rng) ? InitMethod::full : InitMethod::grow;
  return tree_in_range(method, depth, params.init_depth_min, n, rng);
}

std::vector<KernelExpr> initial_population(const GpParams& params, std::size_t n, Rng& rng) {
  params.validate();
  std::vector<KernelExpr> population;
  population.reserve(params.population_size);
  if (params.seed_leaves) {
    for (std::size_t k = 0; k < n && population.size() < params.population_size; ++k) {
      population.push_back(KernelExpr::leaf(k));
    }
  }
  const std::size_t span = params.init_depth_max - params.init_depth_min + 1;
  for (std::size_t i = 0; population.size() < params.population_size; ++i) {
    const std::size_t depth = params.init_depth_min + (i / 2) % span;
    const InitMethod method = i % 2 == 0 ? InitMethod::full : InitMethod::grow;
    population.push_back(tree_in_range(method, depth, params.init_depth_min, n, rng));
  }
  return population;
}

std::size_t tournament_select(std::span<const double> fitnesses,
                              std::span<const std::size_t> node_counts, std::size_t k, Rng& rng) {
  const std::size_t n = fitnesses.size();
  if (n == 0) throw Error(Errc::parameter, "tournament over an empty population");
  if (k < 1) throw Error(Errc::parameter, "tournament size must be at least 1");
  if (!node_counts.empty() && node_counts.size() != n) {
    throw Error(Errc::shape, "tournament: node count list does not match population");
  }
  const auto size_of = [&](std::size_t i) { return node_counts.empty() ? 0 : node_counts[i]; };
  const auto better = [&](std::size_t a, std::size_t b) {
    return ranks_before(fitnesses[a], size_of(a), a, fitnesses[b], size_of(b), b);
  };
  if (k >= n) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (better(i, best)) best = i;
    return best;
  }
  std::size_t best = uniform_index(n, rng);
  for (std::size_t draw = 1; draw < k; ++draw) {
    const std::size_t c = uniform_index(n, rng);
    if (better(c, best)) best = c;
  }
  return best;
}

std::size_t tournament_select(std::span<const double> fitnesses, std::size_t k, Rng& rng) {
  return tournament_select(fitnesses, {}, k, rng);
}

std::pair<KernelExpr, KernelExpr> crossover(const KernelExpr& a, const KernelExpr& b, Rng& rng,
                                            std::size_t max_depth) {
  const std::size_t pa = uniform_index(a.node_count(), rng);
  const std::size_t pb = uniform_index(b.node_count(), rng);
  KernelExpr child_a = a.with_subtree(pa, b.subtree(pb));
  KernelExpr child_b = b.with_subtree(pb, a.subtree(pa));
  if (child_a.depth() > max_depth) child_a = a;
  if (child_b.depth() > max_depth) child_b = b;
  return {std::move(child_a), std::move(child_b)};
}

KernelExpr mutate(const KernelExpr& expr, MutationKind kind, Rng& rng, const GpParams& params,
                  std::size_t n) {
  if (n == 0) throw Error(Errc::parameter, "mutation needs at least one kernel");
  const auto nodes = expr.nodes();
  std::vector<std::size_t> leaves, internal;
  for (std::size_t i = 0; i < nodes.size(); ++i) (nodes[i].op == Op::leaf ? leaves : internal).push_back(i);

  switch (kind) {
    case MutationKind::point: {
      if (n < 2) return expr;
      std::vector<Node> copy(nodes.begin(), nodes.end());
      Node& target = copy[leaves[uniform_index(leaves.size(), rng)]];
      // Draw from the n-1 other kernels.
      std::size_t k = uniform_index(n - 1, rng);
      if (k >= target.kernel) ++k;
      target.kernel = static_cast<std::uint32_t>(k);
      return KernelExpr::from_nodes(std::move(copy));
    }
    case MutationKind::swap_op: {
      if (internal.empty()) return expr;
      std::vector<Node> copy(nodes.begin(), nodes.end());
      Node& target = copy[internal[uniform_index(internal.size(), rng)]];
      target.op = target.op == Op::add ? Op::mul : Op::add;
      return KernelExpr::from_nodes(std::move(copy));
    }
    case MutationKind::subtree: {
      const std::size_t pos = uniform_index(nodes.size(), rng);
      const std::size_t level = expr.level_of(pos);
      if (level > params.max_depth) return expr;
      const std::size_t budget = std::min(params.max_depth - level + 1, params.init_depth_max);
      const std::size_t depth = std::uniform_int_distribution<std::size_t>(1, std::max<std::size_t>(budget, 1))(rng);
      const InitMethod method = coin(0.5, rng) ? InitMethod::full : InitMethod::grow;
      return expr.with_subtree(pos, generate_tree(method, depth, n, rng));
    }
  }
  return expr;
}

KernelExpr mutate(const KernelExpr& expr, Rng& rng, const GpParams& params, std::size_t n) {
  const auto pick = std::uniform_int_distribution<int>(0, 2)(rng);
  return mutate(expr, static_cast<MutationKind>(pick), rng, params, n);
}

double kernel_fitness(const Eigen::Ref<const Matrix>& gram, std::span<const int> labels,
                      const DatasetSplit& split, const SvmParams& svm,
                      const FitnessOptions& options) {
  switch (options.mode) {
    case FitnessMode::validation: {
      std::size_t hits = 0;
      score_predictions(gram, labels, split.train_idx, split.val_idx, svm, hits);
      return static_cast<double>(hits) / static_cast<double>(split.val_idx.size());
    }
    case FitnessMode::k_fold:
      return cross_validated(gram, labels, split, svm, options.folds);
    case FitnessMode::leave_one_out:
      return cross_validated(gram, labels, split, svm, 0);
  }
  return 0.0;
}

double fitness(const KernelExpr& expr, const KernelBank& bank, std::span<const int> labels,
               const DatasetSplit& split, const SvmParams& svm, const FitnessOptions& options) {
  if (split.val_idx.empty() && options.mode == FitnessMode::validation) {
    throw Error(Errc::input, "fitness: validation set is empty");
  }
  const Gram gram = evaluate(expr, bank);
  try {
    return kernel_fitness(gram.matrix(), labels, split, svm, options);
  } catch (const Error& e) {
    if (e.code() != Errc::numerical && e.code() != Errc::input) throw;
    spdlog::warn("fitness of {} set to 0: {}", gram.tag(), e.what());
    return 0.0;
  }
}

EvolutionResult evolve(const KernelBank& bank, std::span<const int> labels,
                       const DatasetSplit& split, const GpParams& params, const SvmParams& svm,
                       std::size_t threads) {
  params.validate();
  svm.validate();
  if (labels.size() != static_cast<std::size_t>(bank.items())) {
    throw Error(Errc::input, fmt::format("evolve: {} labels for {} items", labels.size(), bank.items()));
  }
  validate_split(split, labels, params.fitness.mode == FitnessMode::validation);
  const std::size_t n = bank.count();

  // Evolution only ever looks at train+validation, so work on that block.
  const std::vector<std::size_t> pool = split.pool();
  const KernelBank local_bank = restrict_to(bank, pool);
  const std::vector<int> local_labels = gather(labels, pool);
  DatasetSplit local;
  const auto to_local = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::size_t> out;
    for (std::size_t i : idx) {
      out.push_back(static_cast<std::size_t>(std::lower_bound(pool.begin(), pool.end(), i) - pool.begin()));
    }
    return out;
  };
  local.train_idx = to_local(split.train_idx);
  local.val_idx = to_local(split.val_idx);

  std::unordered_map<std::string, double> cache;
  EvolutionResult result;

  const auto score = [&](const std::vector<KernelExpr>& population) {
    std::vector<std::string> keys;
    keys.reserve(population.size());
    std::vector<std::size_t> fresh;  // first occurrence of each uncached key
    for (std::size_t i = 0; i < population.size(); ++i) {
      keys.push_back(canonical_string(population[i]));
      if (cache.count(keys.back())) continue;
      bool duplicate = false;
      for (std::size_t f : fresh) duplicate = duplicate || keys[f] == keys.back();
      if (!duplicate) fresh.push_back(i);
    }
    std::vector<double> computed(fresh.size());
    parallel_for(fresh.size(), threads, [&](std::size_t f) {
      computed[f] = fitness(population[fresh[f]], local_bank, local_labels, local, svm, params.fitness);
    });
    for (std::size_t f = 0; f < fresh.size(); ++f) cache.emplace(keys[fresh[f]], computed[f]);
    result.fitness_evaluations += fresh.size();
    std::vector<double> values;
    values.reserve(population.size());
    for (const auto& key : keys) values.push_back(cache.at(key));
    return values;
  };

  const auto rank = [](const std::vector<KernelExpr>& population, const std::vector<double>& fit) {
    std::vector<std::size_t> order(population.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return ranks_before(fit[a], population[a].node_count(), a, fit[b], population[b].node_count(), b);
    });
    return order;
  };

  Rng init_rng(derive_seed(params.rng_seed, "init"));
  std::vector<KernelExpr> population = initial_population(params, n, init_rng);
  std::vector<double> fit = score(population);

  bool have_best = false;
  std::size_t stagnant = 0;
  double reference = 0.0;  // best fitness at the last real improvement
  const auto record = [&](std::size_t generation) {
    const std::vector<std::size_t> order = rank(population, fit);
    const std::size_t top = order.front();
    const double mean = std::accumulate(fit.begin(), fit.end(), 0.0) / static_cast<double>(fit.size());
    result.per_generation.push_back({generation, fit[top], mean, canonical_string(population[top])});
    if (!have_best || fit[top] > result.best_fitness ||
        (fit[top] == result.best_fitness && population[top].node_count() < result.best_expr.node_count())) {
      result.best_expr = population[top];
      result.best_fitness = fit[top];
    }
    if (!have_best || fit[top] > reference + kImprovementEps) {
      reference = fit[top];
      stagnant = 0;
    } else {
      ++stagnant;
    }
    have_best = true;
    return order;
  };

  std::vector<std::size_t> order = record(0);
  for (std::size_t generation = 1; generation <= params.max_generations; ++generation) {
    if (stagnant >= params.stagnation_limit) break;
    Rng rng(derive_seed(params.rng_seed, static_cast<std::uint64_t>(generation)));
    std::vector<std::size_t> sizes;
    sizes.reserve(population.size());
    for (const auto& e : population) sizes.push_back(e.node_count());

    std::vector<KernelExpr> next;
    next.reserve(params.population_size);
    for (std::size_t e = 0; e < params.elitism; ++e) next.push_back(population[order[e]]);
    while (next.size() < params.population_size) {
      const KernelExpr& mother = population[tournament_select(fit, sizes, params.tournament_size, rng)];
      const KernelExpr& father = population[tournament_select(fit, sizes, params.tournament_size, rng)];
      std::pair<KernelExpr, KernelExpr> children{mother, father};
      if (coin(params.crossover_rate, rng)) children = crossover(mother, father, rng, params.max_depth);
      for (KernelExpr* child : {&children.first, &children.second}) {
        if (next.size() >= params.population_size) break;
        if (coin(params.mutation_rate, rng)) *child = mutate(*child, rng, params, n);
        next.push_back(std::move(*child));
      }
    }
    population = std::move(next);
    fit = score(population);
    order = record(generation);
  }

  if (!split.test_idx.empty()) {
    const Gram gram = evaluate(result.best_expr, bank);
    const MulticlassModel model = train_multiclass(gram.matrix(), labels, pool, svm);
    std::vector<std::size_t> all(static_cast<std::size_t>(gram.size()));
    std::iota(all.begin(), all.end(), std::size_t{0});
    const std::vector<int> predicted = predict(model, slice(gram.matrix(), split.test_idx, all));
    result.final_test_accuracy = accuracy(predicted, gather(labels, split.test_idx));
  }
  return result;
}

std::string evolution_log_csv(const EvolutionResult& result) {
  std::string out = "generation,best_fitness,mean_fitness,best_expr\n";
  for (const auto& g : result.per_generation) {
    out += fmt::format("{},{},{},\"{}\"\n", g.generation, g.best_fitness, g.mean_fitness, g.best_expr);
  }
  return out;
}

void to_json(nlohmann::json& j, const GpParams& p) {
  j = {{"population_size", p.population_size},
       {"max_generations", p.max_generations},
       {"crossover_rate", p.crossover_rate},
       {"mutation_rate", p.mutation_rate},
       {"tournament_size", p.tournament_size},
       {"max_depth", p.max_depth},
       {"init_depth_range", {p.init_depth_min, p.init_depth_max}},
       {"stagnation_limit", p.stagnation_limit},
       {"elitism", p.elitism},
       {"rng_seed", p.rng_seed},
       {"fitness_mode", to_string(p.fitness.mode)},
       {"folds", p.fitness.folds},
       {"seed_leaves", p.seed_leaves}};
}

void from_json(const nlohmann::json& j, GpParams& p) {
  j.at("population_size").get_to(p.population_size);
  j.at("max_generations").get_to(p.max_generations);
  j.at("crossover_rate").get_to(p.crossover_rate);
  j.at("mutation_rate").get_to(p.mutation_rate);
  j.at("tournament_size").get_to(p.tournament_size);
  j.at("max_depth").get_to(p.max_depth);
  p.init_depth_min = j.at("init_depth_range").at(0).get<std::size_t>();
  p.init_depth_max = j.at("init_depth_range").at(1).get<std::size_t>();
  j.at("stagnation_limit").get_to(p.stagnation_limit);
  j.at("elitism").get_to(p.elitism);
  j.at("rng_seed").get_to(p.rng_seed);
  p.fitness = parse_fitness_mode(j.at("fitness_mode").get<std::string>());
  j.at("folds").get_to(p.fitness.folds);
  j.at("seed_leaves").get_to(p.seed_leaves);
}

void to_json(nlohmann::json& j, const GenerationStats& s) {
  j = {{"generation", s.generation}, {"best_fitness", s.best_fitness},
       {"mean_fitness", s.mean_fitness}, {"best_expr", s.best_expr}};
}

void from_json(const nlohmann::json& j, GenerationStats& s) {
  j.at("generation").get_to(s.generation);
  j.at("best_fitness").get_to(s.best_fitness);
  j.at("mean_fitness").get_to(s.mean_fitness);
  j.at("best_expr").get_to(s.best_expr);
}

}  // namespace kf
