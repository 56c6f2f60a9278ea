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

#include "kf/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "kf/parallel.hpp"

namespace kf {
namespace {

constexpr double kTau = 1e-12;  // curvature floor for non-PD pairs

void require_square(const Eigen::Ref<const Matrix>& k, std::size_t n, const char* what) {
  if (k.rows() != k.cols() || static_cast<std::size_t>(k.rows()) != n) {
    throw Error(Errc::shape, fmt::format("{}: gram is {}x{} but {} labels were given", what,
                                         k.rows(), k.cols(), n));
  }
}

double compute_bias(std::span<const double> alpha, std::span<const int> y,
                    const Eigen::VectorXd& grad, double C, double eps) {
  double free_sum = 0.0;
  std::size_t free_count = 0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < alpha.size(); ++t) {
    // Bias that puts point t exactly on its margin.
    const double v = -y[t] * grad(static_cast<Eigen::Index>(t));
    if (alpha[t] > eps && alpha[t] < C - eps) {
      free_sum += v;
      ++free_count;
    } else if ((alpha[t] <= eps) == (y[t] > 0)) {
      lower = std::max(lower, v);
    } else {
      upper = std::min(upper, v);
    }
  }
  if (free_count > 0) return free_sum / static_cast<double>(free_count);
  if (std::isfinite(lower) && std::isfinite(upper)) return 0.5 * (lower + upper);
  if (std::isfinite(lower)) return lower;
  if (std::isfinite(upper)) return upper;
  return 0.0;
}

}  // namespace

void SvmParams::validate() const {
  if (!(C > 0.0) || !std::isfinite(C)) throw Error(Errc::parameter, "svm.C must be positive");
  if (!(kkt_tol > 0.0)) throw Error(Errc::parameter, "svm.kkt_tol must be positive");
  if (max_passes == 0) throw Error(Errc::parameter, "svm.max_passes must be at least 1");
  if (!(eps >= 0.0)) throw Error(Errc::parameter, "svm.eps must be non-negative");
}

SvmModel train_binary(const Eigen::Ref<const Matrix>& k, std::span<const int> labels,
                      const SvmParams& params, Rng& rng) {
  params.validate();
  const std::size_t n = labels.size();
  require_square(k, n, "train_binary");
  bool has_pos = false, has_neg = false;
  for (int y : labels) {
    if (y == 1) {
      has_pos = true;
    } else if (y == -1) {
      has_neg = true;
    } else {
      throw Error(Errc::input, fmt::format("train_binary: label {} is not +1/-1", y));
    }
  }
  if (!has_pos || !has_neg) throw Error(Errc::input, "train_binary: both classes must be present");
  if (!k.allFinite()) throw Error(Errc::input, "train_binary: gram has non-finite entries");

  const double C = params.C;
  std::vector<double> alpha(n, 0.0);
  // Gradient of 1/2 a'Qa - e'a with Q = yy' o K.
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), -1.0);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  const auto in_up = [&](std::size_t t) {
    return (labels[t] > 0 && alpha[t] < C) || (labels[t] < 0 && alpha[t] > 0.0);
  };
  const auto in_low = [&](std::size_t t) {
    return (labels[t] > 0 && alpha[t] > 0.0) || (labels[t] < 0 && alpha[t] < C);
  };

  SvmModel model;
  model.converged = false;
  const std::size_t budget = params.max_passes * std::max<std::size_t>(n, 1);
  std::size_t iter = 0;
  for (; iter < budget; ++iter) {
    std::size_t i = n, j = n;
    double up_max = -std::numeric_limits<double>::infinity();
    double low_min = std::numeric_limits<double>::infinity();
    for (std::size_t t : order) {
      const double v = -labels[t] * grad(static_cast<Eigen::Index>(t));
      if (in_up(t) && v > up_max) {
        up_max = v;
        i = t;
      }
      if (in_low(t) && v < low_min) {
        low_min = v;
        j = t;
      }
    }
    if (i == n || j == n || up_max - low_min < params.kkt_tol) {
      model.converged = true;
      break;
    }

    const auto ii = static_cast<Eigen::Index>(i);
    const auto jj = static_cast<Eigen::Index>(j);
    const double yi = labels[i], yj = labels[j];
    const double old_ai = alpha[i], old_aj = alpha[j];
    double ai = old_ai, aj = old_aj;
    double quad = k(ii, ii) + k(jj, jj) - 2.0 * k(ii, jj);
    if (quad <= 0.0) quad = kTau;

    if (yi != yj) {
      const double delta = (-grad(ii) - grad(jj)) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) {
          aj = 0.0;
          ai = diff;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = -diff;
      }
      if (diff > 0.0) {
        if (ai > C) {
          ai = C;
          aj = C - diff;
        }
      } else if (aj > C) {
        aj = C;
        ai = C + diff;
      }
    } else {
      const double delta = (grad(ii) - grad(jj)) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > C) {
        if (ai > C) {
          ai = C;
          aj = sum - C;
        }
      } else if (aj < 0.0) {
        aj = 0.0;
        ai = sum;
      }
      if (sum > C) {
        if (aj > C) {
          aj = C;
          ai = sum - C;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = sum;
      }
    }
    alpha[i] = ai;
    alpha[j] = aj;

    const double dai = ai - old_ai, daj = aj - old_aj;
    for (std::size_t t = 0; t < n; ++t) {
      const auto tt = static_cast<Eigen::Index>(t);
      grad(tt) += labels[t] * (yi * k(tt, ii) * dai + yj * k(tt, jj) * daj);
    }
  }

  model.iterations = iter;
  model.bias = compute_bias(alpha, labels, grad, C, params.eps);
  for (std::size_t t = 0; t < n; ++t)
    if (alpha[t] > params.eps) model.support_idx.push_back(t);
  model.alpha = std::move(alpha);
  model.train_labels.assign(labels.begin(), labels.end());
  return model;
}

Eigen::VectorXd decision(const SvmModel& model, const Eigen::Ref<const Matrix>& cross_gram) {
  if (static_cast<std::size_t>(cross_gram.cols()) != model.alpha.size()) {
    throw Error(Errc::shape, fmt::format("decision: query block has {} columns, model has {} "
                                         "training points",
                                         cross_gram.cols(), model.alpha.size()));
  }
  Eigen::VectorXd f = Eigen::VectorXd::Constant(cross_gram.rows(), model.bias);
  for (std::size_t s : model.support_idx) {
    const double coef = model.alpha[s] * model.train_labels[s];
    f += coef * cross_gram.col(static_cast<Eigen::Index>(s));
  }
  return f;
}

double dual_objective(std::span<const double> alpha, std::span<const int> labels,
                      const Eigen::Ref<const Matrix>& k) {
  require_square(k, labels.size(), "dual_objective");
  Eigen::VectorXd ay(static_cast<Eigen::Index>(alpha.size()));
  for (std::size_t t = 0; t < alpha.size(); ++t) ay(static_cast<Eigen::Index>(t)) = alpha[t] * labels[t];
  const double linear = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  return linear - 0.5 * ay.dot(k * ay);
}

double dual_objective(const SvmModel& model, const Eigen::Ref<const Matrix>& k) {
  return dual_objective(model.alpha, model.train_labels, k);
}

double kkt_residual(const SvmModel& model, const Eigen::Ref<const Matrix>& k, double C) {
  const Eigen::VectorXd f = decision(model, k);
  double worst = 0.0;
  for (std::size_t t = 0; t < model.alpha.size(); ++t) {
    const double margin = model.train_labels[t] * f(static_cast<Eigen::Index>(t)) - 1.0;
    const double a = model.alpha[t];
    double violation;
    if (a <= 0.0) {
      violation = std::max(0.0, -margin);
    } else if (a >= C) {
      violation = std::max(0.0, margin);
    } else {
      violation = std::abs(margin);
    }
    worst = std::max(worst, violation);
  }
  return worst;
}

bool MulticlassModel::converged() const {
  return std::all_of(pairs.begin(), pairs.end(), [](const PairModel& p) { return p.model.converged; });
}

MulticlassModel train_multiclass(const Eigen::Ref<const Matrix>& gram, std::span<const int> labels,
                                 std::span<const std::size_t> train_idx, const SvmParams& params,
                                 std::size_t threads) {
  params.validate();
  require_square(gram, labels.size(), "train_multiclass");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t idx : train_idx) {
    if (idx >= labels.size()) {
      throw Error(Errc::index, fmt::format("train_multiclass: index {} out of range", idx));
    }
    by_class[labels[idx]].push_back(idx);
  }
  if (by_class.size() < 2) {
    throw Error(Errc::input, "train_multiclass: need at least two classes in the training set");
  }

  MulticlassModel out;
  out.params = params;
  for (const auto& [label, members] : by_class) out.class_labels.push_back(label);
  for (std::size_t a = 0; a < out.class_labels.size(); ++a) {
    for (std::size_t b = a + 1; b < out.class_labels.size(); ++b) {
      PairModel pair;
      pair.negative_class = out.class_labels[a];
      pair.positive_class = out.class_labels[b];
      for (std::size_t idx : train_idx) {
        if (labels[idx] == pair.negative_class || labels[idx] == pair.positive_class) {
          pair.train_idx.push_back(idx);
        }
      }
      out.pairs.push_back(std::move(pair));
    }
  }

  parallel_for(out.pairs.size(), threads, [&](std::size_t p) {
    PairModel& pair = out.pairs[p];
    std::vector<int> y;
    y.reserve(pair.train_idx.size());
    for (std::size_t idx : pair.train_idx) y.push_back(labels[idx] == pair.positive_class ? 1 : -1);
    const Matrix block = slice(gram, pair.train_idx, pair.train_idx);
    Rng rng(derive_seed(params.seed, static_cast<std::uint64_t>(p)));
    pair.model = train_binary(block, y, params, rng);
  });
  return out;
}

Matrix pair_decisions(const MulticlassModel& model, const Eigen::Ref<const Matrix>& rows) {
  Matrix out(rows.rows(), static_cast<Eigen::Index>(model.pairs.size()));
  std::vector<std::size_t> all_rows(static_cast<std::size_t>(rows.rows()));
  std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
  for (std::size_t p = 0; p < model.pairs.size(); ++p) {
    const PairModel& pair = model.pairs[p];
    for (std::size_t i : pair.train_idx) {
      if (i >= static_cast<std::size_t>(rows.cols())) {
        throw Error(Errc::shape, fmt::format("kernel rows have {} columns but the model uses training item {}",
                                             rows.cols(), i));
      }
    }
    const Matrix cross = slice(rows, all_rows, pair.train_idx);
    out.col(static_cast<Eigen::Index>(p)) = decision(pair.model, cross);
  }
  return out;
}

std::vector<int> predict(const MulticlassModel& model, const Eigen::Ref<const Matrix>& rows) {
  if (model.pairs.empty()) throw Error(Errc::input, "predict: model has no pair classifiers");
  const Matrix f = pair_decisions(model, rows);
  const std::size_t c = model.class_labels.size();
  std::map<int, std::size_t> slot;
  for (std::size_t i = 0; i < c; ++i) slot[model.class_labels[i]] = i;

  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(rows.rows()));
  std::vector<std::size_t> votes(c);
  std::vector<double> margin(c);
  for (Eigen::Index q = 0; q < f.rows(); ++q) {
    std::fill(votes.begin(), votes.end(), 0);
    std::fill(margin.begin(), margin.end(), 0.0);
    for (std::size_t p = 0; p < model.pairs.size(); ++p) {
      const double v = f(q, static_cast<Eigen::Index>(p));
      const int winner = v >= 0.0 ? model.pairs[p].positive_class : model.pairs[p].negative_class;
      const std::size_t s = slot.at(winner);
      ++votes[s];
      margin[s] += std::abs(v);
    }
    // class_labels ascending, so strict comparisons keep the smaller id on ties
    std::size_t best = 0;
    for (std::size_t s = 1; s < c; ++s) {
      if (votes[s] > votes[best] || (votes[s] == votes[best] && margin[s] > margin[best])) best = s;
    }
    out.push_back(model.class_labels[best]);
  }
  return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size()) {
    throw Error(Errc::shape, fmt::format("accuracy: {} predictions vs {} labels", predicted.size(),
                                         actual.size()));
  }
  if (predicted.empty()) throw Error(Errc::shape, "accuracy: empty label lists");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == actual[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

void to_json(nlohmann::json& j, const SvmParams& p) {
  j = {{"C", p.C}, {"kkt_tol", p.kkt_tol}, {"max_passes", p.max_passes}, {"eps", p.eps},
       {"seed", p.seed}};
}

void from_json(const nlohmann::json& j, SvmParams& p) {
  j.at("C").get_to(p.C);
  j.at("kkt_tol").get_to(p.kkt_tol);
  j.at("max_passes").get_to(p.max_passes);
  j.at("eps").get_to(p.eps);
  j.at("seed").get_to(p.seed);
}

void to_json(nlohmann::json& j, const SvmModel& m) {
  j = {{"alpha", m.alpha},           {"bias", m.bias},
       {"support_idx", m.support_idx}, {"train_labels", m.train_labels},
       {"converged", m.converged},   {"iterations", m.iterations}};
}

void from_json(const nlohmann::json& j, SvmModel& m) {
  j.at("alpha").get_to(m.alpha);
  j.at("bias").get_to(m.bias);
  j.at("support_idx").get_to(m.support_idx);
  j.at("train_labels").get_to(m.train_labels);
  j.at("converged").get_to(m.converged);
  j.at("iterations").get_to(m.iterations);
  if (m.alpha.size() != m.train_labels.size()) {
    throw Error(Errc::input, "svm model: alpha and label counts differ");
  }
}

void to_json(nlohmann::json& j, const PairModel& m) {
  j = {{"negative_class", m.negative_class},
       {"positive_class", m.positive_class},
       {"train_idx", m.train_idx},
       {"model", m.model}};
}

void from_json(const nlohmann::json& j, PairModel& m) {
  j.at("negative_class").get_to(m.negative_class);
  j.at("positive_class").get_to(m.positive_class);
  j.at("train_idx").get_to(m.train_idx);
  j.at("model").get_to(m.model);
}

void to_json(nlohmann::json& j, const MulticlassModel& m) {
  j = {{"class_labels", m.class_labels}, {"pairs", m.pairs}, {"params", m.params}};
}

void from_json(const nlohmann::json& j, MulticlassModel& m) {
  j.at("class_labels").get_to(m.class_labels);
  j.at("pairs").get_to(m.pairs);
  j.at("params").get_to(m.params);
}

}  // namespace kf
