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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kf/kernel.hpp"
#include "oracles.hpp"

using kf::Errc;
using kf::Gram;
using kf::Matrix;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

template <typename F>
Errc error_code(F&& f) {
  try {
    f();
  } catch (const kf::Error& e) {
    return e.code();
  }
  FAIL("expected kf::Error");
  return Errc::input;
}

}  // namespace

TEST_CASE("gaussian_gram on small inputs") {
  SUBCASE("identical rows give an all-ones gram") {
    kf::FeatureMatrix x(2, 3);
    x << 0.3, -1.0, 2.0, 0.3, -1.0, 2.0;
    const Gram g = kf::gaussian_gram(x, 7.5);
    CHECK(g.matrix() == Matrix::Ones(2, 2));
  }
  SUBCASE("unit distance with gamma 1") {
    kf::FeatureMatrix x(2, 1);
    x << 0.0, 1.0;
    const Gram g = kf::gaussian_gram(x, 1.0);
    CHECK(g(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(g(0, 1) == doctest::Approx(0.367879).epsilon(1e-6));
    CHECK(g(0, 0) == 1.0);
    CHECK(g(1, 1) == 1.0);
  }
  SUBCASE("gamma -> 0 limit") {
    kf::Rng rng(3);
    const auto x = kf::testing::random_features(6, 4, rng);
    const Gram g = kf::gaussian_gram(x, 1e-12);
    CHECK((g.matrix().array() - 1.0).abs().maxCoeff() <= 1e-9);
  }
  SUBCASE("errors") {
    kf::FeatureMatrix x(2, 1);
    x << 0.0, 1.0;
    CHECK(error_code([&] { (void)kf::gaussian_gram(x, 0.0); }) == Errc::parameter);
    CHECK(error_code([&] { (void)kf::gaussian_gram(x, -1.0); }) == Errc::parameter);
    x(1, 0) = std::nan("");
    CHECK(error_code([&] { (void)kf::gaussian_gram(x, 1.0); }) == Errc::input);
    kf::FeatureMatrix one(1, 2);
    one << 1.0, 2.0;
    CHECK(error_code([&] { (void)kf::gaussian_gram(one, 1.0); }) == Errc::degenerate);
  }
}

TEST_CASE("median heuristic") {
  kf::FeatureMatrix three(3, 1);
  three << 0.0, 1.0, 2.0;  // squared distances {1, 1, 4}
  CHECK(kf::median_heuristic_gamma(three) == doctest::Approx(1.0));

  kf::FeatureMatrix two(2, 1);
  two << 0.0, 2.0;  // distance^2 = 4
  CHECK(kf::median_heuristic_gamma(two) == doctest::Approx(0.25));

  kf::FeatureMatrix dup(4, 1);
  dup << 1.0, 1.0, 4.0, 4.0;  // nonzero distances: four pairs at 9
  CHECK(kf::median_heuristic_gamma(dup) == doctest::Approx(1.0 / 9.0));

  kf::FeatureMatrix same(3, 2);
  same.setConstant(5.0);
  CHECK(error_code([&] { (void)kf::median_heuristic_gamma(same); }) == Errc::degenerate);
}

TEST_CASE("add and multiply") {
  const Gram i2(Matrix::Identity(2, 2));
  CHECK(kf::add(i2, i2).matrix() == mat2(2, 0, 0, 2));

  const Gram a(mat2(1, .5, .5, 1));
  const Gram b(mat2(1, .2, .2, 1));
  CHECK(kf::add(a, Gram(Matrix::Zero(2, 2))).matrix() == a.matrix());
  CHECK(kf::add(a, b).matrix().isApprox(mat2(2, .7, .7, 2), 1e-15));

  CHECK(kf::multiply(a, Gram(Matrix::Ones(2, 2))).matrix() == a.matrix());
  CHECK(kf::multiply(a, b).matrix().isApprox(mat2(1, .1, .1, 1), 1e-15));
  CHECK(kf::multiply(a, a).matrix() == mat2(1, .25, .25, 1));

  const Gram i3(Matrix::Identity(3, 3));
  CHECK(error_code([&] { (void)kf::add(i2, i3); }) == Errc::shape);
  CHECK(error_code([&] { (void)kf::multiply(i2, i3); }) == Errc::shape);
}

TEST_CASE("normalize") {
  kf::Rng rng(11);
  const auto x = kf::testing::random_features(7, 3, rng);
  const Gram g = kf::gaussian_gram(x, 0.4);
  CHECK((kf::normalize(g).matrix() - g.matrix()).cwiseAbs().maxCoeff() <= 1e-12);

  CHECK(kf::normalize(Gram(mat2(4, 2, 2, 1))).matrix().isApprox(Matrix::Ones(2, 2), 1e-15));
  CHECK(kf::normalize(Gram(mat2(2, 0, 0, 8))).matrix() == Matrix::Identity(2, 2));
  CHECK(error_code([] { (void)kf::normalize(Gram(mat2(0, 0, 0, 1))); }) == Errc::degenerate);
  CHECK(error_code([] { (void)kf::normalize(Gram(mat2(-1, 0, 0, 1))); }) == Errc::degenerate);
}

TEST_CASE("check_psd") {
  CHECK(kf::check_psd(Matrix(Matrix::Identity(4, 4)), 1e-8));
  CHECK_FALSE(kf::check_psd(mat2(1, 2, 2, 1), 1e-8));  // eigenvalues 3 and -1
  kf::Rng rng(5);
  const auto x = kf::testing::random_features(20, 5, rng);
  CHECK(kf::check_psd(kf::gaussian_gram(x, kf::median_heuristic_gamma(x)), 1e-8));
  CHECK(error_code([] { (void)kf::check_psd(mat2(1, 0.5, 0.4, 1), 1e-8); }) == Errc::shape);
}

TEST_CASE("slice") {
  const Gram a(mat2(1, .5, .5, 1));
  const std::vector<std::size_t> all{0, 1};
  CHECK(kf::slice(a, all, all) == a.matrix());

  const Gram i3(Matrix::Identity(3, 3));
  const std::vector<std::size_t> r{0}, c{2};
  CHECK(kf::slice(i3, r, c) == Matrix::Zero(1, 1));

  const std::vector<std::size_t> row1{1};
  Matrix expected(1, 2);
  expected << .5, 1;
  CHECK(kf::slice(a, row1, all) == expected);

  const std::vector<std::size_t> bad{3};
  CHECK(error_code([&] { (void)kf::slice(a, bad, all); }) == Errc::index);
}

TEST_CASE("gram construction rejects asymmetric and non-finite input") {
  CHECK(error_code([] { (void)Gram(mat2(1, 0.5, 0.4, 1)); }) == Errc::shape);
  CHECK(error_code([] { (void)Gram(mat2(1, INFINITY, INFINITY, 1)); }) == Errc::input);
  CHECK(error_code([] { (void)Gram(Matrix(2, 3)); }) == Errc::shape);
}

TEST_CASE("kernel bank requires equal sizes") {
  CHECK(error_code([] { kf::KernelBank bank(std::vector<Gram>{}); }) == Errc::input);
  CHECK(error_code([] {
          kf::KernelBank bank({Gram(Matrix::Identity(2, 2)), Gram(Matrix::Identity(3, 3))});
        }) == Errc::shape);
  const kf::KernelBank ok({Gram(Matrix::Identity(2, 2), "a"), Gram(Matrix::Ones(2, 2), "b")});
  CHECK(ok.count() == 2);
  CHECK(ok.items() == 2);
  CHECK(ok.names() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("property: closure, algebra and permutation invariance") {
  kf::Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 2 + trial % 9;
    const Gram a(kf::testing::random_psd(m, rng));
    const Gram b(kf::testing::random_psd(m, rng));
    const Gram c(kf::testing::random_psd(m, rng));
    CHECK(kf::check_psd(kf::add(a, b), 1e-8));
    CHECK(kf::check_psd(kf::multiply(a, b), 1e-8));

    CHECK(kf::add(a, b).matrix() == kf::add(b, a).matrix());
    CHECK(kf::multiply(a, b).matrix() == kf::multiply(b, a).matrix());
    CHECK((kf::add(kf::add(a, b), c).matrix() - kf::add(a, kf::add(b, c)).matrix()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((kf::multiply(kf::multiply(a, b), c).matrix() - kf::multiply(a, kf::multiply(b, c)).matrix())
              .cwiseAbs()
              .maxCoeff() <= 1e-12);

    const Gram na = kf::normalize(a);
    CHECK((kf::normalize(na).matrix() - na.matrix()).cwiseAbs().maxCoeff() <= 1e-12);
    const Gram prod = kf::multiply(na, kf::normalize(b));
    CHECK(prod.matrix().cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  }

  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 3 + static_cast<std::size_t>(trial % 6);
    const auto x = kf::testing::random_features(m, 4, rng);
    const Gram g = kf::gaussian_gram(x, 0.3);
    CHECK(g.matrix().minCoeff() >= 0.0);
    CHECK(g.matrix().maxCoeff() <= 1.0);
    CHECK(kf::multiply(g, kf::gaussian_gram(x, 1.7)).matrix().minCoeff() >= 0.0);

    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    kf::FeatureMatrix xp(x.rows(), x.cols());
    for (std::size_t i = 0; i < m; ++i) xp.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(perm[i]));
    CHECK(kf::gaussian_gram(xp, 0.3).matrix() == kf::slice(g, perm, perm));
  }
}

TEST_CASE("templated on the scalar type") {
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x(2, 1);
  x << 0.0f, 1.0f;
  const kf::BasicGram<float> g = kf::gaussian_gram(x, 1.0f);
  CHECK(g(0, 1) == doctest::Approx(std::exp(-1.0f)));
  CHECK(kf::check_psd(kf::multiply(g, g)));
}
