// Copyright 2026 The sysid Authors
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

#include <cmath>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "sysid/error.hpp"
#include "sysid/linalg.hpp"
#include "sysid/random.hpp"

using namespace sysid;

TEST_CASE("spectral radius of simple matrices") {
  CHECK(spectral_radius(Mat::Zero(2, 2)) == 0.0);
  Mat D = Mat::Zero(2, 2);
  D(0, 0) = 0.5;
  D(1, 1) = -0.9;
  CHECK(spectral_radius(D) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK_THROWS_AS(spectral_radius(Mat::Zero(2, 3)), DimensionError);
}

TEST_CASE("spectral radius of a rescaled random matrix") {
  Rng rng(11);
  Mat M = rng.gaussian(8, 8, 1.0);
  Eigen::EigenSolver<Mat> es(M);
  const double r0 = es.eigenvalues().cwiseAbs().maxCoeff();
  M *= 0.7 / r0;
  CHECK(std::abs(spectral_radius(M) - 0.7) <= 1e-6);
  // Growth rate ||M^k||^{1/k} approaches the same value.
  const double growth = std::pow(oracle::dense_opnorm(oracle::mpow(M, 400)), 1.0 / 400);
  CHECK(std::abs(growth - 0.7) < 0.02);
}

TEST_CASE("operator norm by power iteration matches SVD") {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const Mat M = rng.gaussian(20 + trial, 13, 1.0);
    const double ref = oracle::dense_opnorm(M);
    CHECK(std::abs(opnorm(M) - ref) <= 1e-8 * ref);
    CHECK(std::abs(opnorm_svd(M) - ref) <= 1e-12 * ref);
  }
  CHECK(opnorm(Mat::Zero(3, 3)) == 0.0);
}

TEST_CASE("matrix-free norm of a power matches the dense power") {
  Rng rng(5);
  const int m = 60;
  const Mat W = rng.gaussian(m, m, 1.0 / std::sqrt(m));
  for (int k : {1, 2, 3, 7}) {
    const double ref = oracle::dense_opnorm(oracle::mpow(W, k));
    const LanczosResult r = opnorm_of_power(W, k);
    CHECK(std::abs(r.value - ref) <= 1e-8 * ref);
    const MatF Wf = W.cast<float>();
    CHECK(std::abs(opnorm_of_power(Wf, k).value - ref) <= 1e-5 * ref);
  }
  CHECK(opnorm_of_power(W, 0).value == 1.0);
}

TEST_CASE("slope fits") {
  const std::vector<double> x = {1, 2, 3, 4};
  const std::vector<double> y = {3, 5, 7, 9};
  CHECK(fit_slope(x, y) == doctest::Approx(2.0));
  std::vector<double> yy;
  for (double v : x) yy.push_back(5.0 * v * v);
  CHECK(fit_loglog_slope(x, yy) == doctest::Approx(2.0));
  CHECK_THROWS(fit_slope({1.0}, {1.0}));
}

TEST_CASE("quantiles") {
  CHECK(quantile({3, 1, 2}, 0.0) == 1.0);
  CHECK(quantile({3, 1, 2}, 1.0) == 3.0);
  CHECK(quantile({3, 1, 2}, 0.5) == 2.0);
}

TEST_CASE("random streams") {
  Rng a(42), b(42);
  CHECK(a.gaussian(5, 5, 1.0) == b.gaussian(5, 5, 1.0));
  CHECK(subseed(1, 0) != subseed(1, 1));
  CHECK(subseed(1, 0) != subseed(2, 0));
  Rng r(1);
  CHECK(r.unit_vector(7).norm() == doctest::Approx(1.0));
  CHECK(r.unit_frobenius(4, 6).norm() == doctest::Approx(1.0));
  const Mat Q = r.haar_orthogonal(6);
  CHECK((Q.transpose() * Q - Mat::Identity(6, 6)).norm() < 1e-12);
  for (int i = 0; i < 100; ++i) CHECK(r.index(7) < 7);
}
