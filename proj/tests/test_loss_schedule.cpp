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

#include "sysid/error.hpp"
#include "sysid/loss.hpp"
#include "sysid/random.hpp"
#include "sysid/schedule.hpp"

using namespace sysid;

TEST_CASE("loss values") {
  Vec y(2), yh(2);
  y << 1.0, -1.0;
  yh = y;
  const auto sq = eval_loss(make_loss("square"), y, yh);
  CHECK(sq.first == 0.0);
  CHECK(sq.second.norm() == 0.0);

  Vec r(2);
  r << 1.0, -2.0;  // y - y_hat
  Vec y0 = Vec::Zero(2);
  const auto l1 = eval_loss(make_loss("l1"), r, y0);
  CHECK(l1.first == 3.0);
  CHECK(l1.second(0) == -1.0);
  CHECK(l1.second(1) == 1.0);
  // Zero residual uses the zero subgradient.
  CHECK(eval_loss(make_loss("l1"), y, y).second.norm() == 0.0);
  CHECK_THROWS_AS(make_loss("hinge"), ParameterError);
}

TEST_CASE("loss gradients against central differences") {
  Rng rng(1);
  for (const char* kind : {"square", "huber", "logistic"}) {
    const Loss loss = make_loss(kind, 0.7);
    for (int trial = 0; trial < 10; ++trial) {
      const Vec y = rng.gaussian(3, 1.0), yh = rng.gaussian(3, 1.0);
      const Vec g = eval_loss(loss, y, yh).second;
      for (int i = 0; i < 3; ++i) {
        const double h = 1e-5;
        Vec p = yh, q = yh;
        p(i) += h;
        q(i) -= h;
        const double fd = (loss_value(loss, y, p) - loss_value(loss, y, q)) / (2 * h);
        CHECK(std::abs(fd - g(i)) <= 1e-8 * std::max(1.0, std::abs(g(i))));
      }
    }
  }
}

TEST_CASE("losses are convex and locally Lipschitz with scale l0") {
  Rng rng(2);
  const int dy = 3;
  for (const char* kind : {"square", "l1", "huber", "logistic"}) {
    const Loss loss = make_loss(kind, 0.5);
    for (int trial = 0; trial < 200; ++trial) {
      const double C = 0.1 + 3.0 * rng.uniform();
      const Vec y = rng.unit_vector(dy) * C * rng.uniform();
      const Vec a = rng.unit_vector(dy) * C * rng.uniform();
      const Vec b = rng.unit_vector(dy) * C * rng.uniform();
      CHECK(eval_loss(loss, y, a).second.norm() <= loss.l0(dy) * (1.0 + C) + 1e-12);
      const double lam = rng.uniform();
      const Vec mid = lam * a + (1 - lam) * b;
      CHECK(loss_value(loss, y, mid) <=
            lam * loss_value(loss, y, a) + (1 - lam) * loss_value(loss, y, b) + 1e-12);
    }
  }
}

TEST_CASE("schedule formulas") {
  const TheorySchedule s = theory_schedule(0.1, std::exp(-1.0), 0.9, 1.0, 1024);
  CHECK(s.rho == doctest::Approx(s.rho_1 * 0.81));
  CHECK(s.rho_1 == doctest::Approx(1.0 / (1.0 + 10.0 * std::pow(std::log(1024.0), 2) / 32.0)));
  // b is consistent with the returned T_max.
  CHECK(s.b == doctest::Approx(std::sqrt(std::log(s.T_max * std::exp(1.0)))));
  CHECK(s.omega <= s.omega_0);
  CHECK(s.omega_0 == doctest::Approx(1.0 / 0.9 - 1.0));
  CHECK(s.tau == s.T_max);
  CHECK(s.R == doctest::Approx(s.b * s.T_max * s.T_max));
  CHECK(s.L_cutoff == static_cast<int>(std::ceil(32.0 / std::log(1024.0))));
  // The continuous T_max is a fixed point of its defining relation.
  const double T = s.T_max_continuous;
  const double rhs = (2.0 * std::log(1.0 / (1.0 - 0.9)) + std::log(1.0 / 0.1) +
                      0.5 * std::log(std::log(T * std::exp(1.0))) + 0.5 * std::log(1024.0)) /
                     std::log(1.0 / 0.9);
  CHECK(T == doctest::Approx(rhs).epsilon(1e-10));

  const double m = std::exp(16.0);
  const TheorySchedule big = theory_schedule(0.1, std::exp(-1.0), 0.9, 1.0, m);
  CHECK(big.rho_1 == doctest::Approx(1.0 / (1.0 + 10.0 * 256.0 / std::exp(8.0))));
}

TEST_CASE("schedule monotonicity and errors") {
  double prevK = 0.0;
  for (double eps : {0.3, 0.1, 0.03, 0.01}) {
    const TheorySchedule s = theory_schedule(eps, 0.1, 0.9, 1.0, 4096);
    CHECK(s.K >= prevK);
    prevK = s.K;
  }
  CHECK_THROWS_AS(theory_schedule(0.0, 0.1, 0.9, 1.0, 1024), ParameterError);
  CHECK_THROWS_AS(theory_schedule(0.5, 0.1, 0.9, 1.0, 1024), ParameterError);
  CHECK_THROWS_AS(theory_schedule(0.1, 0.1, 1.0, 1.0, 1024), ParameterError);
  CHECK_THROWS_AS(theory_schedule(0.1, 0.1, 0.9, 1.0, 1), ParameterError);
  const TheorySchedule small = theory_schedule(0.1, 0.1, 0.9, 1.0, 256);
  CHECK(small.outside_theory_regime);
}
