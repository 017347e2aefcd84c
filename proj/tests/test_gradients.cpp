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

#include "oracles.hpp"
#include "sysid/error.hpp"
#include "sysid/gradients.hpp"
#include "sysid/random.hpp"
#include "sysid/student.hpp"

using namespace sysid;

namespace {

struct Case {
  StudentRNN s;
  Mat X, Y;
};

Case make_case(int m, int T, std::uint64_t seed, double y_scale = 1.0) {
  Case c{init_student(m, 3, 2, 0.85, seed, InitLaw::kRescaled), {}, {}};
  Rng rng(seed + 1000);
  c.X = rng.gaussian(3, T, 0.6);
  c.Y = rng.gaussian(2, T, y_scale);
  // Move away from the anchor so the test is not at a special point.
  c.s.W += 0.05 * rng.unit_frobenius(m, m);
  c.s.A += 0.05 * rng.unit_frobenius(m, 3);
  return c;
}

}  // namespace

TEST_CASE("directional derivatives against the explicit sums") {
  const Case c = make_case(48, 6, 1);
  Rng rng(2);
  const Mat Z = rng.gaussian(48, 48, 1.0), ZA = rng.gaussian(48, 3, 1.0);
  for (int t = 1; t <= 6; ++t) {
    const Vec jw = jvp_f_wrt_W(c.s.W, c.s.A, c.s.B, c.s.rho, c.X, t, Z);
    const Vec ow = oracle::jvp_W(c.s.W, c.s.A, c.s.B, c.s.rho, c.X, t, Z);
    CHECK((jw - ow).norm() <= 1e-10 * std::max(1.0, ow.norm()));
    const Vec ja = jvp_f_wrt_A(c.s.W, c.s.A, c.s.B, c.s.rho, c.X, t, ZA);
    const Vec oa = oracle::jvp_A(c.s.W, c.s.B, c.s.rho, c.X, t, ZA);
    CHECK((ja - oa).norm() <= 1e-10 * std::max(1.0, oa.norm()));
  }
  CHECK(jvp_f_wrt_W(c.s.W, c.s.A, c.s.B, c.s.rho, c.X, 1, Z).norm() == 0.0);
  CHECK((jvp_f_wrt_A(c.s.W, c.s.A, c.s.B, c.s.rho, c.X, 1, ZA) - c.s.B * ZA * c.X.col(0)).norm() <
        1e-13);
  CHECK(jvp_f_wrt_W(c.s.W, c.s.A, c.s.B, c.s.rho, c.X, 4, Mat::Zero(48, 48)).norm() == 0.0);
}

TEST_CASE("adjoint gradients against the explicit sums") {
  for (const char* kind : {"square", "huber", "logistic", "l1"}) {
    const Case c = make_case(48, 6, 3);
    const Loss loss = make_loss(kind, 0.5);
    const GradientPair g = loss_gradients_bptt(c.s.W, c.s.A, c.s.B, c.s.rho, c.X, c.Y, loss);
    const auto [oW, oA] = oracle::explicit_gradients(c.s.W, c.s.A, c.s.B, c.s.rho, c.X, c.Y, loss);
    CHECK(oracle::rel_err(g.grad_W, oW) <= 1e-9);
    CHECK(oracle::rel_err(g.grad_A, oA) <= 1e-9);
  }
}

TEST_CASE("zero residual gives zero gradients") {
  Case c = make_case(20, 5, 4);
  c.Y = forward_rescaled(c.s.W, c.s.A, c.s.B, c.s.rho, c.X);
  const GradientPair g = loss_gradients_bptt(c.s, c.X, c.Y, make_loss("square"));
  CHECK(g.grad_W.norm() == 0.0);
  CHECK(g.grad_A.norm() == 0.0);
  CHECK(g.loss == 0.0);
}

TEST_CASE("single-step closed form for the square loss") {
  // d = d_y = 1, T = 1: f = B A x, L = (f - y)^2, grad_A = 2 B^T (f - y) x^T.
  const StudentRNN s = init_student(8, 1, 1, 0.5, 2);
  Mat X(1, 1), Y(1, 1);
  X(0, 0) = 0.7;
  Y(0, 0) = -0.3;
  const GradientPair g = loss_gradients_bptt(s, X, Y, make_loss("square"));
  const double f = (s.B * s.A * X)(0, 0);
  const Mat ref = 2.0 * s.B.transpose() * (f - Y(0, 0)) * X(0, 0);
  CHECK((g.grad_A - ref).norm() <= 1e-12 * ref.norm());
  CHECK(g.grad_W.norm() == 0.0);
}

TEST_CASE("adjoint and tangent are dual") {
  const Case c = make_case(64, 8, 5);
  const Loss loss = make_loss("square");
  const GradientPair g = loss_gradients_bptt(c.s.W, c.s.A, c.s.B, c.s.rho, c.X, c.Y, loss);
  const Mat F = forward_rescaled(c.s.W, c.s.A, c.s.B, c.s.rho, c.X);
  Rng rng(6);
  for (int probe = 0; probe < 10; ++probe) {
    const Mat ZW = rng.gaussian(64, 64, 1.0), ZA = rng.gaussian(64, 3, 1.0);
    const Mat J = jvp_sequence(c.s.W, c.s.A, c.s.B, c.s.rho, c.X, ZW, ZA);
    double pair = 0.0;
    for (int t = 0; t < 8; ++t) pair += eval_loss(loss, c.Y.col(t), F.col(t)).second.dot(J.col(t));
    pair /= 8.0;
    const double lhs = (g.grad_W.cwiseProduct(ZW)).sum() + (g.grad_A.cwiseProduct(ZA)).sum();
    CHECK(std::abs(lhs - pair) <= 1e-9 * std::abs(pair));
  }
}

TEST_CASE("finite differences") {
  for (const char* kind : {"square", "huber"}) {
    const Case c = make_case(64, 8, 7, 2.0);
    Rng rng(8);
    const Mat ZW = rng.unit_frobenius(64, 64), ZA = rng.unit_frobenius(64, 3);
    const FdReport r = finite_difference_check_rnn(c.s.W, c.s.A, c.s.B, c.s.rho, c.X, c.Y,
                                                   make_loss(kind, 0.3), ZW, ZA);
    CHECK(r.min_relerr <= 1e-6);
  }
  // Affine functions are differenced exactly.
  const FdReport lin = finite_difference_check([](double s) { return 3.0 * s + 1.0; }, 3.0);
  for (const FdPoint& p : lin.points) CHECK(p.relerr <= 1e-12);
  // Steps far below the round-off floor are flagged.
  const FdReport tiny = finite_difference_check(
      [](double s) { return std::exp(1.0 + s); }, std::exp(1.0), {1e-4, 1e-8, 1e-14});
  CHECK(tiny.cancellation);
  CHECK_THROWS_AS(finite_difference_check([](double) { return NAN; }, 1.0), EvaluationError);
}

TEST_CASE("gradient of the W_tilde parameterization") {
  const Case c = make_case(16, 4, 9);
  const GradientPair g = loss_gradients_bptt(c.s, c.X, c.Y, make_loss("square"));
  CHECK((g.grad_W_tilde(c.s.rho) * c.s.rho - g.grad_W).norm() <= 1e-15 * g.grad_W.norm());
}
