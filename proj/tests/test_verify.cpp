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

#include "sysid/theory_verify.hpp"

using namespace sysid;

namespace {

VerifyOptions small(int m, int trials) {
  VerifyOptions o;
  o.m = m;
  o.trials = trials;
  o.seed = 5;
  return o;
}

}  // namespace

TEST_CASE("doubling grid") {
  CHECK(doubling_grid(1) == std::vector<int>{1});
  CHECK(doubling_grid(12) == std::vector<int>{1, 2, 4, 8, 12});
  CHECK(doubling_grid(16) == std::vector<int>{1, 2, 4, 8, 16});
  CHECK(doubling_grid(0).empty());
}

TEST_CASE("pass fraction is a function of the per-trial outcomes") {
  CheckResult c;
  c.trial_pass = {1, 1, 1, 0};
  c.threshold = 0.75;
  finalize(c);
  CHECK(c.pass_fraction == 0.75);
  CHECK(c.pass);
  c.threshold = 0.8;
  finalize(c);
  CHECK_FALSE(c.pass);
  CheckResult sk;
  sk.skipped = true;
  finalize(sk);
  CHECK(sk.pass);
}

TEST_CASE("spectral report and negative control") {
  const LemmaReport r = verify_spectral(small(256, 4));
  CHECK(r.check("a_large_k").pass);
  CHECK(r.check("d_perturbed").pass);
  CHECK(r.trial_seeds.size() == 4);
  // Reports are reproducible from their seeds.
  CHECK(to_json(verify_spectral(small(256, 4))).dump() == to_json(r).dump());

  VerifyOptions bad = small(256, 4);
  bad.w0_scale = 2.0;
  const LemmaReport rb = verify_spectral(bad);
  CHECK(rb.check("c_sqrt_k").pass_fraction == 0.0);
  CHECK_FALSE(rb.pass);
}

TEST_CASE("concentration report") {
  // The +-0.1 band on propagated norms needs m in the thousands.
  VerifyOptions o = small(4096, 2);
  o.tau = 4;
  const LemmaReport r = verify_concentration(o);
  CHECK(r.check("a_propagated_norms").pass);
  CHECK(r.check("b_output_map").pass);
  CHECK(r.check("c_cross_terms").pass);
  CHECK_FALSE(r.check("cross_terms_B_side").gating);
  VerifyOptions one = small(256, 2);
  one.tau = 1;
  one.d = 1;
  const LemmaReport r1 = verify_concentration(one);
  CHECK(r1.check("c_cross_terms").skipped);
  VerifyOptions bad = small(1024, 3);
  bad.tau = 4;
  bad.w0_scale = 1.5;
  CHECK(verify_concentration(bad).check("a_propagated_norms").pass_fraction == 0.0);
}

TEST_CASE("tail report") {
  VerifyOptions o = small(256, 3);
  o.tau_grid = {1, 2, 4, 8, 16};
  const LemmaReport r = verify_tail(o);
  CHECK(r.pass);
  CHECK(r.check("monotone_in_tau").pass);
  VerifyOptions z = o;
  z.q_scale = 0.0;
  const LemmaReport rz = verify_tail(z);
  CHECK(rz.pass);
  for (double v : rz.check("first_sum").ratio) CHECK(v == 0.0);
  for (double v : rz.check("second_sum").ratio) CHECK(v == 0.0);

}

TEST_CASE("linearization report") {
  VerifyOptions o = small(256, 3);
  const LemmaReport r = verify_linearization(o);
  CHECK(r.check("residual_bound").pass);
  CHECK(r.check("slope").pass);
  VerifyOptions one = o;
  one.omega_grid = {1e-2};
  CHECK(verify_linearization(one).check("slope").skipped);
  VerifyOptions zero = o;
  zero.omega_grid = {0.0};
  const Json j = to_json(verify_linearization(zero));
  CHECK(j["details"]["trials_detail"][0]["residuals"][0]["residual"].get<double>() == 0.0);
  VerifyOptions big = o;
  big.omega_grid = {0.5};
  CHECK_THROWS(verify_linearization(big));
}

TEST_CASE("truncation report") {
  VerifyOptions o = small(256, 3);
  o.T = 24;
  o.tau_grid = {4, 8, 16, 64};
  const LemmaReport r = verify_truncation(o);
  CHECK(r.check("bound").pass);
  const Json j = to_json(r);
  const int T = j["details"]["T"].get<int>();
  CHECK(T >= 64 + 32);
}
