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

#ifndef SYSID_THEORY_VERIFY_HPP_
#define SYSID_THEORY_VERIFY_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sysid/io.hpp"
#include "sysid/linalg.hpp"

namespace sysid {

// One bound, evaluated on every trial.
struct CheckResult {
  std::string name;
  std::string bound_formula;
  bool gating = true;   // counts toward LemmaReport::pass
  bool skipped = false;  // empty index set
  std::vector<double> ratio;  // per trial: worst observed / bound
  std::vector<int> trial_pass;
  double pass_fraction = 0.0;
  double threshold = 0.95;
  bool pass = false;
  std::string note;
};

struct LemmaReport {
  std::string lemma_id;
  int m = 0;
  int tau = 0;
  int trials = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> trial_seeds;
  std::vector<CheckResult> checks;
  Json details;
  bool pass = false;

  const CheckResult& check(const std::string& name) const;
};

// pass_fraction, pass and the report-level verdict from per-trial results.
void finalize(CheckResult& c);
void finalize(LemmaReport& r);

Json to_json(const LemmaReport& r);

struct VerifyOptions {
  int m = 1024;
  int trials = 20;
  std::uint64_t seed = 1;
  double threshold = 0.95;
  double rho_0 = 0.9;
  // Schedule inputs for T_max, L, omega_0 and b.
  double epsilon = 0.1;
  double delta = 0.36787944117144233;
  double c_rho = 1.0;
  // Student scale rho; empty means the default of each verifier.
  std::optional<double> rho;
  int d = 4;
  int d_y = 4;
  int tau = 8;
  int T = 32;  // sequence length where a sequence is needed
  // Negative control: W0 is multiplied by this factor.
  double w0_scale = 1.0;
  // Tail verifier: scale of Q and Q2 (0 gives the trivial case).
  double q_scale = 1.0;
  std::vector<int> tau_grid;         // tail and truncation
  std::vector<double> omega_grid;    // linearization
  double displacement = 1e-2;        // truncation: radius of (W - W0, A - A0)
  // Spectral verifier: matrix-free norms of powers. The stopping rule is a
  // relative change of the top Ritz value; W is applied in single precision
  // when single_precision_operator is set.
  LanczosOptions lanczos = {60, 1e-6, 0x5eed};
  bool single_precision_operator = true;
};

// ||W0^k|| against rho_1^-k, rho_1^-L and 2 sqrt(k); ||rho^t W^t|| against
// 2 sqrt(t) rho_0^t on the ball of radius omega_0. Default rho: rho_1 rho_0^2.
LemmaReport verify_spectral(const VerifyOptions& o);

// Propagated norms, ||B W0^t A0||, cross terms, Gram near-isometry.
LemmaReport verify_concentration(const VerifyOptions& o);

// Tail sums of the series against 4 sqrt(m) tau rho_0^tau / (1-rho_0)^2 and
// 32 sqrt(m) tau^2 rho_0^tau / (1-rho_0)^3. Default rho: rho_1 rho_0^2.
LemmaReport verify_tail(const VerifyOptions& o);

// Second-order residual of the first-order expansion against
// 768 sqrt(m) omega^2 / (1-rho_0)^5, plus its log-log slope.
LemmaReport verify_linearization(const VerifyOptions& o);

// ||f^lin - f^{lin,tau}|| against 8 sqrt(m) tau rho_0^tau / (1-rho_0)^3, its
// decay slope, and the eps/b level at tau = T_max. Default rho: rho_0.
LemmaReport verify_truncation(const VerifyOptions& o);

// Log-spaced integer grid 1, 2, 4, ... up to and including `top`.
std::vector<int> doubling_grid(int top);

}  // namespace sysid

#endif  // SYSID_THEORY_VERIFY_HPP_
