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

#include "sysid/theory_verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "sysid/error.hpp"
#include "sysid/gradients.hpp"
#include "sysid/parallel.hpp"
#include "sysid/random.hpp"
#include "sysid/schedule.hpp"
#include "sysid/student.hpp"

namespace sysid {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TheorySchedule schedule_for(const VerifyOptions& o) {
  ScheduleInputs in;
  in.epsilon = o.epsilon;
  in.delta = o.delta;
  in.rho_0 = o.rho_0;
  in.c_rho = o.c_rho;
  in.m = o.m;
  return theory_schedule(in);
}

LemmaReport new_report(const std::string& id, const VerifyOptions& o) {
  if (o.trials < 1) throw ParameterError("trials must be >= 1");
  if (o.m < 1) throw ParameterError("m must be >= 1");
  LemmaReport r;
  r.lemma_id = id;
  r.m = o.m;
  r.tau = o.tau;
  r.trials = o.trials;
  r.seed = o.seed;
  for (int i = 0; i < o.trials; ++i) {
    r.trial_seeds.push_back(subseed(o.seed, static_cast<std::uint64_t>(i)));
  }
  return r;
}

CheckResult new_check(const std::string& name, const std::string& formula,
                      const VerifyOptions& o, bool gating = true) {
  CheckResult c;
  c.name = name;
  c.bound_formula = formula;
  c.gating = gating;
  c.threshold = o.threshold;
  c.ratio.assign(static_cast<std::size_t>(o.trials), 0.0);
  c.trial_pass.assign(static_cast<std::size_t>(o.trials), 0);
  return c;
}

void record(CheckResult& c, int trial, double ratio, bool pass) {
  c.ratio[static_cast<std::size_t>(trial)] = ratio;
  c.trial_pass[static_cast<std::size_t>(trial)] = pass ? 1 : 0;
}

Json quantiles(const std::vector<double>& v) {
  return {{"min", quantile(v, 0.0)},
          {"median", quantile(v, 0.5)},
          {"q95", quantile(v, 0.95)},
          {"max", quantile(v, 1.0)}};
}

std::vector<int> merged_grid(std::vector<int> a, std::initializer_list<int> extra) {
  for (int e : extra) a.push_back(e);
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

// u[k] >= log ||W^k|| for k = 0..kmax from direct values and
// submultiplicativity.
std::vector<double> log_power_bounds(const std::map<int, double>& direct_log,
                                     int kmax) {
  std::vector<double> u(static_cast<std::size_t>(kmax) + 1, kInf);
  u[0] = 0.0;
  for (int k = 1; k <= kmax; ++k) {
    auto it = direct_log.find(k);
    if (it != direct_log.end()) {
      u[static_cast<std::size_t>(k)] = it->second;
      continue;
    }
    for (const auto& [j, lv] : direct_log) {
      if (j > k) break;
      u[static_cast<std::size_t>(k)] =
          std::min(u[static_cast<std::size_t>(k)], lv + u[static_cast<std::size_t>(k - j)]);
    }
  }
  return u;
}

std::map<int, double> direct_log_norms(const Mat& W, const std::vector<int>& ks,
                                       const LanczosOptions& lo, bool single) {
  std::map<int, double> out;
  const MatF Wf = single ? MatF(W.cast<float>()) : MatF();
  for (int k : ks) {
    if (k < 1) continue;
    out[k] = std::log(single ? opnorm_of_power(Wf, k, lo).value
                             : opnorm_of_power(W, k, lo).value);
  }
  return out;
}

Mat sample_inputs(Rng& rng, int d, int T) {
  Mat X(d, T);
  for (int t = 0; t < T; ++t) {
    Vec x = rng.gaussian(d, 1.0 / std::sqrt(static_cast<double>(d)));
    const double n = x.norm();
    if (n > 1.0) x /= n;
    X.col(t) = x;
  }
  return X;
}

}  // namespace

const CheckResult& LemmaReport::check(const std::string& name) const {
  for (const CheckResult& c : checks) {
    if (c.name == name) return c;
  }
  throw ParameterError("report has no check named '" + name + "'");
}

void finalize(CheckResult& c) {
  if (c.skipped || c.trial_pass.empty()) {
    c.pass_fraction = 1.0;
    c.pass = true;
    return;
  }
  double s = 0.0;
  for (int p : c.trial_pass) s += p;
  c.pass_fraction = s / static_cast<double>(c.trial_pass.size());
  c.pass = c.pass_fraction >= c.threshold;
}

void finalize(LemmaReport& r) {
  r.pass = true;
  for (CheckResult& c : r.checks) {
    finalize(c);
    if (c.gating && !c.pass) r.pass = false;
  }
}

Json to_json(const LemmaReport& r) {
  Json j;
  j["schema_version"] = 1;
  j["version"] = kVersion;
  j["lemma_id"] = r.lemma_id;
  j["m"] = r.m;
  j["tau"] = r.tau;
  j["trials"] = r.trials;
  j["seed"] = r.seed;
  j["trial_seeds"] = r.trial_seeds;
  j["pass"] = r.pass;
  Json checks = Json::array();
  for (const CheckResult& c : r.checks) {
    Json cj = {{"name", c.name},
               {"bound_formula", c.bound_formula},
               {"gating", c.gating},
               {"skipped", c.skipped},
               {"pass_fraction", c.pass_fraction},
               {"threshold", c.threshold},
               {"pass", c.pass},
               {"ratio_per_trial", c.ratio},
               {"pass_per_trial", c.trial_pass}};
    if (!c.skipped && !c.ratio.empty()) cj["ratio_quantiles"] = quantiles(c.ratio);
    if (!c.note.empty()) cj["note"] = c.note;
    checks.push_back(std::move(cj));
  }
  j["checks"] = std::move(checks);
  j["details"] = r.details;
  return j;
}

std::vector<int> doubling_grid(int top) {
  std::vector<int> g;
  if (top < 1) return g;
  for (long k = 1; k < top; k *= 2) g.push_back(static_cast<int>(k));
  g.push_back(top);
  return g;
}

// ---------------------------------------------------------------------------

LemmaReport verify_spectral(const VerifyOptions& o) {
  if (o.m < 2) throw ParameterError("verify_spectral: m must be >= 2");
  const TheorySchedule s = schedule_for(o);
  const int L = s.L_cutoff;
  const double log_rho1 = std::log(s.rho_1);
  const double rho = o.rho.value_or(s.rho);
  const double log_rho = std::log(rho), log_rho0 = std::log(o.rho_0);
  const int t_top = 4 * s.T_max;

  const std::vector<int> k_grid = merged_grid(doubling_grid(4 * L), {0, L, 2 * L});
  const std::vector<int> direct_k = doubling_grid(2 * L);
  const std::vector<int> t_grid = doubling_grid(t_top);

  LemmaReport r = new_report("spectral", o);
  r.tau = s.T_max;
  CheckResult ca = new_check("a_large_k", "||W0^k|| <= rho_1^-k for k >= L", o);
  CheckResult cb = new_check("b_small_k", "||W0^k|| <= rho_1^-L for k < L", o);
  CheckResult cc = new_check("c_sqrt_k", "||W0^k|| <= 2 sqrt(k) for 1 <= k <= 2L", o);
  CheckResult cd = new_check(
      "d_perturbed", "||rho^t W^t|| <= 2 sqrt(t) rho_0^t, ||W - W0||_F = omega_0", o);

  std::vector<Json> trial_details(static_cast<std::size_t>(o.trials));
  parallel_for(o.trials, [&](int trial) {
    Rng rng(r.trial_seeds[static_cast<std::size_t>(trial)]);
    Mat W = rng.gaussian(o.m, o.m, o.w0_scale / std::sqrt(static_cast<double>(o.m)));
    const std::map<int, double> direct = direct_log_norms(W, direct_k, o.lanczos, o.single_precision_operator);
    const std::vector<double> u = log_power_bounds(direct, 4 * L);

    double ra = 0.0, rb = 0.0, rc = 0.0;
    for (int k : k_grid) {
      const double lu = u[static_cast<std::size_t>(k)];
      if (k >= L) ra = std::max(ra, std::exp(lu + k * log_rho1));
      if (k < L) rb = std::max(rb, std::exp(lu + L * log_rho1));
    }
    Json norms = Json::object();
    for (const auto& [k, lv] : direct) {
      rc = std::max(rc, std::exp(lv) / (2.0 * std::sqrt(static_cast<double>(k))));
      norms[std::to_string(k)] = std::exp(lv);
    }
    record(ca, trial, ra, ra <= 1.0);
    record(cb, trial, rb, rb <= 1.0);
    record(cc, trial, rc, rc <= 1.0);

    // W <- W0 + omega_0 U with U of unit Frobenius norm.
    W.noalias() += s.omega_0 * rng.unit_frobenius(o.m, o.m);
    std::map<int, double> dW = direct_log_norms(W, {1}, o.lanczos, o.single_precision_operator);
    auto worst = [&](const std::vector<double>& uw) {
      double rd = 0.0;
      for (int t : t_grid) {
        const double lhs = t * log_rho + uw[static_cast<std::size_t>(t)];
        const double rhs = std::log(2.0) + 0.5 * std::log(t) + t * log_rho0;
        rd = std::max(rd, std::exp(lhs - rhs));
      }
      return rd;
    };
    double rd = worst(log_power_bounds(dW, t_top));
    std::string method = "submultiplicative from ||W||";
    if (rd > 1.0) {
      dW = direct_log_norms(W, doubling_grid(t_top), o.lanczos, o.single_precision_operator);
      rd = worst(log_power_bounds(dW, t_top));
      method = "direct on doubling grid";
    }
    record(cd, trial, rd, rd <= 1.0);
    trial_details[static_cast<std::size_t>(trial)] = {
        {"norms_W0_pow", norms},
        {"norm_W_perturbed", std::exp(dW.at(1))},
        {"perturbed_method", method}};
  });
  r.checks = {ca, cb, cc, cd};
  finalize(r);
  r.details = {{"L_cutoff", L},
               {"rho_1", s.rho_1},
               {"rho", rho},
               {"rho_0", o.rho_0},
               {"omega_0", s.omega_0},
               {"T_max", s.T_max},
               {"k_grid", k_grid},
               {"direct_k", direct_k},
               {"t_grid", t_grid},
               {"w0_scale", o.w0_scale},
               {"lanczos_tolerance", o.lanczos.tolerance},
               {"lanczos_max_iterations", o.lanczos.max_iterations},
               {"single_precision_operator", o.single_precision_operator},
               {"trials_detail", trial_details},
               {"note",
                "norms of powers by Golub-Kahan on the matrix-free map; values "
                "beyond the direct grid use products of direct values"}};
  return r;
}

// ---------------------------------------------------------------------------

LemmaReport verify_concentration(const VerifyOptions& o) {
  if (o.tau < 1) throw ParameterError("verify_concentration: tau must be >= 1");
  const int m = o.m, d = o.d, dy = o.d_y, tau = o.tau;
  const double md = m;
  const double log_m = std::log(md);
  const double b_bound = std::sqrt(d * std::log(tau * d / o.delta));
  const double cross_bound = 24.0 * tau * d * d * log_m / std::sqrt(md);
  const double cross_bound_B = 24.0 * tau * d * d * log_m;
  const double gram_bound = log_m / std::sqrt(md);

  LemmaReport r = new_report("concentration", o);
  CheckResult ca = new_check(
      "a_propagated_norms",
      "0.9 <= ||W0^t A0 v||, sqrt(d_y/m) ||(W0^t)^T B^T u|| <= 1.1, t < tau", o);
  CheckResult cb = new_check("b_output_map", "||B W0^t A0|| <= sqrt(d log(tau d/delta))", o);
  CheckResult cc = new_check("c_cross_terms",
                             "||A0^T (W0^t)^T W0^t' A0|| <= 24 tau d^2 log m/sqrt(m), t != t'", o);
  CheckResult cd = new_check("d_gram", "||F^T F - I|| <= log m/sqrt(m), F = W0^t A0", o);
  CheckResult cbx = new_check("cross_terms_B_side",
                              "||B W0^t (W0^t')^T B^T|| <= 24 tau d^2 log m, t != t'", o,
                              /*gating=*/false);
  const bool no_pairs = tau < 2;
  cc.skipped = no_pairs;
  cbx.skipped = no_pairs;
  if (no_pairs) cc.note = cbx.note = "no pair t != t' below tau";

  std::vector<Json> trial_details(static_cast<std::size_t>(o.trials));
  parallel_for(o.trials, [&](int trial) {
    Rng rng(r.trial_seeds[static_cast<std::size_t>(trial)]);
    const Mat W = rng.gaussian(m, m, o.w0_scale / std::sqrt(md));
    const Mat A0 = rng.gaussian(m, d, 1.0 / std::sqrt(md));
    const Mat B = rng.gaussian(dy, m, 1.0 / std::sqrt(static_cast<double>(dy)));
    const Vec v = rng.unit_vector(d);
    const Vec u = rng.unit_vector(dy);
    std::vector<Mat> F, Gt;
    F.push_back(A0);
    Gt.push_back(B.transpose());
    for (int t = 1; t < tau; ++t) {
      F.push_back(W * F.back());
      Gt.push_back(W.transpose() * Gt.back());
    }
    const double sB = std::sqrt(dy / md);
    double ra = 0.0, rb = 0.0, rc = 0.0, rd = 0.0, rbx = 0.0;
    Json nA = Json::array(), nB = Json::array(), nB_literal = Json::array(),
         sv = Json::array(), gram = Json::array();
    for (int t = 0; t < tau; ++t) {
      const double a = (F[static_cast<std::size_t>(t)] * v).norm();
      const double bnorm = (Gt[static_cast<std::size_t>(t)] * u).norm();
      ra = std::max({ra, std::abs(a - 1.0) / 0.1, std::abs(sB * bnorm - 1.0) / 0.1});
      nA.push_back(a);
      nB.push_back(sB * bnorm);
      nB_literal.push_back(bnorm / std::sqrt(md));
      const Mat BF = B * F[static_cast<std::size_t>(t)];
      rb = std::max(rb, opnorm(BF) / b_bound);
      const Mat FtF = F[static_cast<std::size_t>(t)].transpose() * F[static_cast<std::size_t>(t)];
      Eigen::SelfAdjointEigenSolver<Mat> es(FtF);
      sv.push_back({std::sqrt(std::max(0.0, es.eigenvalues().minCoeff())),
                    std::sqrt(es.eigenvalues().maxCoeff())});
      const double gdev = opnorm(FtF - Mat::Identity(d, d));
      gram.push_back(gdev);
      rd = std::max(rd, gdev / gram_bound);
      for (int t2 = 0; t2 < tau; ++t2) {
        if (t2 == t) continue;
        const Mat X = F[static_cast<std::size_t>(t)].transpose() * F[static_cast<std::size_t>(t2)];
        rc = std::max(rc, opnorm(X) / cross_bound);
        const Mat Y = Gt[static_cast<std::size_t>(t)].transpose() * Gt[static_cast<std::size_t>(t2)];
        rbx = std::max(rbx, opnorm(Y) / cross_bound_B);
      }
    }
    record(ca, trial, ra, ra <= 1.0);
    record(cb, trial, rb, rb <= 1.0);
    if (!no_pairs) {
      record(cc, trial, rc, rc <= 1.0);
      record(cbx, trial, rbx, rbx <= 1.0);
    }
    record(cd, trial, rd, rd <= 1.0);
    trial_details[static_cast<std::size_t>(trial)] = {
        {"norm_A_side", nA},
        {"norm_B_side_scaled", nB},
        {"norm_B_side_1_over_sqrt_m", nB_literal},
        {"singular_range_F", sv},
        {"gram_deviation", gram}};
  });
  r.checks = {ca, cb, cc, cd, cbx};
  finalize(r);
  r.details = {{"d", d},
               {"d_y", dy},
               {"delta", o.delta},
               {"regime_m_gt_tau3_d", md > std::pow(tau, 3) * d},
               {"bounds",
                {{"output_map", b_bound},
                 {"cross", cross_bound},
                 {"cross_B_side", cross_bound_B},
                 {"gram", gram_bound}}},
               {"B_side_scaling", "sqrt(d_y/m)"},
               {"trials_detail", trial_details}};
  return r;
}

// ---------------------------------------------------------------------------

LemmaReport verify_tail(const VerifyOptions& o) {
  std::vector<int> grid = o.tau_grid.empty() ? std::vector<int>{1, 2, 4, 8, 16, 32}
                                             : o.tau_grid;
  std::sort(grid.begin(), grid.end());
  if (grid.front() < 1) throw ParameterError("verify_tail: tau values must be >= 1");
  const TheorySchedule s = schedule_for(o);
  const double rho = o.rho.value_or(s.rho);
  const double r0 = o.rho_0;
  const int m = o.m, d = o.d, dy = o.d_y;
  const double md = m;
  const int tau_max = grid.back();
  const int cap = tau_max + 2000;

  LemmaReport r = new_report("tail", o);
  r.tau = tau_max;
  CheckResult c1 = new_check(
      "first_sum", "||sum_{t>=tau} rho^t B W^t Q z_t|| <= 4 sqrt(m) tau rho_0^tau/(1-rho_0)^2 ||Q||", o);
  CheckResult c2 = new_check(
      "second_sum",
      "||sum_{t0>=tau} sum_{t1+t2=t0} rho^t0 B W^(t1-1) Q2 W^(t2-1) A z|| <= 32 sqrt(m) tau^2 "
      "rho_0^tau/(1-rho_0)^3 ||Q2||",
      o);
  CheckResult cm = new_check("monotone_in_tau",
                             "sum over t >= tau of summand norms is non-increasing in tau", o);

  std::vector<Json> trial_details(static_cast<std::size_t>(o.trials));
  parallel_for(o.trials, [&](int trial) {
    Rng rng(r.trial_seeds[static_cast<std::size_t>(trial)]);
    Mat W = rng.gaussian(m, m, o.w0_scale / std::sqrt(md));
    Mat A = rng.gaussian(m, d, 1.0 / std::sqrt(md));
    const Mat B = rng.gaussian(dy, m, 1.0 / std::sqrt(static_cast<double>(dy)));
    W.noalias() += s.omega_0 * rng.unit_frobenius(m, m);
    A.noalias() += s.omega_0 * rng.unit_frobenius(m, d);
    Mat Q = rng.gaussian(m, d, 1.0);
    Q *= o.q_scale / opnorm(Q);
    Mat Q2 = rng.gaussian(m, m, 1.0);
    const double q2n = opnorm_of_power(Q2, 1, o.lanczos).value;
    Q2 *= o.q_scale / q2n;
    const double normQ = o.q_scale, normQ2 = o.q_scale;

    std::vector<Vec> term1, term2;
    std::vector<Mat> LQ;  // rho^a B W^a Q2
    std::vector<Mat> Rb;  // rho^b W^b A
    Mat ell = B;          // rho^t B W^t
    Mat rb = A;
    bool hit_cap = true;
    double ref1 = 0.0, ref2 = 0.0;
    for (int t = 0; t <= cap; ++t) {
      const Vec z = rng.unit_vector(d);
      term1.push_back(ell * (Q * z));
      LQ.push_back(ell * Q2);
      Rb.push_back(rb);
      Vec t2 = Vec::Zero(dy);
      for (int a = 0; a + 2 <= t; ++a) {
        t2.noalias() += LQ[static_cast<std::size_t>(a)] *
                        (Rb[static_cast<std::size_t>(t - 2 - a)] * z);
      }
      t2 *= rho * rho;
      term2.push_back(t2);
      if (t == tau_max) {
        ref1 = term1.back().norm();
        ref2 = term2.back().norm();
      }
      if (t > tau_max) {
        ref1 = std::max(ref1, term1.back().norm());
        ref2 = std::max(ref2, term2.back().norm());
        if (term1.back().norm() <= 1e-16 * ref1 && term2.back().norm() <= 1e-16 * ref2) {
          hit_cap = false;
          break;
        }
      }
      ell = rho * (ell * W);
      rb = rho * (W * rb);
    }
    const int N = static_cast<int>(term1.size());
    // Suffix sums.
    std::vector<Vec> S1(static_cast<std::size_t>(N) + 1, Vec::Zero(dy)),
        S2(static_cast<std::size_t>(N) + 1, Vec::Zero(dy));
    std::vector<double> n1(static_cast<std::size_t>(N) + 1, 0.0),
        n2(static_cast<std::size_t>(N) + 1, 0.0);
    for (int t = N - 1; t >= 0; --t) {
      const auto i = static_cast<std::size_t>(t);
      S1[i] = S1[i + 1] + term1[i];
      S2[i] = S2[i + 1] + term2[i];
      n1[i] = n1[i + 1] + term1[i].norm();
      n2[i] = n2[i + 1] + term2[i].norm();
    }
    double r1 = 0.0, r2 = 0.0;
    bool ok1 = true, ok2 = true, mono = true;
    Json tails = Json::array();
    double prev_n = kInf;
    for (int tau : grid) {
      const auto i = static_cast<std::size_t>(std::min(tau, N));
      const double b1 = 4.0 * std::sqrt(md) * tau * std::pow(r0, tau) /
                        std::pow(1.0 - r0, 2) * normQ;
      const double b2 = 32.0 * std::sqrt(md) * tau * tau * std::pow(r0, tau) /
                        std::pow(1.0 - r0, 3) * normQ2;
      const double v1 = S1[i].norm(), v2 = S2[i].norm();
      ok1 = ok1 && v1 <= b1;
      ok2 = ok2 && v2 <= b2;
      if (b1 > 0.0) r1 = std::max(r1, v1 / b1);
      if (b2 > 0.0) r2 = std::max(r2, v2 / b2);
      const double nsum = n1[i] + n2[i];
      mono = mono && nsum <= prev_n;
      prev_n = nsum;
      tails.push_back({{"tau", tau},
                       {"first", v1},
                       {"first_bound", b1},
                       {"first_sum_of_norms", n1[i]},
                       {"second", v2},
                       {"second_bound", b2},
                       {"second_sum_of_norms", n2[i]}});
    }
    record(c1, trial, r1, ok1);
    record(c2, trial, r2, ok2);
    record(cm, trial, mono ? 0.0 : 1.0, mono);
    trial_details[static_cast<std::size_t>(trial)] = {
        {"terms_evaluated", N}, {"stopped_at_cap", hit_cap}, {"tails", tails}};
  });
  r.checks = {c1, c2, cm};
  finalize(r);
  r.details = {{"rho", rho},
               {"rho_0", r0},
               {"omega_0", s.omega_0},
               {"tau_grid", grid},
               {"q_scale", o.q_scale},
               {"summand_cutoff", "1e-16 relative to the largest summand at or past max tau"},
               {"trials_detail", trial_details}};
  return r;
}

// ---------------------------------------------------------------------------

LemmaReport verify_linearization(const VerifyOptions& o) {
  const TheorySchedule s = schedule_for(o);
  std::vector<double> grid = o.omega_grid.empty()
                                 ? std::vector<double>{1e-3, 3e-3, 1e-2, 3e-2}
                                 : o.omega_grid;
  for (double w : grid) {
    if (!(w >= 0.0 && w <= s.omega_0)) {
      throw ParameterError("verify_linearization: omega outside [0, omega_0]");
    }
  }
  const double rho = o.rho.value_or(s.rho);
  const double r0 = o.rho_0;
  const int m = o.m, d = o.d, dy = o.d_y, T = o.T;
  const double md = m;
  std::vector<double> positive;
  for (double w : grid) {
    if (w > 0.0) positive.push_back(w);
  }
  std::sort(positive.begin(), positive.end());
  positive.erase(std::unique(positive.begin(), positive.end()), positive.end());
  const bool slope_skipped = positive.size() < 2;
  const double omega_max = grid.empty() ? 0.0 : *std::max_element(grid.begin(), grid.end());
  const double grad_bound = 32.0 * std::sqrt(md) / std::pow(1.0 - r0, 3);

  LemmaReport r = new_report("linearization", o);
  r.tau = T;
  CheckResult cr = new_check("residual_bound",
                             "max_t ||f_t(W0+wU, A0+wV) - f_t^lin|| <= 768 sqrt(m) w^2/(1-rho_0)^5", o);
  CheckResult cs = new_check("slope", "log-log slope of the residual in w within 2.0 +- 0.2", o);
  cs.skipped = slope_skipped;
  if (slope_skipped) cs.note = "fewer than two positive omega values";
  CheckResult cb = new_check("output_bound", "max_t ||f_t|| <= 2b at w = 0 and w = max", o);
  CheckResult cg = new_check("gradient_norm",
                             "||grad_W f_T||_F, ||grad_A f_T||_F <= 32 sqrt(m)/(1-rho_0)^3", o);

  std::vector<Json> trial_details(static_cast<std::size_t>(o.trials));
  parallel_for(o.trials, [&](int trial) {
    Rng rng(r.trial_seeds[static_cast<std::size_t>(trial)]);
    const Mat W0 = rng.gaussian(m, m, o.w0_scale / std::sqrt(md));
    const Mat A0 = rng.gaussian(m, d, 1.0 / std::sqrt(md));
    const Mat B = rng.gaussian(dy, m, 1.0 / std::sqrt(static_cast<double>(dy)));
    const Mat U = rng.unit_frobenius(m, m);
    const Mat V = rng.unit_frobenius(m, d);
    const Mat X = sample_inputs(rng, d, T);
    const Mat F0 = forward_rescaled(W0, A0, B, rho, X);
    const Mat J = jvp_sequence(W0, A0, B, rho, X, U, V);
    double worst = 0.0;
    bool ok = true;
    std::vector<double> xs, ys;
    Json res = Json::array();
    double out_max = F0.colwise().norm().maxCoeff();
    for (double w : grid) {
      const Mat Fw = forward_rescaled(W0 + w * U, A0 + w * V, B, rho, X);
      const double resid = (Fw - (F0 + w * J)).colwise().norm().maxCoeff();
      const double bound = 768.0 * std::sqrt(md) * w * w / std::pow(1.0 - r0, 5);
      ok = ok && resid <= bound;
      if (bound > 0.0) worst = std::max(worst, resid / bound);
      if (w > 0.0 && resid > 0.0) {
        xs.push_back(w);
        ys.push_back(resid);
      }
      if (w == omega_max) out_max = std::max(out_max, Fw.colwise().norm().maxCoeff());
      res.push_back({{"omega", w}, {"residual", resid}, {"bound", bound}});
    }
    record(cr, trial, worst, ok);
    double slope = std::nan("");
    if (!slope_skipped && xs.size() >= 2) {
      slope = fit_loglog_slope(xs, ys);
      record(cs, trial, std::abs(slope - 2.0) / 0.2, std::abs(slope - 2.0) <= 0.2);
    }
    record(cb, trial, out_max / (2.0 * s.b), out_max <= 2.0 * s.b);
    const OutputGradNorms gn =
        output_gradient_norms(W0 + omega_max * U, A0 + omega_max * V, B, rho, X, T);
    const double rg = std::max(gn.W, gn.A) / grad_bound;
    record(cg, trial, rg, rg <= 1.0);
    trial_details[static_cast<std::size_t>(trial)] = {
        {"residuals", res},
        {"slope", slope},
        {"max_output_norm", out_max},
        {"grad_W_frob", gn.W},
        {"grad_A_frob", gn.A}};
  });
  r.checks = {cr, cs, cb, cg};
  finalize(r);
  r.details = {{"rho", rho},
               {"rho_0", r0},
               {"omega_0", s.omega_0},
               {"omega_grid", grid},
               {"b", s.b},
               {"T", T},
               {"trials_detail", trial_details}};
  return r;
}

// ---------------------------------------------------------------------------

LemmaReport verify_truncation(const VerifyOptions& o) {
  const TheorySchedule s = schedule_for(o);
  std::vector<int> grid = o.tau_grid.empty()
                              ? std::vector<int>{4, 8, 12, 16, 20, 24, 28, 32}
                              : o.tau_grid;
  std::sort(grid.begin(), grid.end());
  if (grid.front() < 1) throw ParameterError("verify_truncation: tau values must be >= 1");
  if (!(o.displacement >= 0.0 && o.displacement <= s.omega_0)) {
    throw ParameterError("verify_truncation: displacement outside [0, omega_0]");
  }
  const double rho = o.rho.value_or(o.rho_0);
  const double r0 = o.rho_0;
  const int m = o.m, d = o.d, dy = o.d_y;
  const double md = m;
  const int T = std::max({o.T, grid.back() + 32, s.T_max + 2});
  const double eps_over_b = o.epsilon / s.b;

  LemmaReport r = new_report("truncation", o);
  r.tau = grid.back();
  CheckResult cb = new_check("bound",
                             "max_t ||f^lin_t - f^{lin,tau}_t|| <= 8 sqrt(m) tau rho_0^tau/(1-rho_0)^3", o);
  CheckResult cs = new_check("decay_slope", "slope of log error in tau within 20% of log rho_0", o);
  CheckResult ce = new_check("eps_over_b", "error at tau = T_max <= epsilon/b", o);

  std::vector<Json> trial_details(static_cast<std::size_t>(o.trials));
  parallel_for(o.trials, [&](int trial) {
    Rng rng(r.trial_seeds[static_cast<std::size_t>(trial)]);
    const Mat W0 = rng.gaussian(m, m, o.w0_scale / std::sqrt(md));
    const Mat A0 = rng.gaussian(m, d, 1.0 / std::sqrt(md));
    const Mat B = rng.gaussian(dy, m, 1.0 / std::sqrt(static_cast<double>(dy)));
    const Mat U = rng.unit_frobenius(m, m);
    const Mat V = rng.unit_frobenius(m, d);
    const Mat X = sample_inputs(rng, d, T);
    std::vector<Mat> M = markov_parameters(W0, A0, B, rho, T - 1);
    const std::vector<Mat> dM =
        markov_tangents(W0, A0, B, rho, o.displacement * U, o.displacement * V, T - 1);
    for (std::size_t j = 0; j < M.size(); ++j) M[j] += dM[j];
    const Mat full = convolve(M, X, T - 1);
    auto err = [&](int tau) {
      return (full - convolve(M, X, tau)).colwise().norm().maxCoeff();
    };
    double worst = 0.0;
    bool ok = true;
    std::vector<double> xs, ys;
    Json errs = Json::array();
    for (int tau : grid) {
      const double e = err(tau);
      const double bound = 8.0 * std::sqrt(md) * tau * std::pow(r0, tau) / std::pow(1.0 - r0, 3);
      ok = ok && e <= bound;
      worst = std::max(worst, e / bound);
      if (e > 0.0) {
        xs.push_back(tau);
        ys.push_back(std::log(e));
      }
      errs.push_back({{"tau", tau}, {"error", e}, {"bound", bound}});
    }
    record(cb, trial, worst, ok);
    double slope = std::nan("");
    if (xs.size() >= 2) {
      slope = fit_slope(xs, ys);
      const double tol = 0.2 * std::abs(std::log(r0));
      record(cs, trial, std::abs(slope - std::log(r0)) / tol,
             std::abs(slope - std::log(r0)) <= tol);
    }
    const double e_tmax = err(s.T_max);
    record(ce, trial, e_tmax / eps_over_b, e_tmax <= eps_over_b);
    trial_details[static_cast<std::size_t>(trial)] = {
        {"errors", errs}, {"slope", slope}, {"error_at_T_max", e_tmax}};
  });
  r.checks = {cb, cs, ce};
  finalize(r);
  r.details = {{"rho", rho},
               {"rho_0", r0},
               {"T", T},
               {"T_max", s.T_max},
               {"b", s.b},
               {"epsilon", o.epsilon},
               {"eps_over_b", eps_over_b},
               {"displacement", o.displacement},
               {"tau_grid", grid},
               {"trials_detail", trial_details}};
  return r;
}

}  // namespace sysid
