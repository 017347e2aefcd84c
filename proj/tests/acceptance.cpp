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

// Acceptance checks. Each criterion prints one PASS/FAIL line with the
// measured quantities, the pinned tolerance and the runtime budget.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sysid/experiment.hpp"
#include "sysid/gradients.hpp"
#include "sysid/io.hpp"
#include "sysid/random.hpp"
#include "sysid/student.hpp"
#include "sysid/teacher.hpp"

using namespace sysid;
namespace fs = std::filesystem;

namespace {

std::string g_config_dir = SYSID_CONFIG_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

ExperimentConfig config(const std::string& name) {
  return load_config(g_config_dir + "/" + name);
}

// Gradient correctness.
Outcome criterion1() {
  double adj = 0.0;
  for (const char* kind : {"square", "huber"}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      Rng rng(seed);
      const StudentRNN s = init_student(48, 3, 2, 0.9, seed);
      const Mat X = rng.gaussian(3, 6, 1.0);
      const Mat Y = rng.gaussian(2, 6, 1.0);
      const Loss loss = make_loss(kind, 0.5);
      const GradientPair g = loss_gradients_bptt(s.W, s.A, s.B, s.rho, X, Y, loss);
      const auto [eW, eA] = oracle::explicit_gradients(s.W, s.A, s.B, s.rho, X, Y, loss);
      adj = std::max({adj, oracle::rel_err(g.grad_W, eW), oracle::rel_err(g.grad_A, eA)});
    }
  }
  double fd = 0.0;
  for (const char* kind : {"square", "huber"}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      Rng rng(100 + seed);
      const StudentRNN s = init_student(64, 3, 2, 0.9, seed);
      const Mat X = rng.gaussian(3, 8, 1.0);
      const Mat Y = rng.gaussian(2, 8, 2.0);
      const Mat ZW = rng.unit_frobenius(64, 64), ZA = rng.unit_frobenius(64, 3);
      const FdReport r = finite_difference_check_rnn(s.W, s.A, s.B, s.rho, X, Y,
                                                     make_loss(kind, 0.5), ZW, ZA);
      fd = std::max(fd, r.min_relerr);
    }
  }
  return {adj <= 1e-9 && fd <= 1e-6,
          "adjoint vs explicit " + num(adj) + " (<= 1e-9), finite differences " + num(fd) +
              " (<= 1e-6)"};
}

// Forward identities.
Outcome criterion2() {
  double teach = 0.0, stud = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const StableLinearSystem sys = random_stable_system(4, 2, 3, 0.8, seed);
    Rng rng(seed + 1000);
    const Mat X = rng.gaussian(2, 30, 1.0);
    teach = std::max(teach, oracle::rel_err(simulate(sys, X).outputs,
                                            oracle::teacher_convolution(sys, X)));
    const StudentRNN s = init_student(64, 2, 3, 0.9, seed);
    const Mat Xs = rng.gaussian(2, 16, 1.0);
    const Mat F = forward(s, Xs).outputs;
    const Mat Fr = forward_rescaled(s.W, s.A, s.B, s.rho, Xs);
    const Mat E = oracle::student_powers(s.W, s.A, s.B, s.rho, Xs);
    stud = std::max({stud, oracle::rel_err(F, E), oracle::rel_err(Fr, E)});
  }
  return {teach <= 1e-9 && stud <= 1e-9,
          "teacher " + num(teach) + ", student " + num(stud) + " (<= 1e-9, 20 seeds)"};
}

Json verify_lemma(const std::string& file, std::optional<int> m = std::nullopt) {
  ExperimentConfig cfg = config(file);
  if (m) cfg.verify.m = *m;
  return run_experiment(cfg, "").report["lemmas"][0];
}

double fraction(const Json& lemma, const std::string& check) {
  for (const Json& c : lemma["checks"]) {
    if (c["name"] == check) return c["pass_fraction"].get<double>();
  }
  throw std::runtime_error("missing check " + check);
}

// Appends "name=fraction" for each check and clears `pass` if any is below 0.95.
Outcome fractions(const Json& lemma, const std::vector<std::string>& checks,
                  const std::string& prefix, bool& pass) {
  std::string s = prefix;
  for (const std::string& c : checks) {
    const double f = fraction(lemma, c);
    pass = pass && f >= 0.95;
    s += " " + c + "=" + num(f);
  }
  return {pass, s};
}

// Spectral bounds at three widths.
Outcome criterion3() {
  bool pass = true;
  std::string detail;
  for (int m : {256, 1024, 4096}) {
    const Json l = verify_lemma("spectral.json", m);
    detail += fractions(l, {"c_sqrt_k", "d_perturbed"}, "m=" + std::to_string(m) + ":", pass)
                  .detail +
              ";";
  }
  return {pass, detail + " (each >= 0.95)"};
}

Outcome criterion4() {
  bool pass = true;
  const Json l = verify_lemma("concentration.json");
  const std::string s =
      fractions(l, {"a_propagated_norms", "d_gram", "c_cross_terms"}, "m=4096:", pass).detail;
  return {pass, s + " (each >= 0.95)"};
}

Outcome criterion5() {
  bool pass = true;
  const Json l = verify_lemma("linearization.json");
  const std::string s = fractions(l, {"slope", "residual_bound"}, "m=1024:", pass).detail;
  return {pass, s + " (each >= 0.95)"};
}

Outcome criterion6() {
  bool pass = true;
  const Json l = verify_lemma("truncation.json");
  const std::string s = fractions(l, {"decay_slope", "eps_over_b"}, "m=1024:", pass).detail;
  return {pass, s + " (each >= 0.95), T_max=" + std::to_string(l["details"]["T_max"].get<int>())};
}

Outcome criterion7() {
  const ExperimentResult r = run_experiment(config("existence.json"), "");
  bool dist = true;
  for (const Json& c : r.report["cells"]) dist = dist && c["distances_ok"].get<bool>();
  const double slope = r.report["aggregate"]["fit_error_slope"].get<double>();
  const bool ok = dist && slope >= -0.7 && slope <= -0.3;
  return {ok, std::string("distances within bound in every cell: ") + (dist ? "yes" : "no") +
                  ", fit_error slope " + num(slope) + " (in [-0.7, -0.3])"};
}

Outcome criterion8() {
  const ExperimentResult r = run_experiment(config("train.json"), "");
  const Json& a = r.report["assertions"];
  const double lr = a["loss_ratio"]["value"].get<double>();
  const double hr = a["holdout_ratio"]["value"].get<double>();
  const long K = std::stol(r.summary_rows.at(0).at(7));
  const bool ok = r.pass && lr <= 0.01 && hr <= 2.0 && K <= 20000;
  return {ok, "eta=" + num(r.report["eta"].get<double>()) + " (calibrated), K=" +
                  std::to_string(K) + ", running loss/initial " + num(lr) +
                  " (<= 0.01), holdout/train " + num(hr) + " (<= 2)"};
}

Outcome criterion9() {
  const ExperimentResult r = run_experiment(config("generalization.json"), "");
  const Json& g = r.report["generalization_rms"][0];
  const double e = g["exponent"].get<double>();
  const std::vector<double> gap = g["gap"].get<std::vector<double>>();
  const bool decreasing = gap.back() < gap.front();
  const bool ok = decreasing && e >= -0.75 && e <= -0.25;
  return {ok, "rms gap " + num(gap.front()) + " -> " + num(gap.back()) + ", exponent " + num(e) +
                  " (in [-0.75, -0.25]), 5 paired seeds"};
}

std::map<std::string, std::string> files_under(const std::string& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_file(e.path().string());
  }
  return out;
}

// Bit-exact reruns of a training, a verification and an existence run.
Outcome criterion10() {
  ExperimentConfig ver = config("linearization.json");
  ver.verify.m = 128;
  ver.verify.trials = 3;
  ExperimentConfig ex = config("existence.json");
  ex.sweep.m_grid = {64, 128};
  ex.sweep.seeds = {1, 2};
  ex.output.comparators = true;
  const std::vector<std::pair<std::string, ExperimentConfig>> runs = {
      {"train", config("determinism.json")}, {"verify", ver}, {"existence", ex}};
  const fs::path root = fs::temp_directory_path() / "sysid_acceptance_determinism";
  fs::remove_all(root);
  std::size_t compared = 0;
  bool same = true;
  std::string diff;
  for (const auto& [name, cfg] : runs) {
    const std::string a = (root / (name + "_a")).string(), b = (root / (name + "_b")).string();
    run_experiment(cfg, a);
    run_experiment(cfg, b);
    const auto fa = files_under(a), fb = files_under(b);
    if (fa.size() != fb.size()) {
      same = false;
      diff = name + ": file sets differ";
    }
    for (const auto& [path, content] : fa) {
      ++compared;
      auto it = fb.find(path);
      if (it == fb.end() || it->second != content) {
        same = false;
        diff = name + "/" + path;
      }
    }
  }
  fs::remove_all(root);
  return {same, std::to_string(compared) + " output files compared byte for byte" +
                    (same ? "" : ", first difference: " + diff)};
}

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sysid acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-10); 0 runs all")
      ->check(CLI::Range(0, 10));
  app.add_option("--config-dir", g_config_dir, "Directory holding the experiment configs");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all = {
      {1, "gradient correctness", 10, criterion1},
      {2, "forward identities", 10, criterion2},
      {3, "spectral power bounds", 300, criterion3},
      {4, "concentration", 300, criterion4},
      {5, "linearization", 120, criterion5},
      {6, "truncation", 120, criterion6},
      {7, "existence", 600, criterion7},
      {8, "end-to-end learning", 600, criterion8},
      {9, "generalization gap", 600, criterion9},
      {10, "determinism", 60, criterion10},
  };
  bool ok = true;
  for (const Criterion& c : all) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    ok = ok && pass;
    std::cout << "criterion " << c.id << " [" << c.name << "]: " << (pass ? "PASS" : "FAIL")
              << " | " << o.detail << " | runtime " << num(secs) << " s (< " << c.budget_s
              << " s" << (in_time ? "" : ", over budget") << ")" << std::endl;
  }
  return ok ? 0 : 1;
}
