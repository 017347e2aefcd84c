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
#include <filesystem>

#include "sysid/error.hpp"
#include "sysid/gradients.hpp"
#include "sysid/io.hpp"
#include "sysid/schedule.hpp"
#include "sysid/trainer.hpp"

using namespace sysid;

namespace {

SequenceDataset small_data(int K = 16, double sigma = 0.0, std::uint64_t seed = 3) {
  const StableLinearSystem s = random_stable_system(4, 2, 2, 0.8, 7);
  return generate_dataset(s, InputSpec::kIidGaussianUnit, sigma, 6, K, seed);
}

std::string tmpdir(const char* name) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  return p.string();
}

}  // namespace

TEST_CASE("zero step size leaves parameters unchanged") {
  const SequenceDataset data = small_data();
  StudentRNN rnn = init_student(32, 2, 2, 0.9, 1);
  const StudentRNN init = rnn;
  TrainOptions o;
  o.eta = 0.0;
  o.K = 20;
  o.seed = 2;
  const TrainTrace tr = sgd_train(rnn, data, make_loss("square"), o);
  CHECK(rnn.W == init.W);
  CHECK(rnn.A == init.A);
  CHECK(tr.steps.size() == 20);
  for (const TrainStep& st : tr.steps) CHECK(st.dW_frob == 0.0);
}

TEST_CASE("one step matches the closed form") {
  // m = 2, T = 1, square loss: W is untouched (no recurrence at T = 1) and
  // A <- A - eta 2 B^T (B A x - y) x^T.
  const StableLinearSystem s = random_stable_system(2, 1, 1, 0.5, 1);
  const SequenceDataset data = generate_dataset(s, InputSpec::kIidGaussianUnit, 0.0, 1, 1, 4);
  StudentRNN rnn = init_student(2, 1, 1, 0.5, 3);
  const StudentRNN init = rnn;
  TrainOptions o;
  o.eta = 0.1;
  o.K = 1;
  sgd_train(rnn, data, make_loss("square"), o);
  const Mat& x = data.inputs[0];
  const Mat& y = data.observed[0];
  const Mat A1 = init.A - 0.1 * 2.0 * init.B.transpose() * (init.B * init.A * x - y) * x.transpose();
  CHECK((rnn.A - A1).norm() <= 1e-15);
  CHECK(rnn.W == init.W);
  CHECK(rnn.B == init.B);
}

TEST_CASE("the W update is the literal W_tilde step") {
  const SequenceDataset data = small_data(1);
  StudentRNN rnn = init_student(10, 2, 2, 0.6, 5);
  const StudentRNN init = rnn;
  const GradientPair g = loss_gradients_bptt(init, data.inputs[0], data.observed[0],
                                             make_loss("square"));
  TrainOptions o;
  o.eta = 0.05;
  o.K = 1;
  sgd_train(rnn, data, make_loss("square"), o);
  const Mat Wt1 = init.W_tilde() - 0.05 * g.grad_W_tilde(init.rho);
  CHECK((rnn.W_tilde() - Wt1).norm() <= 1e-14 * Wt1.norm());
}

TEST_CASE("averaging and determinism") {
  TrainTrace t;
  t.steps.resize(2);
  t.steps[0].loss = 0.4;
  t.steps[1].loss = 0.2;
  CHECK(averaged_loss(t) == doctest::Approx(0.3));
  CHECK(running_average(t, 2, 1) == doctest::Approx(0.2));

  const SequenceDataset data = small_data();
  TrainOptions o;
  o.eta = 0.5 / 32;
  o.K = 50;
  o.seed = 9;
  StudentRNN a = init_student(32, 2, 2, 0.9, 1), b = a;
  const TrainTrace ta = sgd_train(a, data, make_loss("square"), o);
  const TrainTrace tb = sgd_train(b, data, make_loss("square"), o);
  CHECK(trace_to_jsonl(ta) == trace_to_jsonl(tb));
  CHECK(a.W == b.W);

  // Constant parameters and a single sequence: the average is that loss.
  const SequenceDataset one = small_data(1);
  StudentRNN c = init_student(16, 2, 2, 0.9, 2);
  o.eta = 0.0;
  const TrainTrace tc = sgd_train(c, one, make_loss("square"), o);
  CHECK(averaged_loss(tc) == doctest::Approx(dataset_loss(c, one, make_loss("square"))));
}

TEST_CASE("averaged loss from checkpoints") {
  const SequenceDataset data = small_data();
  const std::string dir = tmpdir("sysid_avg");
  StudentRNN rnn = init_student(24, 2, 2, 0.9, 4);
  TrainOptions o;
  o.eta = 0.3 / 24;
  o.K = 12;
  o.seed = 1;
  o.checkpoint_every = 1;
  o.out_dir = dir;
  const TrainTrace tr = sgd_train(rnn, data, make_loss("square"), o);
  const double recomputed = averaged_loss_from_checkpoints(tr, data, make_loss("square"), dir);
  CHECK(std::abs(recomputed - averaged_loss(tr)) <= 1e-12 * averaged_loss(tr));
  std::filesystem::remove_all(dir);
}

TEST_CASE("divergence aborts with a diagnostic checkpoint") {
  const SequenceDataset data = small_data();
  const std::string dir = tmpdir("sysid_div");
  StudentRNN rnn = init_student(16, 2, 2, 0.9, 4);
  TrainOptions o;
  o.eta = 1e6;
  o.K = 200;
  o.out_dir = dir;
  const TrainTrace tr = sgd_train(rnn, data, make_loss("square"), o);
  CHECK(tr.aborted);
  CHECK(std::filesystem::exists(dir + "/checkpoints/diagnostic.json"));
  std::filesystem::remove_all(dir);
  StudentRNN r2 = init_student(16, 2, 2, 0.9, 4);
  o.out_dir.clear();
  o.K = 0;
  CHECK_THROWS_AS(sgd_train(r2, data, make_loss("square"), o), ParameterError);
}

TEST_CASE("trajectory radius stays within the step budget") {
  // With theory rho the loss gradient in W is at most
  // 32 sqrt(m)/(1-rho_0)^3 l0 (1+2b) and W moves by eta/rho^2 times it per step.
  const int m = 64;
  const TheorySchedule s = theory_schedule(0.1, std::exp(-1.0), 0.9, 1.0, m);
  const SequenceDataset data = small_data(8);
  StudentRNN rnn = init_student(m, 2, 2, s.rho, 6, InitLaw::kRescaled);
  TrainOptions o;
  o.eta = 0.05;
  o.K = 100;
  const TrainTrace tr = sgd_train(rnn, data, make_loss("square"), o);
  const double l0 = make_loss("square").l0(2);
  const double gmax = 32.0 * std::sqrt(double(m)) / std::pow(0.1, 3) * l0 * (1.0 + 2.0 * s.b);
  for (const TrainStep& st : tr.steps) {
    CHECK(st.dW_frob <= static_cast<double>(st.k) * o.eta / (s.rho * s.rho) * gmax);
    CHECK(st.dA_frob <= static_cast<double>(st.k) * o.eta * gmax);
  }
  CHECK(rnn.dW_frob() <= o.K * o.eta / (s.rho * s.rho) * gmax);
}

TEST_CASE("eta calibration picks a stable candidate") {
  const SequenceDataset data = small_data(32);
  const StudentRNN init = init_student(64, 2, 2, 0.9, 1);
  const EtaCalibration cal = calibrate_eta(init, data, make_loss("square"),
                                           {1e4, 1.0 / 64, 0.1 / 64}, 200, 3, 50);
  CHECK(cal.grid.size() == 3);
  CHECK(cal.grid[0].diverged);
  CHECK(cal.chosen == doctest::Approx(1.0 / 64));
}

TEST_CASE("trace format") {
  const SequenceDataset data = small_data();
  StudentRNN rnn = init_student(8, 2, 2, 0.9, 1);
  TrainOptions o;
  o.eta = 0.01;
  o.K = 3;
  o.config_hash = "cafe";
  const std::string s = trace_to_jsonl(sgd_train(rnn, data, make_loss("square"), o));
  std::size_t lines = 0;
  std::size_t pos = 0;
  while ((pos = s.find('\n', pos)) != std::string::npos) {
    ++lines;
    ++pos;
  }
  CHECK(lines == 4);
  const std::size_t first = s.find('\n') + 1;
  const Json rec = Json::parse(s.substr(first, s.find('\n', first) - first));
  CHECK(rec.contains("k"));
  CHECK(rec.contains("i"));
  CHECK(rec.contains("loss"));
  CHECK(rec.contains("dW_frob"));
  CHECK(rec.contains("dA_frob"));
}
