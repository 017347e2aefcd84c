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

#ifndef SYSID_TEACHER_HPP_
#define SYSID_TEACHER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "sysid/linalg.hpp"

namespace sysid {

// p_t = C p_{t-1} + D x_t,  y_t = G p_t,  with ||C^k D|| <= c_rho rho_C^k.
struct StableLinearSystem {
  Mat C;  // d_p x d_p
  Mat D;  // d_p x d
  Mat G;  // d_y x d_p
  double rho_C = 0.0;
  double c_rho = 0.0;
  // sup_k ||C^k|| / rho_C^k over the same horizon, recorded alongside c_rho.
  double c_rho_state = 0.0;
  double opnorm_D = 0.0;
  double opnorm_G = 0.0;
  int certified_horizon = 0;

  int d_p() const { return static_cast<int>(C.rows()); }
  int d() const { return static_cast<int>(D.cols()); }
  int d_y() const { return static_cast<int>(G.rows()); }
};

struct Certificate {
  double c_rho_est = 0.0;
  double c_rho_state_est = 0.0;
  double spectral_radius = 0.0;
  bool ok = false;
};

// Default certification horizon when no schedule is at hand.
inline constexpr int kDefaultCertHorizon = 200;

Certificate stability_certificate(const StableLinearSystem& sys, int horizon);

// Validates shapes, certifies over `horizon` and fills the derived fields.
StableLinearSystem make_system(Mat C, Mat D, Mat G, double rho_C,
                               int horizon = kDefaultCertHorizon);

// C = rho_C Q with Q Haar orthogonal; D, G Gaussian with unit-order norms.
StableLinearSystem random_stable_system(int d_p, int d, int d_y, double rho_C,
                                        std::uint64_t seed,
                                        int horizon = kDefaultCertHorizon);

struct Simulation {
  Mat states;   // d_p x T
  Mat outputs;  // d_y x T
};

// Inputs are d x T, column t-1 holding x_t; p_0 = 0.
Simulation simulate(const StableLinearSystem& sys, const Mat& inputs);

// Hex digest of the system matrices and rho_C.
std::string system_hash(const StableLinearSystem& sys);

enum class InputSpec { kIidGaussianUnit, kIidUniformSphere };

InputSpec parse_input_spec(const std::string& name);
std::string to_string(InputSpec spec);

struct SequenceDataset {
  std::vector<Mat> inputs;  // K entries, d x T
  std::vector<Mat> clean;   // K entries, d_y x T
  std::vector<Mat> observed;
  double noise_sigma = 0.0;
  int T = 0;
  int K = 0;
  std::uint64_t seed = 0;
  InputSpec input_spec = InputSpec::kIidGaussianUnit;
  StableLinearSystem system;
  std::string teacher_hash;

  int d() const { return inputs.empty() ? 0 : static_cast<int>(inputs[0].rows()); }
  int d_y() const { return clean.empty() ? 0 : static_cast<int>(clean[0].rows()); }
};

SequenceDataset generate_dataset(const StableLinearSystem& sys, InputSpec spec,
                                 double noise_sigma, int T, int K,
                                 std::uint64_t seed);

// Digest of the dataset contents (inputs and observations).
std::string dataset_hash(const SequenceDataset& ds);

// meta.json and data.csv under `dir`.
void save_dataset(const SequenceDataset& ds, const std::string& dir);
SequenceDataset load_dataset(const std::string& dir);

}  // namespace sysid

#endif  // SYSID_TEACHER_HPP_
