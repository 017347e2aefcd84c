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

#ifndef SYSID_STUDENT_HPP_
#define SYSID_STUDENT_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sysid/linalg.hpp"

namespace sysid {

// Variance law for the recurrent matrix at initialization.
//   kAlgorithm: W_tilde ~ N(0, rho/m), so W = W_tilde/rho ~ N(0, 1/(rho m)).
//   kRescaled:  W ~ N(0, 1/m), so W_tilde ~ N(0, rho^2/m).
enum class InitLaw { kAlgorithm, kRescaled };

InitLaw parse_init_law(const std::string& name);
std::string to_string(InitLaw law);

// h_t = W_tilde h_{t-1} + A x_t,  f_t = B h_t,  W_tilde = rho W.
//
// W (the rescaled matrix) is stored; W_tilde is derived from it, so
// rho * W == W_tilde holds exactly. B is never updated.
struct StudentRNN {
  Mat W;   // m x m
  Mat A;   // m x d
  Mat B;   // d_y x m
  Mat W0;  // anchors
  Mat A0;
  double rho = 0.0;
  std::uint64_t seed = 0;
  InitLaw law = InitLaw::kAlgorithm;

  int m() const { return static_cast<int>(W.rows()); }
  int d() const { return static_cast<int>(A.cols()); }
  int d_y() const { return static_cast<int>(B.rows()); }

  Mat W_tilde() const { return rho * W; }

  double dW_frob() const { return dW_frob_; }
  double dA_frob() const { return dA_frob_; }
  // Recompute ||W - W0||_F and ||A - A0||_F after a parameter change.
  void refresh_radii();

 private:
  double dW_frob_ = 0.0;
  double dA_frob_ = 0.0;
};

StudentRNN init_student(int m, int d, int d_y, double rho, std::uint64_t seed,
                        InitLaw law = InitLaw::kAlgorithm);

struct ForwardResult {
  Mat hidden;   // m x T
  Mat outputs;  // d_y x T
};

// Literal recurrence in W_tilde. Inputs are d x T.
ForwardResult forward(const StudentRNN& rnn, const Mat& X);

// f_t(W, A) = sum_j rho^j B W^j A x_{t-j}, run as h_t = rho W h_{t-1} + A x_t.
// When `hidden` is non-null it receives the m x T states.
Mat forward_rescaled(const Mat& W, const Mat& A, const Mat& B, double rho,
                     const Mat& X, Mat* hidden = nullptr);

// M_j = rho^j B W^j A for j = 0..J (0^0 = 1).
std::vector<Mat> markov_parameters(const Mat& W, const Mat& A, const Mat& B,
                                   double rho, int J);

// Tangent of the Markov parameters at (W, A) along (ZW, ZA), j = 0..J.
std::vector<Mat> markov_tangents(const Mat& W, const Mat& A, const Mat& B,
                                 double rho, const Mat& ZW, const Mat& ZA,
                                 int J);

// f_t = sum_{j <= min(tau, t-1)} M_j x_{t-j} for t = 1..T.
Mat convolve(const std::vector<Mat>& markov, const Mat& X, int tau);

// f_t^tau: series cut after lag tau.
Mat truncated_forward(const Mat& W, const Mat& A, const Mat& B, double rho,
                      const Mat& X, int tau);

// f^lin (tau empty) or f^{lin,tau}, expanded around (W0, A0).
Mat linearized_forward(const Mat& W0, const Mat& A0, const Mat& W,
                       const Mat& A, const Mat& B, double rho, const Mat& X,
                       std::optional<int> tau = std::nullopt);

// Same quantity assembled from (tangent) Markov parameters up to lag J.
Mat linearized_forward_markov(const Mat& W0, const Mat& A0, const Mat& W,
                              const Mat& A, const Mat& B, double rho,
                              const Mat& X, int tau);

// Checkpoint: checkpoint.json plus a little-endian f64 blob file.
struct CheckpointMeta {
  long step = 0;
  std::string config_hash;
};

void save_checkpoint(const StudentRNN& rnn, const CheckpointMeta& meta,
                     const std::string& dir, const std::string& stem);
StudentRNN load_checkpoint(const std::string& dir, const std::string& stem,
                           CheckpointMeta* meta = nullptr);

}  // namespace sysid

#endif  // SYSID_STUDENT_HPP_
