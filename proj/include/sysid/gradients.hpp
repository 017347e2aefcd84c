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

#ifndef SYSID_GRADIENTS_HPP_
#define SYSID_GRADIENTS_HPP_

#include <functional>
#include <string>
#include <vector>

#include "sysid/linalg.hpp"
#include "sysid/loss.hpp"

namespace sysid {

struct StudentRNN;

// Directional derivative of every f_t along (ZW, ZA), returned d_y x T.
// Tangent recurrence: hdot_t = rho ZW h_{t-1} + rho W hdot_{t-1} + ZA x_t.
Mat jvp_sequence(const Mat& W, const Mat& A, const Mat& B, double rho,
                 const Mat& X, const Mat& ZW, const Mat& ZA);

// grad_W f_t . Z for a single 1-based time index t.
Vec jvp_f_wrt_W(const Mat& W, const Mat& A, const Mat& B, double rho,
                const Mat& X, int t, const Mat& Z);

// grad_A f_t . Z for a single 1-based time index t.
Vec jvp_f_wrt_A(const Mat& W, const Mat& A, const Mat& B, double rho,
                const Mat& X, int t, const Mat& Z);

// (1/T) sum_t grad L(y_t, f_t) in the rescaled parameters (W, A).
struct GradientPair {
  Mat grad_W;
  Mat grad_A;
  double loss = 0.0;  // (1/T) sum_t L(y_t, f_t)
  int T = 0;
  std::string loss_kind;

  // Chain factor for the unscaled matrix W_tilde = rho W.
  Mat grad_W_tilde(double rho) const { return grad_W / rho; }
};

GradientPair loss_gradients_bptt(const Mat& W, const Mat& A, const Mat& B,
                                 double rho, const Mat& X, const Mat& Y,
                                 const Loss& loss);
GradientPair loss_gradients_bptt(const StudentRNN& rnn, const Mat& X,
                                 const Mat& Y, const Loss& loss);

// ||grad_W f_t||_F and ||grad_A f_t||_F, summed over the d_y outputs,
// for a single 1-based time index t.
struct OutputGradNorms {
  double W = 0.0;
  double A = 0.0;
};
OutputGradNorms output_gradient_norms(const Mat& W, const Mat& A, const Mat& B,
                                      double rho, const Mat& X, int t);

// (1/T) sum_t L(y_t, f_t(W, A)). Shares the forward path with the gradient.
double sequence_loss(const Mat& W, const Mat& A, const Mat& B, double rho,
                     const Mat& X, const Mat& Y, const Loss& loss);

struct FdPoint {
  double h = 0.0;
  double numeric = 0.0;
  double relerr = 0.0;
};

struct FdReport {
  double analytic = 0.0;
  std::vector<FdPoint> points;
  double min_relerr = 0.0;
  double best_h = 0.0;
  // Error grows again toward the smallest step, or the grid reaches below
  // 1e-12 where round-off dominates the difference quotient.
  bool cancellation = false;
};

// Central differences of phi(s) = f(theta + s Z) against `analytic`.
FdReport finite_difference_check(const std::function<double(double)>& phi,
                                 double analytic,
                                 const std::vector<double>& h_grid = {1e-3, 1e-4,
                                                                      1e-5});

// Finite-difference check of the sequence loss along (ZW, ZA).
FdReport finite_difference_check_rnn(const Mat& W, const Mat& A, const Mat& B,
                                     double rho, const Mat& X, const Mat& Y,
                                     const Loss& loss, const Mat& ZW,
                                     const Mat& ZA,
                                     const std::vector<double>& h_grid = {
                                         1e-3, 1e-4, 1e-5});

}  // namespace sysid

#endif  // SYSID_GRADIENTS_HPP_
