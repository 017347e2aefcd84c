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

#ifndef SYSID_EXISTENCE_HPP_
#define SYSID_EXISTENCE_HPP_

#include <string>
#include <vector>

#include "sysid/io.hpp"
#include "sysid/linalg.hpp"
#include "sysid/loss.hpp"
#include "sysid/student.hpp"
#include "sysid/teacher.hpp"

namespace sysid {

// P1[a] = (B W0^a (W0^a)^T B^T)^{-1}, P2[b] = (A0^T (W0^b)^T W0^b A0)^{-1}
// for a, b = 0..J-1.
struct GramInverses {
  std::vector<Mat> P1;  // d_y x d_y
  std::vector<Mat> P2;  // d x d
  int horizon = 0;      // J
  double max_residual = 0.0;   // max ||P Gram - I||_F
  double max_condition = 0.0;  // largest Gram condition number seen
  std::vector<Mat> left;   // (B W0^a)^T, m x d_y
  std::vector<Mat> right;  // W0^b A0, m x d
};

inline constexpr double kMaxGramCondition = 1e8;
inline constexpr double kMaxGramResidual = 1e-8;

GramInverses gram_inverses(const Mat& W0, const Mat& A0, const Mat& B, int J);

struct ComparatorParams {
  Mat W_star;
  Mat A_star;
  double dist_W = 0.0;  // ||W* - W0||_F
  double dist_A = 0.0;  // ||A* - A0||_F
  // max over lags j < T_max of ||rho^j B W*^j A* - G C^j D||_2.
  double fit_error = 0.0;
  double distance_bound = 0.0;  // 2 c_rho b T_max^2 / sqrt(m)
  int T_max = 0;
  double rho = 0.0;
  double b = 0.0;
  // Singular values of W* - W0 from its factored form.
  std::vector<double> update_singular_values;
  int update_rank = 0;  // count above 1e-10 of the top value
  double gram_max_residual = 0.0;
  double gram_max_condition = 0.0;
  double max_opnorm_P1 = 0.0;
  double max_opnorm_P2 = 0.0;
};

// W* - W0 = sum_{j=1}^{T_max-1} sum_{a+b=j-1} (B W0^a)^T P1[a] c_j P2[b]
// (W0^b A0)^T with c_j = (rho^{-j} G C^j D - B W0^j A0)/j, and
// A* - A0 = B^T (B B^T)^{-1} (G D - B A0).
ComparatorParams construct_comparator(const Mat& W0, const Mat& A0,
                                      const Mat& B,
                                      const StableLinearSystem& teacher,
                                      double rho, int T_max, double b);

int numerical_rank(const std::vector<double>& singular_values,
                   double rel_tol = 1e-10);

struct ExistenceReport {
  double max_output_mismatch = 0.0;  // max_{k,t} ||f_t(W*, A*) - y_clean||
  double loss_gap = 0.0;  // (1/K)(1/T) sum [L(y, f*) - L(y, y_clean)]
  double comparator_loss = 0.0;
  double teacher_loss = 0.0;
  double lipschitz_bound = 0.0;  // l0 (1 + 2b) max_output_mismatch
  double error_bound = 0.0;  // b d^2 c_rho T^3 log m/sqrt m + c_rho rho^T/(1-rho)
  double fit_error = 0.0;
  double dist_W = 0.0;
  double dist_A = 0.0;
  double distance_bound = 0.0;
  bool distances_ok = false;
};

ExistenceReport verify_existence(const ComparatorParams& comp, const Mat& B,
                                 const StableLinearSystem& teacher,
                                 const SequenceDataset& data, const Loss& loss);

Json to_json(const ComparatorParams& comp);
Json to_json(const ExistenceReport& rep);

// Checkpoint files for (W*, A*) (stem "checkpoint") plus comparator.json in `dir`.
void save_comparator(const ComparatorParams& comp, const StudentRNN& init,
                     const std::string& dir);

}  // namespace sysid

#endif  // SYSID_EXISTENCE_HPP_
