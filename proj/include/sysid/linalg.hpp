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

#ifndef SYSID_LINALG_HPP_
#define SYSID_LINALG_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace sysid {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using MatF = Eigen::MatrixXf;
using VecF = Eigen::VectorXf;

// Power iteration on M^T M (or M M^T, whichever is smaller).
struct PowerIterationOptions {
  int max_iterations = 200;
  double tolerance = 1e-10;
  // Fall back to a dense SVD when the iteration stalls (small matrices only).
  bool svd_fallback = true;
};

struct OpnormResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  bool used_fallback = false;
};

OpnormResult opnorm_power(const Mat& M, const PowerIterationOptions& opts = {});

// Spectral norm by power iteration with the default options.
double opnorm(const Mat& M);

// Spectral norm from a dense singular value decomposition.
double opnorm_svd(const Mat& M);

// max |lambda| over the eigenvalues of a square matrix.
double spectral_radius(const Mat& M);

// Matrix-free largest singular value of a linear map R^n -> R^p given by
// apply (x -> Mx) and apply_t (y -> M^T y). Golub-Kahan bidiagonalization
// with full reorthogonalization.
struct LanczosOptions {
  int max_iterations = 60;
  double tolerance = 1e-9;  // relative change of the top Ritz value
  std::uint64_t seed = 0x5eed;
};

struct LanczosResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

using LinearMap = std::function<void(const Vec& in, Vec& out)>;

LanczosResult top_singular_value(const LinearMap& apply,
                                 const LinearMap& apply_t, Eigen::Index n,
                                 Eigen::Index p, const LanczosOptions& opts = {});

// ||W^k||_2 without forming W^k. k = 0 gives 1.
LanczosResult opnorm_of_power(const Mat& W, int k,
                              const LanczosOptions& opts = {});

// Same with W held in single precision; Lanczos vectors stay in double.
// Each product carries a relative error near 1e-7 per factor of W.
LanczosResult opnorm_of_power(const MatF& W, int k,
                              const LanczosOptions& opts = {});

// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

// Least-squares slope of log(y) against log(x).
double fit_loglog_slope(const std::vector<double>& x,
                        const std::vector<double>& y);

// Empirical quantile with linear interpolation; q in [0, 1].
double quantile(std::vector<double> v, double q);

}  // namespace sysid

#endif  // SYSID_LINALG_HPP_
