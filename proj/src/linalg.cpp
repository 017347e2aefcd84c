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

#include "sysid/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sysid/error.hpp"

namespace sysid {
namespace {

Vec start_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(gen);
  return v / v.norm();
}

// Two passes of classical Gram-Schmidt against the first `count` columns.
void reorthogonalize(const Mat& basis, Eigen::Index count, Vec& x) {
  if (count == 0) return;
  for (int pass = 0; pass < 2; ++pass) {
    Vec c = basis.leftCols(count).transpose() * x;
    x.noalias() -= basis.leftCols(count) * c;
  }
}

}  // namespace

OpnormResult opnorm_power(const Mat& M, const PowerIterationOptions& opts) {
  OpnormResult res;
  if (M.size() == 0) {
    res.converged = true;
    return res;
  }
  if (!M.allFinite()) throw EvaluationError("opnorm: non-finite entries");
  const bool tall = M.cols() <= M.rows();
  const Eigen::Index n = tall ? M.cols() : M.rows();
  Vec v = start_vector(n, 0x9e3779b97f4a7c15ULL);
  Vec w;
  double sigma = 0.0;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    if (tall) {
      w.noalias() = M * v;
    } else {
      w.noalias() = M.transpose() * v;
    }
    double s = w.norm();
    res.iterations = it;
    if (s == 0.0) {
      // v is in the null space; restart from a basis vector direction.
      if (it == 1) {
        v = Vec::Ones(n) / std::sqrt(static_cast<double>(n));
        continue;
      }
      sigma = 0.0;
      res.converged = true;
      break;
    }
    if (tall) {
      v.noalias() = M.transpose() * w;
    } else {
      v.noalias() = M * w;
    }
    const double vn = v.norm();
    if (vn == 0.0) {
      sigma = s;
      res.converged = true;
      break;
    }
    v /= vn;
    if (it > 1 && std::abs(s - sigma) <= opts.tolerance * s) {
      sigma = s;
      res.converged = true;
      break;
    }
    sigma = s;
  }
  res.value = sigma;
  if (!res.converged && opts.svd_fallback && M.rows() * M.cols() <= 4'000'000) {
    res.value = opnorm_svd(M);
    res.used_fallback = true;
  }
  return res;
}

double opnorm(const Mat& M) { return opnorm_power(M).value; }

double opnorm_svd(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::BDCSVD<Mat> svd(M);
  return svd.singularValues()(0);
}

double spectral_radius(const Mat& M) {
  if (M.rows() != M.cols()) {
    throw DimensionError("spectral_radius: matrix is not square");
  }
  if (M.size() == 0) return 0.0;
  if (!M.allFinite()) throw EvaluationError("spectral_radius: non-finite");
  Eigen::EigenSolver<Mat> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw EvaluationError("spectral_radius: eigensolver failed");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

LanczosResult top_singular_value(const LinearMap& apply,
                                 const LinearMap& apply_t, Eigen::Index n,
                                 Eigen::Index p, const LanczosOptions& opts) {
  LanczosResult res;
  if (n == 0 || p == 0) {
    res.converged = true;
    return res;
  }
  const int kmax = static_cast<int>(
      std::min<Eigen::Index>(opts.max_iterations, std::min(n, p)));
  Mat V(n, kmax + 1), U(p, kmax);
  std::vector<double> alpha, beta;
  V.col(0) = start_vector(n, opts.seed);
  Vec u(p), w(n);
  double prev = 0.0;
  for (int j = 0; j < kmax; ++j) {
    apply(V.col(j), u);
    if (j > 0) u -= beta[j - 1] * U.col(j - 1);
    reorthogonalize(U, j, u);
    const double a = u.norm();
    res.iterations = j + 1;
    if (a == 0.0) {
      res.converged = true;
      break;
    }
    alpha.push_back(a);
    U.col(j) = u / a;
    apply_t(U.col(j), w);
    w -= a * V.col(j);
    reorthogonalize(V, j + 1, w);
    const double bj = w.norm();
    beta.push_back(bj);
    // Upper bidiagonal (j+1) x (j+2) projection U^T M V.
    Mat Bk = Mat::Zero(j + 1, j + 2);
    for (int i = 0; i <= j; ++i) {
      Bk(i, i) = alpha[i];
      Bk(i, i + 1) = beta[i];
    }
    Eigen::JacobiSVD<Mat> svd(Bk);
    const double s = svd.singularValues()(0);
    res.value = s;
    if (bj <= 1e-14 * s) {
      res.converged = true;
      break;
    }
    V.col(j + 1) = w / bj;
    if (j > 0 && std::abs(s - prev) <= opts.tolerance * s) {
      res.converged = true;
      break;
    }
    prev = s;
  }
  if (kmax == std::min(n, p)) res.converged = true;
  return res;
}

LanczosResult opnorm_of_power(const Mat& W, int k, const LanczosOptions& opts) {
  if (W.rows() != W.cols()) throw DimensionError("opnorm_of_power: not square");
  if (k < 0) throw ParameterError("opnorm_of_power: negative power");
  if (k == 0) return LanczosResult{1.0, 0, true};
  Vec tmp(W.rows());
  auto apply = [&](const Vec& in, Vec& out) {
    out = in;
    for (int i = 0; i < k; ++i) {
      tmp.noalias() = W * out;
      out.swap(tmp);
    }
  };
  auto apply_t = [&](const Vec& in, Vec& out) {
    out = in;
    for (int i = 0; i < k; ++i) {
      tmp.noalias() = W.transpose() * out;
      out.swap(tmp);
    }
  };
  return top_singular_value(apply, apply_t, W.cols(), W.rows(), opts);
}

LanczosResult opnorm_of_power(const MatF& W, int k, const LanczosOptions& opts) {
  if (W.rows() != W.cols()) throw DimensionError("opnorm_of_power: not square");
  if (k < 0) throw ParameterError("opnorm_of_power: negative power");
  if (k == 0) return LanczosResult{1.0, 0, true};
  VecF a(W.rows()), b(W.rows());
  auto apply = [&](const Vec& in, Vec& out) {
    a = in.cast<float>();
    for (int i = 0; i < k; ++i) {
      b.noalias() = W * a;
      a.swap(b);
    }
    out = a.cast<double>();
  };
  auto apply_t = [&](const Vec& in, Vec& out) {
    a = in.cast<float>();
    for (int i = 0; i < k; ++i) {
      b.noalias() = W.transpose() * a;
      a.swap(b);
    }
    out = a.cast<double>();
  };
  return top_singular_value(apply, apply_t, W.cols(), W.rows(), opts);
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionError("fit_slope: size mismatch");
  if (x.size() < 2) throw ParameterError("fit_slope: need two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw ParameterError("fit_slope: degenerate abscissae");
  return sxy / sxx;
}

double fit_loglog_slope(const std::vector<double>& x,
                        const std::vector<double>& y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) lx[i] = std::log(x[i]);
  for (std::size_t i = 0; i < y.size(); ++i) ly[i] = std::log(y[i]);
  return fit_slope(lx, ly);
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace sysid
