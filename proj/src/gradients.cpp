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

#include "sysid/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sysid/error.hpp"
#include "sysid/student.hpp"

namespace sysid {
namespace {

void check(const Mat& W, const Mat& A, const Mat& B, const Mat& X) {
  if (W.rows() != W.cols()) throw DimensionError("W must be square");
  if (A.rows() != W.rows()) throw DimensionError("A rows must equal m");
  if (B.cols() != W.rows()) throw DimensionError("B cols must equal m");
  if (X.rows() != A.cols()) throw DimensionError("input dimension mismatch");
}

void check_time(const Mat& X, int t) {
  if (t < 1 || t > X.cols()) throw DimensionError("time index out of range");
}

}  // namespace

Mat jvp_sequence(const Mat& W, const Mat& A, const Mat& B, double rho,
                 const Mat& X, const Mat& ZW, const Mat& ZA) {
  check(W, A, B, X);
  if (ZW.rows() != W.rows() || ZW.cols() != W.cols() ||
      ZA.rows() != A.rows() || ZA.cols() != A.cols()) {
    throw DimensionError("jvp: direction shape mismatch");
  }
  const Eigen::Index m = W.rows();
  const Mat AX = A * X;
  const Mat ZX = ZA * X;
  Mat Hdot(m, X.cols());
  Vec h = Vec::Zero(m), hd = Vec::Zero(m), hn(m), hdn(m);
  for (Eigen::Index t = 0; t < X.cols(); ++t) {
    hdn.noalias() = ZW * h;
    hdn.noalias() += W * hd;
    hdn *= rho;
    hdn += ZX.col(t);
    hn.noalias() = W * h;
    hn *= rho;
    hn += AX.col(t);
    h.swap(hn);
    hd.swap(hdn);
    Hdot.col(t) = hd;
  }
  return B * Hdot;
}

Vec jvp_f_wrt_W(const Mat& W, const Mat& A, const Mat& B, double rho,
                const Mat& X, int t, const Mat& Z) {
  check_time(X, t);
  const Mat Xt = X.leftCols(t);
  return jvp_sequence(W, A, B, rho, Xt, Z, Mat::Zero(A.rows(), A.cols()))
      .col(t - 1);
}

Vec jvp_f_wrt_A(const Mat& W, const Mat& A, const Mat& B, double rho,
                const Mat& X, int t, const Mat& Z) {
  check_time(X, t);
  const Mat Xt = X.leftCols(t);
  return jvp_sequence(W, A, B, rho, Xt, Mat::Zero(W.rows(), W.cols()), Z)
      .col(t - 1);
}

GradientPair loss_gradients_bptt(const Mat& W, const Mat& A, const Mat& B,
                                 double rho, const Mat& X, const Mat& Y,
                                 const Loss& loss) {
  check(W, A, B, X);
  if (Y.rows() != B.rows() || Y.cols() != X.cols()) {
    throw DimensionError("bptt: target shape mismatch");
  }
  const Eigen::Index T = X.cols();
  if (T < 1) throw ParameterError("bptt: empty sequence");
  const double inv_T = 1.0 / static_cast<double>(T);
  Mat H;
  const Mat F = forward_rescaled(W, A, B, rho, X, &H);
  Mat G(B.rows(), T);
  double total = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) {
    auto [v, g] = eval_loss(loss, Y.col(t), F.col(t));
    total += v;
    G.col(t) = g * inv_T;
  }
  const Mat BtG = B.transpose() * G;
  Mat Lam(W.rows(), T);
  Vec lam = BtG.col(T - 1), tmp(W.rows());
  Lam.col(T - 1) = lam;
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    tmp.noalias() = W.transpose() * lam;
    tmp *= rho;
    tmp += BtG.col(t);
    lam.swap(tmp);
    Lam.col(t) = lam;
  }
  GradientPair gp;
  gp.T = static_cast<int>(T);
  gp.loss = total * inv_T;
  gp.loss_kind = loss.name();
  gp.grad_W = Mat::Zero(W.rows(), W.cols());
  if (T > 1) {
    gp.grad_W.noalias() = Lam.rightCols(T - 1) * H.leftCols(T - 1).transpose();
    gp.grad_W *= rho;
  }
  gp.grad_A.noalias() = Lam * X.transpose();
  return gp;
}

GradientPair loss_gradients_bptt(const StudentRNN& rnn, const Mat& X,
                                 const Mat& Y, const Loss& loss) {
  return loss_gradients_bptt(rnn.W, rnn.A, rnn.B, rnn.rho, X, Y, loss);
}

OutputGradNorms output_gradient_norms(const Mat& W, const Mat& A, const Mat& B,
                                      double rho, const Mat& X, int t) {
  check(W, A, B, X);
  check_time(X, t);
  Mat H;
  forward_rescaled(W, A, B, rho, X.leftCols(t), &H);
  double sw = 0.0, sa = 0.0;
  Mat Lam(W.rows(), t);
  Vec lam(W.rows()), tmp(W.rows());
  for (Eigen::Index i = 0; i < B.rows(); ++i) {
    lam = B.row(i).transpose();
    Lam.col(t - 1) = lam;
    for (int s = t - 2; s >= 0; --s) {
      tmp.noalias() = W.transpose() * lam;
      tmp *= rho;
      lam.swap(tmp);
      Lam.col(s) = lam;
    }
    if (t > 1) {
      const Mat gW = rho * (Lam.rightCols(t - 1) * H.leftCols(t - 1).transpose());
      sw += gW.squaredNorm();
    }
    sa += (Lam * X.leftCols(t).transpose()).squaredNorm();
  }
  return {std::sqrt(sw), std::sqrt(sa)};
}

double sequence_loss(const Mat& W, const Mat& A, const Mat& B, double rho,
                     const Mat& X, const Mat& Y, const Loss& loss) {
  const Mat F = forward_rescaled(W, A, B, rho, X);
  if (Y.rows() != F.rows() || Y.cols() != F.cols()) {
    throw DimensionError("sequence_loss: target shape mismatch");
  }
  double total = 0.0;
  for (Eigen::Index t = 0; t < F.cols(); ++t) {
    total += loss_value(loss, Y.col(t), F.col(t));
  }
  return total * (1.0 / static_cast<double>(F.cols()));
}

FdReport finite_difference_check(const std::function<double(double)>& phi,
                                 double analytic,
                                 const std::vector<double>& h_grid) {
  if (h_grid.empty()) throw ParameterError("finite differences: empty grid");
  FdReport rep;
  rep.analytic = analytic;
  rep.min_relerr = std::numeric_limits<double>::infinity();
  for (double h : h_grid) {
    if (!(h > 0.0)) throw ParameterError("finite differences: h must be > 0");
    const double fp = phi(h), fm = phi(-h);
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw EvaluationError("finite differences: non-finite function value");
    }
    FdPoint pt;
    pt.h = h;
    pt.numeric = (fp - fm) / (2.0 * h);
    const double scale = std::max({std::abs(analytic), std::abs(pt.numeric),
                                   std::numeric_limits<double>::min()});
    pt.relerr = std::abs(pt.numeric - analytic) / scale;
    if (pt.relerr < rep.min_relerr) {
      rep.min_relerr = pt.relerr;
      rep.best_h = h;
    }
    rep.points.push_back(pt);
  }
  const double h_min = *std::min_element(h_grid.begin(), h_grid.end());
  double err_at_min = 0.0;
  for (const FdPoint& p : rep.points) {
    if (p.h == h_min) err_at_min = p.relerr;
  }
  rep.cancellation = h_min < 1e-12 ||
                     (err_at_min > 10.0 * rep.min_relerr && err_at_min > 1e-12);
  return rep;
}

FdReport finite_difference_check_rnn(const Mat& W, const Mat& A, const Mat& B,
                                     double rho, const Mat& X, const Mat& Y,
                                     const Loss& loss, const Mat& ZW,
                                     const Mat& ZA,
                                     const std::vector<double>& h_grid) {
  const GradientPair gp = loss_gradients_bptt(W, A, B, rho, X, Y, loss);
  const double analytic =
      (gp.grad_W.array() * ZW.array()).sum() + (gp.grad_A.array() * ZA.array()).sum();
  auto phi = [&](double s) {
    return sequence_loss(W + s * ZW, A + s * ZA, B, rho, X, Y, loss);
  };
  return finite_difference_check(phi, analytic, h_grid);
}

}  // namespace sysid
