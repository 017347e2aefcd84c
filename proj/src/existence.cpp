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

#include "sysid/existence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "sysid/error.hpp"
#include "sysid/gradients.hpp"

namespace sysid {
namespace {

// Inverse of a symmetric positive-definite Gram matrix by Cholesky solves.
Mat spd_inverse(const Mat& Gm, double* condition, double* residual) {
  Eigen::SelfAdjointEigenSolver<Mat> es(Gm, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  *condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(*condition <= kMaxGramCondition)) {
    throw ConditioningError("Gram matrix condition number " +
                            format_double(*condition) + " exceeds 1e8");
  }
  Eigen::LLT<Mat> llt(Gm);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("Gram matrix is not positive definite");
  }
  const Mat P = llt.solve(Mat::Identity(Gm.rows(), Gm.cols()));
  *residual = (P * Gm - Mat::Identity(Gm.rows(), Gm.cols())).norm();
  return P;
}

}  // namespace

GramInverses gram_inverses(const Mat& W0, const Mat& A0, const Mat& B, int J) {
  if (J < 1) throw ParameterError("gram_inverses: horizon must be >= 1");
  if (W0.rows() != W0.cols() || A0.rows() != W0.rows() || B.cols() != W0.rows()) {
    throw DimensionError("gram_inverses: shapes of W0, A0, B disagree");
  }
  GramInverses g;
  g.horizon = J;
  Mat left = B.transpose();
  Mat right = A0;
  for (int a = 0; a < J; ++a) {
    double cond = 0.0, res = 0.0;
    g.P1.push_back(spd_inverse(left.transpose() * left, &cond, &res));
    g.max_condition = std::max(g.max_condition, cond);
    g.max_residual = std::max(g.max_residual, res);
    g.P2.push_back(spd_inverse(right.transpose() * right, &cond, &res));
    g.max_condition = std::max(g.max_condition, cond);
    g.max_residual = std::max(g.max_residual, res);
    g.left.push_back(left);
    g.right.push_back(right);
    if (a + 1 < J) {
      left = W0.transpose() * left;
      right = W0 * right;
    }
  }
  if (g.max_residual > kMaxGramResidual) {
    throw ConditioningError("Gram inverse residual " + format_double(g.max_residual) +
                            " exceeds 1e-8");
  }
  return g;
}

int numerical_rank(const std::vector<double>& sv, double rel_tol) {
  if (sv.empty() || sv.front() <= 0.0) return 0;
  int r = 0;
  for (double s : sv) {
    if (s > rel_tol * sv.front()) ++r;
  }
  return r;
}

ComparatorParams construct_comparator(const Mat& W0, const Mat& A0, const Mat& B,
                                      const StableLinearSystem& teacher, double rho,
                                      int T_max, double b) {
  if (T_max < 1) throw ParameterError("construct_comparator: T_max must be >= 1");
  if (!(rho > 0.0)) throw ParameterError("construct_comparator: rho must be positive");
  const int m = static_cast<int>(W0.rows());
  const int d = static_cast<int>(A0.cols());
  const int dy = static_cast<int>(B.rows());
  if (teacher.d() != d || teacher.d_y() != dy) {
    throw DimensionError("construct_comparator: teacher and student dimensions differ");
  }
  const int J = std::max(T_max - 1, 0);

  ComparatorParams c;
  c.T_max = T_max;
  c.rho = rho;
  c.b = b;
  c.distance_bound = 2.0 * teacher.c_rho * b * T_max * T_max / std::sqrt(double(m));

  // A* carries the lag-0 correction.
  const Mat BBt = B * B.transpose();
  double cond = 0.0, res = 0.0;
  const Mat P1_0 = spd_inverse(BBt, &cond, &res);
  c.A_star = A0 + B.transpose() * (P1_0 * (teacher.G * teacher.D - B * A0));
  c.W_star = W0;

  if (J >= 1) {
    const GramInverses g = gram_inverses(W0, A0, B, J);
    c.gram_max_residual = g.max_residual;
    c.gram_max_condition = g.max_condition;
    for (int a = 0; a < J; ++a) {
      c.max_opnorm_P1 = std::max(c.max_opnorm_P1, opnorm_svd(g.P1[static_cast<std::size_t>(a)]));
      c.max_opnorm_P2 = std::max(c.max_opnorm_P2, opnorm_svd(g.P2[static_cast<std::size_t>(a)]));
    }
    // c_j for j = 1..J. rho^{-j} G C^j D through powers of C/rho.
    std::vector<Mat> cj(static_cast<std::size_t>(J) + 1);
    Mat E = teacher.D;
    const Mat Cr = teacher.C / rho;
    const Mat WA = W0 * A0;
    for (int j = 1; j <= J; ++j) {
      E = Cr * E;
      // B W0^j A0 = (B W0^(j-1)) (W0 A0).
      const Mat BWA = g.left[static_cast<std::size_t>(j - 1)].transpose() * WA;
      cj[static_cast<std::size_t>(j)] = (teacher.G * E - BWA) / static_cast<double>(j);
    }
    // W* - W0 = Left Mid Right^T.
    Mat Left(m, J * dy), Right(m, J * d), Mid = Mat::Zero(J * dy, J * d);
    for (int a = 0; a < J; ++a) {
      Left.middleCols(a * dy, dy) = g.left[static_cast<std::size_t>(a)];
      Right.middleCols(a * d, d) = g.right[static_cast<std::size_t>(a)];
    }
    for (int a = 0; a < J; ++a) {
      for (int bb = 0; a + bb + 1 <= J; ++bb) {
        Mid.block(a * dy, bb * d, dy, d) = g.P1[static_cast<std::size_t>(a)] *
                                           cj[static_cast<std::size_t>(a + bb + 1)] *
                                           g.P2[static_cast<std::size_t>(bb)];
      }
    }
    c.W_star.noalias() += Left * (Mid * Right.transpose());

    // Singular values of Left Mid Right^T from thin QR factors.
    Eigen::HouseholderQR<Mat> ql(Left), qr(Right);
    const Mat Rl = ql.matrixQR().topRows(std::min<Eigen::Index>(m, J * dy))
                       .template triangularView<Eigen::Upper>();
    const Mat Rr = qr.matrixQR().topRows(std::min<Eigen::Index>(m, J * d))
                       .template triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Mat> svd(Rl * Mid * Rr.transpose());
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
      c.update_singular_values.push_back(svd.singularValues()(i));
    }
    c.update_rank = numerical_rank(c.update_singular_values);
  }
  c.dist_W = (c.W_star - W0).norm();
  c.dist_A = (c.A_star - A0).norm();

  // Dataset-free fit: impulse responses on lags 0..T_max-1.
  const std::vector<Mat> M = markov_parameters(c.W_star, c.A_star, B, rho, T_max - 1);
  Mat E = teacher.D;
  for (int j = 0; j < T_max; ++j) {
    if (j > 0) E = teacher.C * E;
    c.fit_error = std::max(c.fit_error, opnorm_svd(M[static_cast<std::size_t>(j)] - teacher.G * E));
  }
  return c;
}

ExistenceReport verify_existence(const ComparatorParams& comp, const Mat& B,
                                 const StableLinearSystem& teacher,
                                 const SequenceDataset& data, const Loss& loss) {
  if (data.K < 1) throw ParameterError("verify_existence: empty dataset");
  if (B.cols() != comp.W_star.rows()) {
    throw DimensionError("verify_existence: B does not match the comparator");
  }
  ExistenceReport r;
  const double m = static_cast<double>(comp.W_star.rows());
  double comp_sum = 0.0, teach_sum = 0.0;
  for (int k = 0; k < data.K; ++k) {
    const Mat& X = data.inputs[static_cast<std::size_t>(k)];
    const Mat& Y = data.observed[static_cast<std::size_t>(k)];
    const Mat& Yc = data.clean[static_cast<std::size_t>(k)];
    const Mat F = forward_rescaled(comp.W_star, comp.A_star, B, comp.rho, X);
    r.max_output_mismatch =
        std::max(r.max_output_mismatch, (F - Yc).colwise().norm().maxCoeff());
    for (int t = 0; t < data.T; ++t) {
      comp_sum += loss_value(loss, Y.col(t), F.col(t));
      teach_sum += loss_value(loss, Y.col(t), Yc.col(t));
    }
  }
  const double n = static_cast<double>(data.K) * data.T;
  r.comparator_loss = comp_sum / n;
  r.teacher_loss = teach_sum / n;
  r.loss_gap = r.comparator_loss - r.teacher_loss;
  r.lipschitz_bound = loss.l0(data.d_y()) * (1.0 + 2.0 * comp.b) * r.max_output_mismatch;
  const double d = data.d();
  r.error_bound = comp.b * d * d * teacher.c_rho * std::pow(comp.T_max, 3) *
                      std::log(m) / std::sqrt(m) +
                  teacher.c_rho * std::pow(comp.rho, comp.T_max) / (1.0 - comp.rho);
  r.fit_error = comp.fit_error;
  r.dist_W = comp.dist_W;
  r.dist_A = comp.dist_A;
  r.distance_bound = comp.distance_bound;
  r.distances_ok = comp.dist_W <= comp.distance_bound && comp.dist_A <= comp.distance_bound;
  return r;
}

Json to_json(const ComparatorParams& c) {
  return {{"dist_W", c.dist_W},
          {"dist_A", c.dist_A},
          {"distance_bound", c.distance_bound},
          {"fit_error", c.fit_error},
          {"T_max", c.T_max},
          {"rho", c.rho},
          {"b", c.b},
          {"update_rank", c.update_rank},
          {"update_singular_values", c.update_singular_values},
          {"gram_max_residual", c.gram_max_residual},
          {"gram_max_condition", c.gram_max_condition},
          {"max_opnorm_P1", c.max_opnorm_P1},
          {"max_opnorm_P2", c.max_opnorm_P2}};
}

Json to_json(const ExistenceReport& r) {
  return {{"max_output_mismatch", r.max_output_mismatch},
          {"loss_gap", r.loss_gap},
          {"comparator_loss", r.comparator_loss},
          {"teacher_loss", r.teacher_loss},
          {"lipschitz_bound", r.lipschitz_bound},
          {"error_bound", r.error_bound},
          {"fit_error", r.fit_error},
          {"dist_W", r.dist_W},
          {"dist_A", r.dist_A},
          {"distance_bound", r.distance_bound},
          {"distances_ok", r.distances_ok}};
}

void save_comparator(const ComparatorParams& comp, const StudentRNN& init,
                     const std::string& dir) {
  ensure_dir(dir);
  StudentRNN s = init;
  s.W = comp.W_star;
  s.A = comp.A_star;
  s.refresh_radii();
  save_checkpoint(s, CheckpointMeta{}, dir, "checkpoint");
  Json j = to_json(comp);
  j["version"] = kVersion;
  write_file(dir + "/comparator.json", j.dump(2) + "\n");
}

}  // namespace sysid
