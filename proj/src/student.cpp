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

#include "sysid/student.hpp"

#include <bit>
#include <cmath>
#include <fstream>

#include "sysid/error.hpp"
#include "sysid/gradients.hpp"
#include "sysid/io.hpp"
#include "sysid/random.hpp"

namespace sysid {
namespace {

void check_params(const Mat& W, const Mat& A, const Mat& B, const Mat& X) {
  if (W.rows() != W.cols()) throw DimensionError("W must be square");
  if (A.rows() != W.rows()) throw DimensionError("A rows must equal m");
  if (B.cols() != W.rows()) throw DimensionError("B cols must equal m");
  if (X.rows() != A.cols()) throw DimensionError("input dimension mismatch");
}

}  // namespace

InitLaw parse_init_law(const std::string& name) {
  if (name == "algorithm") return InitLaw::kAlgorithm;
  if (name == "rescaled") return InitLaw::kRescaled;
  throw ParameterError("unknown init law '" + name + "'");
}

std::string to_string(InitLaw law) {
  return law == InitLaw::kAlgorithm ? "algorithm" : "rescaled";
}

void StudentRNN::refresh_radii() {
  dW_frob_ = (W - W0).norm();
  dA_frob_ = (A - A0).norm();
}

StudentRNN init_student(int m, int d, int d_y, double rho, std::uint64_t seed,
                        InitLaw law) {
  if (!(rho > 0.0 && rho < 1.0)) throw ParameterError("rho must lie in (0, 1)");
  if (m < 1 || d < 1 || d_y < 1) throw DimensionError("dimensions must be >= 1");
  const double md = static_cast<double>(m);
  const double sd_w = law == InitLaw::kAlgorithm ? std::sqrt(rho / md) / rho
                                                 : std::sqrt(1.0 / md);
  Rng rng(seed);
  StudentRNN rnn;
  rnn.W = rng.gaussian(m, m, sd_w);
  rnn.A = rng.gaussian(m, d, std::sqrt(1.0 / md));
  rnn.B = rng.gaussian(d_y, m, std::sqrt(1.0 / d_y));
  rnn.W0 = rnn.W;
  rnn.A0 = rnn.A;
  rnn.rho = rho;
  rnn.seed = seed;
  rnn.law = law;
  rnn.refresh_radii();
  return rnn;
}

ForwardResult forward(const StudentRNN& rnn, const Mat& X) {
  check_params(rnn.W, rnn.A, rnn.B, X);
  const Mat Wt = rnn.W_tilde();
  const Mat AX = rnn.A * X;
  ForwardResult res;
  res.hidden.resize(rnn.m(), X.cols());
  Vec h = Vec::Zero(rnn.m()), hn(rnn.m());
  for (Eigen::Index t = 0; t < X.cols(); ++t) {
    hn.noalias() = Wt * h;
    hn += AX.col(t);
    h.swap(hn);
    res.hidden.col(t) = h;
  }
  res.outputs = rnn.B * res.hidden;
  return res;
}

Mat forward_rescaled(const Mat& W, const Mat& A, const Mat& B, double rho,
                     const Mat& X, Mat* hidden) {
  check_params(W, A, B, X);
  const Mat AX = A * X;
  Mat H(W.rows(), X.cols());
  Vec h = Vec::Zero(W.rows()), hn(W.rows());
  for (Eigen::Index t = 0; t < X.cols(); ++t) {
    hn.noalias() = W * h;
    hn *= rho;
    hn += AX.col(t);
    h.swap(hn);
    H.col(t) = h;
  }
  Mat F = B * H;
  if (hidden != nullptr) *hidden = std::move(H);
  return F;
}

std::vector<Mat> markov_parameters(const Mat& W, const Mat& A, const Mat& B,
                                   double rho, int J) {
  if (J < 0) throw ParameterError("markov_parameters: negative lag");
  check_params(W, A, B, Mat::Zero(A.cols(), 0));
  std::vector<Mat> M;
  M.reserve(static_cast<std::size_t>(J) + 1);
  Mat P = A, Pn(A.rows(), A.cols());
  M.push_back(B * P);
  for (int j = 1; j <= J; ++j) {
    Pn.noalias() = W * P;
    Pn *= rho;
    P.swap(Pn);
    M.push_back(B * P);
  }
  return M;
}

std::vector<Mat> markov_tangents(const Mat& W, const Mat& A, const Mat& B,
                                 double rho, const Mat& ZW, const Mat& ZA,
                                 int J) {
  if (J < 0) throw ParameterError("markov_tangents: negative lag");
  check_params(W, A, B, Mat::Zero(A.cols(), 0));
  if (ZW.rows() != W.rows() || ZW.cols() != W.cols() ||
      ZA.rows() != A.rows() || ZA.cols() != A.cols()) {
    throw DimensionError("markov_tangents: direction shape mismatch");
  }
  std::vector<Mat> dM;
  dM.reserve(static_cast<std::size_t>(J) + 1);
  Mat P = A, S = ZA, Pn(A.rows(), A.cols()), Sn(A.rows(), A.cols());
  dM.push_back(B * S);
  for (int j = 1; j <= J; ++j) {
    Sn.noalias() = ZW * P;
    Sn.noalias() += W * S;
    Sn *= rho;
    Pn.noalias() = W * P;
    Pn *= rho;
    S.swap(Sn);
    P.swap(Pn);
    dM.push_back(B * S);
  }
  return dM;
}

Mat convolve(const std::vector<Mat>& markov, const Mat& X, int tau) {
  if (markov.empty()) throw ParameterError("convolve: no Markov parameters");
  if (markov[0].cols() != X.rows()) {
    throw DimensionError("convolve: input dimension mismatch");
  }
  const Eigen::Index T = X.cols();
  Mat F = Mat::Zero(markov[0].rows(), T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const Eigen::Index jmax = std::min<Eigen::Index>(
        std::min<Eigen::Index>(tau, t),
        static_cast<Eigen::Index>(markov.size()) - 1);
    for (Eigen::Index j = 0; j <= jmax; ++j) {
      F.col(t).noalias() += markov[static_cast<std::size_t>(j)] * X.col(t - j);
    }
  }
  return F;
}

Mat truncated_forward(const Mat& W, const Mat& A, const Mat& B, double rho,
                      const Mat& X, int tau) {
  if (tau < 0) throw ParameterError("truncated_forward: tau must be >= 0");
  const int T = static_cast<int>(X.cols());
  const int J = std::max(0, std::min(tau, T - 1));
  return convolve(markov_parameters(W, A, B, rho, J), X, J);
}

Mat linearized_forward(const Mat& W0, const Mat& A0, const Mat& W,
                       const Mat& A, const Mat& B, double rho, const Mat& X,
                       std::optional<int> tau) {
  if (tau.has_value()) {
    return linearized_forward_markov(W0, A0, W, A, B, rho, X, *tau);
  }
  if (W.rows() != W0.rows() || W.cols() != W0.cols() ||
      A.rows() != A0.rows() || A.cols() != A0.cols()) {
    throw DimensionError("linearized_forward: anchor/params mismatch");
  }
  Mat F = forward_rescaled(W0, A0, B, rho, X);
  F += jvp_sequence(W0, A0, B, rho, X, W - W0, A - A0);
  return F;
}

Mat linearized_forward_markov(const Mat& W0, const Mat& A0, const Mat& W,
                              const Mat& A, const Mat& B, double rho,
                              const Mat& X, int tau) {
  if (tau < 0) throw ParameterError("linearized_forward: tau must be >= 0");
  const int T = static_cast<int>(X.cols());
  const int J = std::max(0, std::min(tau, T - 1));
  std::vector<Mat> M = markov_parameters(W0, A0, B, rho, J);
  const std::vector<Mat> dM = markov_tangents(W0, A0, B, rho, W - W0, A - A0, J);
  for (std::size_t j = 0; j < M.size(); ++j) M[j] += dM[j];
  return convolve(M, X, J);
}

void save_checkpoint(const StudentRNN& rnn, const CheckpointMeta& meta,
                     const std::string& dir, const std::string& stem) {
  static_assert(std::endian::native == std::endian::little,
                "checkpoint blobs are written in native little-endian order");
  ensure_dir(dir);
  const Mat Wt = rnn.W_tilde();
  const std::vector<std::pair<std::string, const Mat*>> blobs = {
      {"W_tilde", &Wt}, {"A", &rnn.A},   {"B", &rnn.B},
      {"W0", &rnn.W0},  {"A0", &rnn.A0}, {"W", &rnn.W}};
  Json header;
  header["format_version"] = 1;
  header["m"] = rnn.m();
  header["d"] = rnn.d();
  header["d_y"] = rnn.d_y();
  header["rho"] = rnn.rho;
  header["seed"] = rnn.seed;
  header["init_law"] = to_string(rnn.law);
  header["step"] = meta.step;
  header["config_hash"] = meta.config_hash;
  header["version"] = kVersion;
  header["blob_file"] = stem + ".bin";
  header["dtype"] = "f64-le";
  header["order"] = "row-major";
  Json list = Json::array();
  std::ofstream out(dir + "/" + stem + ".bin", std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint blob");
  std::uint64_t offset = 0;
  std::vector<double> row_major;
  for (const auto& [name, M] : blobs) {
    row_major.resize(static_cast<std::size_t>(M->size()));
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>>(row_major.data(), M->rows(),
                                               M->cols()) = *M;
    const std::uint64_t len = row_major.size();
    out.write(reinterpret_cast<const char*>(row_major.data()),
              static_cast<std::streamsize>(len * sizeof(double)));
    list.push_back({{"name", name},
                    {"rows", M->rows()},
                    {"cols", M->cols()},
                    {"offset", offset},
                    {"length", len}});
    offset += len * sizeof(double);
  }
  header["blobs"] = list;
  write_file(dir + "/" + stem + ".json", header.dump(2) + "\n");
}

StudentRNN load_checkpoint(const std::string& dir, const std::string& stem,
                           CheckpointMeta* meta) {
  const Json header = Json::parse(read_file(dir + "/" + stem + ".json"));
  const std::string blob = read_file(dir + "/" + header.at("blob_file").get<std::string>());
  auto get = [&](const std::string& name) {
    for (const Json& b : header.at("blobs")) {
      if (b.at("name") != name) continue;
      const auto rows = b.at("rows").get<Eigen::Index>();
      const auto cols = b.at("cols").get<Eigen::Index>();
      const auto off = b.at("offset").get<std::uint64_t>();
      const auto len = b.at("length").get<std::uint64_t>();
      if (len != static_cast<std::uint64_t>(rows * cols) ||
          off + len * sizeof(double) > blob.size()) {
        throw ConfigError("checkpoint blob '" + name + "' is malformed");
      }
      Mat M(rows, cols);
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>
          src(reinterpret_cast<const double*>(blob.data() + off), rows, cols);
      M = src;
      return M;
    }
    throw ConfigError("checkpoint is missing blob '" + name + "'");
  };
  StudentRNN rnn;
  rnn.W = get("W");
  rnn.A = get("A");
  rnn.B = get("B");
  rnn.W0 = get("W0");
  rnn.A0 = get("A0");
  rnn.rho = header.at("rho").get<double>();
  rnn.seed = header.at("seed").get<std::uint64_t>();
  rnn.law = parse_init_law(header.at("init_law").get<std::string>());
  rnn.refresh_radii();
  if (meta != nullptr) {
    meta->step = header.at("step").get<long>();
    meta->config_hash = header.at("config_hash").get<std::string>();
  }
  return rnn;
}

}  // namespace sysid
