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

#include "sysid/random.hpp"

#include <cmath>

namespace sysid {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t subseed(std::uint64_t seed, std::uint64_t i) {
  return mix64(mix64(seed) ^ mix64(i + 0x632be59bd9b4e019ULL));
}

std::uint64_t Rng::index(std::uint64_t n) {
  // Rejection sampling on the raw engine output, library independent.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r;
  do {
    r = gen_();
  } while (r >= limit);
  return r % n;
}

Mat Rng::gaussian(Eigen::Index rows, Eigen::Index cols, double stddev) {
  Mat M(rows, cols);
  double* p = M.data();
  const Eigen::Index n = M.size();
  for (Eigen::Index i = 0; i < n; ++i) p[i] = stddev * normal_(gen_);
  return M;
}

Vec Rng::gaussian(Eigen::Index n, double stddev) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = stddev * normal_(gen_);
  return v;
}

Vec Rng::unit_vector(Eigen::Index n) {
  Vec v = gaussian(n, 1.0);
  double s = v.norm();
  while (s == 0.0) {
    v = gaussian(n, 1.0);
    s = v.norm();
  }
  return v / s;
}

Mat Rng::unit_frobenius(Eigen::Index rows, Eigen::Index cols) {
  Mat M = gaussian(rows, cols, 1.0);
  const double s = M.norm();
  if (s > 0.0) M /= s;
  return M;
}

Mat Rng::haar_orthogonal(Eigen::Index n) {
  Mat Z = gaussian(n, n, 1.0);
  Eigen::HouseholderQR<Mat> qr(Z);
  Mat Q = qr.householderQ() * Mat::Identity(n, n);
  const Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  }
  return Q;
}

}  // namespace sysid
