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

#ifndef SYSID_RANDOM_HPP_
#define SYSID_RANDOM_HPP_

#include <cstdint>
#include <random>

#include "sysid/linalg.hpp"

namespace sysid {

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Independent stream identifier for item i under a parent seed.
std::uint64_t subseed(std::uint64_t seed, std::uint64_t i);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double normal() { return normal_(gen_); }
  double uniform() { return uniform_(gen_); }
  // Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n);

  // i.i.d. N(0, stddev^2) entries, filled in column-major order.
  Mat gaussian(Eigen::Index rows, Eigen::Index cols, double stddev);
  Vec gaussian(Eigen::Index n, double stddev);
  // Uniform direction on the unit sphere.
  Vec unit_vector(Eigen::Index n);
  // Gaussian matrix rescaled to unit Frobenius norm.
  Mat unit_frobenius(Eigen::Index rows, Eigen::Index cols);
  // Haar-distributed orthogonal matrix (QR of a Gaussian, sign-corrected).
  Mat haar_orthogonal(Eigen::Index n);

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace sysid

#endif  // SYSID_RANDOM_HPP_
