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

#ifndef SYSID_LOSS_HPP_
#define SYSID_LOSS_HPP_

#include <string>
#include <utility>

#include "sysid/linalg.hpp"

namespace sysid {

enum class LossKind { kSquare, kL1, kHuber, kLogistic };

// Convex per-timestep loss L(y, y_hat).
//   square:   ||y - y_hat||^2
//   l1:       sum |y_i - y_hat_i|, subgradient 0 at a zero residual
//   huber:    per coordinate, r^2/2 if |r| <= delta else delta (|r| - delta/2)
//   logistic: sum softplus(-y_i y_hat_i)
struct Loss {
  LossKind kind = LossKind::kSquare;
  double delta = 1.0;

  // Lipschitz scale l0 with ||grad|| <= l0 (1 + C) when ||y||, ||y_hat|| <= C.
  double l0(int d_y) const;
  std::string name() const;
};

Loss make_loss(const std::string& kind, double delta = 1.0);

using Cvec = Eigen::Ref<const Vec>;

double loss_value(const Loss& loss, const Cvec& y, const Cvec& y_hat);

// Value and (sub)gradient with respect to y_hat.
std::pair<double, Vec> eval_loss(const Loss& loss, const Cvec& y,
                                 const Cvec& y_hat);

}  // namespace sysid

#endif  // SYSID_LOSS_HPP_
