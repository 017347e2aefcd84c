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

#include "sysid/loss.hpp"

#include <algorithm>
#include <cmath>

#include "sysid/error.hpp"

namespace sysid {
namespace {

double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double sign0(double r) { return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0); }

}  // namespace

double Loss::l0(int d_y) const {
  const double s = std::sqrt(static_cast<double>(d_y));
  switch (kind) {
    case LossKind::kSquare:
      return 4.0;
    case LossKind::kL1:
      return s;
    case LossKind::kHuber:
      return std::min(2.0, delta * s);
    case LossKind::kLogistic:
      return 1.0;
  }
  return 0.0;
}

std::string Loss::name() const {
  switch (kind) {
    case LossKind::kSquare:
      return "square";
    case LossKind::kL1:
      return "l1";
    case LossKind::kHuber:
      return "huber";
    case LossKind::kLogistic:
      return "logistic";
  }
  return "?";
}

Loss make_loss(const std::string& kind, double delta) {
  Loss l;
  l.delta = delta;
  if (kind == "square") {
    l.kind = LossKind::kSquare;
  } else if (kind == "l1") {
    l.kind = LossKind::kL1;
  } else if (kind == "huber") {
    if (!(delta > 0.0)) throw ParameterError("huber delta must be positive");
    l.kind = LossKind::kHuber;
  } else if (kind == "logistic") {
    l.kind = LossKind::kLogistic;
  } else {
    throw ParameterError("unknown loss kind '" + kind + "'");
  }
  return l;
}

double loss_value(const Loss& loss, const Cvec& y, const Cvec& y_hat) {
  if (y.size() != y_hat.size()) throw DimensionError("loss: size mismatch");
  double v = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double r = y_hat(i) - y(i);
    switch (loss.kind) {
      case LossKind::kSquare:
        v += r * r;
        break;
      case LossKind::kL1:
        v += std::abs(r);
        break;
      case LossKind::kHuber: {
        const double a = std::abs(r);
        v += a <= loss.delta ? 0.5 * r * r : loss.delta * (a - 0.5 * loss.delta);
        break;
      }
      case LossKind::kLogistic:
        v += softplus(-y(i) * y_hat(i));
        break;
    }
  }
  return v;
}

std::pair<double, Vec> eval_loss(const Loss& loss, const Cvec& y,
                                 const Cvec& y_hat) {
  if (!y.allFinite() || !y_hat.allFinite()) {
    throw EvaluationError("loss: non-finite input");
  }
  const double v = loss_value(loss, y, y_hat);
  Vec g(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double r = y_hat(i) - y(i);
    switch (loss.kind) {
      case LossKind::kSquare:
        g(i) = 2.0 * r;
        break;
      case LossKind::kL1:
        g(i) = sign0(r);
        break;
      case LossKind::kHuber:
        g(i) = std::clamp(r, -loss.delta, loss.delta);
        break;
      case LossKind::kLogistic:
        g(i) = -y(i) * sigmoid(-y(i) * y_hat(i));
        break;
    }
  }
  return {v, g};
}

}  // namespace sysid
