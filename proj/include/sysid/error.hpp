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

#ifndef SYSID_ERROR_HPP_
#define SYSID_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace sysid {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Argument outside its documented domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Fixed point for T_max did not settle.
class ScheduleError : public Error {
 public:
  using Error::Error;
};

// Gram matrix too ill-conditioned to invert reliably.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

// Non-finite value produced by a user function or a training step.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

// Malformed or unknown configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace sysid

#endif  // SYSID_ERROR_HPP_
