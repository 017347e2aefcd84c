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

#ifndef SYSID_SCHEDULE_HPP_
#define SYSID_SCHEDULE_HPP_

#include "sysid/io.hpp"

namespace sysid {

// Multipliers for the order-of-magnitude constants, one per field. All
// default to 1 and are recorded with the schedule.
struct ScheduleMultipliers {
  double T_max = 1.0;
  double b = 1.0;
  double eta = 1.0;
  double K = 1.0;
  double m_star = 1.0;
  double nu = 1.0;
  double omega = 1.0;
  double L = 1.0;
};

struct ScheduleInputs {
  double epsilon = 0.1;
  double delta = 0.36787944117144233;  // e^-1
  double rho_0 = 0.9;
  double c_rho = 1.0;
  double m = 1024.0;
  double l0 = 4.0;  // Lipschitz scale of the loss (square loss by default)
  ScheduleMultipliers mult;
};

struct TheorySchedule {
  ScheduleInputs in;
  double rho_0 = 0.0;
  double rho_1 = 0.0;
  double rho = 0.0;  // rho_1 rho_0^2
  int T_max = 0;
  double T_max_continuous = 0.0;  // fixed point before rounding
  int fixed_point_iterations = 0;
  double b = 0.0;
  double eta = 0.0;
  double K = 0.0;  // may exceed any integer type at desk scale
  double m_star = 0.0;
  double nu = 0.0;
  double omega = 0.0;      // after clamping to omega_0
  double omega_raw = 0.0;  // K eta 32 sqrt(m)/(1-rho_0)^3 l0 (1+2b)
  bool omega_clamped = false;
  double omega_0 = 0.0;  // 1/rho_0 - 1
  int L_cutoff = 0;      // ceil(c0 sqrt(m)/log m), c0 = multiplier L
  int tau = 0;           // = T_max
  double R = 0.0;        // b T_max^2
  bool outside_theory_regime = false;  // m < m_star
};

TheorySchedule theory_schedule(const ScheduleInputs& in);
TheorySchedule theory_schedule(double epsilon, double delta, double rho_0,
                               double c_rho, double m);

// 1 / (1 + 10 log^2 m / sqrt m)
double rho_1_of(double m);

Json to_json(const TheorySchedule& s);

}  // namespace sysid

#endif  // SYSID_SCHEDULE_HPP_
