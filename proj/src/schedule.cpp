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

#include "sysid/schedule.hpp"

#include <cmath>

#include "sysid/error.hpp"

namespace sysid {

double rho_1_of(double m) {
  const double lm = std::log(m);
  return 1.0 / (1.0 + 10.0 * lm * lm / std::sqrt(m));
}

TheorySchedule theory_schedule(const ScheduleInputs& in) {
  const double e_inv = std::exp(-1.0);
  if (!(in.epsilon > 0.0 && in.epsilon <= e_inv)) {
    throw ParameterError("epsilon must lie in (0, 1/e]");
  }
  if (!(in.delta > 0.0 && in.delta <= e_inv * (1.0 + 1e-15))) {
    throw ParameterError("delta must lie in (0, 1/e]");
  }
  if (!(in.rho_0 > 0.0 && in.rho_0 < 1.0)) {
    throw ParameterError("rho_0 must lie in (0, 1)");
  }
  if (!(in.c_rho > 0.0)) throw ParameterError("c_rho must be positive");
  if (!(in.m >= 2.0)) throw ParameterError("m must be >= 2");
  if (!(in.l0 > 0.0)) throw ParameterError("l0 must be positive");

  TheorySchedule s;
  s.in = in;
  const ScheduleMultipliers& k = in.mult;
  const double r0 = in.rho_0, eps = in.epsilon, del = in.delta, m = in.m;
  s.rho_0 = r0;
  s.rho_1 = rho_1_of(m);
  s.rho = s.rho_1 * r0 * r0;

  // T = (1/log(1/rho_0)) {2 log(c/(1-rho_0)) + log(1/eps)
  //                       + log sqrt(log(T/delta)) + log(m)/2}
  const double lead = 1.0 / std::log(1.0 / r0);
  const double fixed = 2.0 * std::log(in.c_rho / (1.0 - r0)) +
                       std::log(1.0 / eps) + 0.5 * std::log(m);
  auto rhs = [&](double T) {
    const double Tc = std::max(T, 1.0);
    return k.T_max * lead * (fixed + 0.5 * std::log(std::log(Tc / del)));
  };
  double T = 1.0;
  bool converged = false;
  for (int it = 1; it <= 100; ++it) {
    const double next = std::max(rhs(T), 1.0);
    s.fixed_point_iterations = it;
    if (std::abs(next - T) <= 1e-12 * std::max(1.0, next)) {
      T = next;
      converged = true;
      break;
    }
    T = next;
  }
  if (!converged) throw ScheduleError("T_max fixed point did not converge");
  s.T_max_continuous = T;
  s.T_max = std::max(1, static_cast<int>(std::ceil(T - 1e-9)));
  const double Tm = s.T_max;

  s.b = k.b * std::sqrt(std::log(Tm / del));
  const double b = s.b;
  const double l0 = in.l0;
  const double one_2b = 1.0 + 2.0 * b;
  s.nu = k.nu * eps * eps * std::pow(1.0 - r0, 12) /
         (std::pow(Tm, 4) * std::pow(l0, 6) * std::pow(one_2b, 6));
  s.eta = k.eta * s.nu * eps / (m * b * b);
  s.K = std::ceil(k.K * std::pow(Tm, 4) * std::pow(b, 4) / (s.nu * eps * eps));
  s.m_star = k.m_star * (in.c_rho * in.c_rho * std::pow(s.K, 4) *
                             std::pow(1.0 - r0, 8) * eps * eps /
                             std::pow(b, 6) +
                         1.0 / del);
  s.omega_0 = 1.0 / r0 - 1.0;
  s.omega_raw = k.omega * s.K * s.eta * 32.0 * std::sqrt(m) /
                std::pow(1.0 - r0, 3) * l0 * one_2b;
  s.omega_clamped = !(s.omega_raw <= s.omega_0);
  s.omega = s.omega_clamped ? s.omega_0 : s.omega_raw;
  s.L_cutoff = std::max(
      1, static_cast<int>(std::ceil(k.L * std::sqrt(m) / std::log(m))));
  s.tau = s.T_max;
  s.R = b * Tm * Tm;
  s.outside_theory_regime = m < s.m_star;
  return s;
}

TheorySchedule theory_schedule(double epsilon, double delta, double rho_0,
                               double c_rho, double m) {
  ScheduleInputs in;
  in.epsilon = epsilon;
  in.delta = delta;
  in.rho_0 = rho_0;
  in.c_rho = c_rho;
  in.m = m;
  return theory_schedule(in);
}

Json to_json(const TheorySchedule& s) {
  const ScheduleMultipliers& k = s.in.mult;
  Json j;
  j["epsilon"] = s.in.epsilon;
  j["delta"] = s.in.delta;
  j["c_rho"] = s.in.c_rho;
  j["m"] = s.in.m;
  j["l0"] = s.in.l0;
  j["rho_0"] = s.rho_0;
  j["rho_1"] = s.rho_1;
  j["rho"] = s.rho;
  j["T_max"] = s.T_max;
  j["T_max_continuous"] = s.T_max_continuous;
  j["fixed_point_iterations"] = s.fixed_point_iterations;
  j["b"] = s.b;
  j["eta"] = s.eta;
  j["K"] = s.K;
  j["m_star"] = s.m_star;
  j["nu"] = s.nu;
  j["omega"] = s.omega;
  j["omega_raw"] = s.omega_raw;
  j["omega_clamped"] = s.omega_clamped;
  j["omega_0"] = s.omega_0;
  j["L_cutoff"] = s.L_cutoff;
  j["tau"] = s.tau;
  j["R"] = s.R;
  j["outside_theory_regime"] = s.outside_theory_regime;
  j["multipliers"] = {{"T_max", k.T_max}, {"b", k.b},         {"eta", k.eta},
                      {"K", k.K},         {"m_star", k.m_star}, {"nu", k.nu},
                      {"omega", k.omega}, {"L", k.L}};
  return j;
}

}  // namespace sysid
