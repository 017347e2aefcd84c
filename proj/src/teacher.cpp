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

#include "sysid/teacher.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "sysid/error.hpp"
#include "sysid/io.hpp"
#include "sysid/random.hpp"

namespace sysid {
namespace {

void check_shapes(const Mat& C, const Mat& D, const Mat& G) {
  if (C.rows() != C.cols()) throw DimensionError("C must be square");
  if (D.rows() != C.rows()) throw DimensionError("D rows must equal d_p");
  if (G.cols() != C.rows()) throw DimensionError("G cols must equal d_p");
  if (C.rows() == 0 || D.cols() == 0 || G.rows() == 0) {
    throw DimensionError("system dimensions must be positive");
  }
}

}  // namespace

Certificate stability_certificate(const StableLinearSystem& sys, int horizon) {
  if (!(sys.rho_C > 0.0 && sys.rho_C < 1.0)) {
    throw ParameterError("rho_C must lie in (0, 1)");
  }
  if (horizon < 1) throw ParameterError("horizon must be >= 1");
  check_shapes(sys.C, sys.D, sys.G);
  Certificate cert;
  Mat CkD = sys.D;
  Mat Ck = Mat::Identity(sys.C.rows(), sys.C.cols());
  // Work in log space so rho_C^k never underflows on long horizons.
  const double log_rho = std::log(sys.rho_C);
  for (int k = 0; k <= horizon; ++k) {
    const double scale = std::exp(-k * log_rho);
    cert.c_rho_est = std::max(cert.c_rho_est, opnorm(CkD) * scale);
    cert.c_rho_state_est = std::max(cert.c_rho_state_est, opnorm(Ck) * scale);
    CkD = sys.C * CkD;
    Ck = sys.C * Ck;
  }
  cert.spectral_radius = spectral_radius(sys.C);
  // Equality is admitted up to the eigensolver tolerance: C = rho_C Q has
  // spectral radius exactly rho_C.
  cert.ok = cert.spectral_radius < 1.0 &&
            cert.spectral_radius <= sys.rho_C * (1.0 + 1e-8);
  return cert;
}

StableLinearSystem make_system(Mat C, Mat D, Mat G, double rho_C, int horizon) {
  check_shapes(C, D, G);
  StableLinearSystem sys;
  sys.C = std::move(C);
  sys.D = std::move(D);
  sys.G = std::move(G);
  sys.rho_C = rho_C;
  const Certificate cert = stability_certificate(sys, horizon);
  sys.c_rho = cert.c_rho_est;
  sys.c_rho_state = cert.c_rho_state_est;
  sys.opnorm_D = opnorm(sys.D);
  sys.opnorm_G = opnorm(sys.G);
  sys.certified_horizon = horizon;
  return sys;
}

StableLinearSystem random_stable_system(int d_p, int d, int d_y, double rho_C,
                                        std::uint64_t seed, int horizon) {
  if (d_p < 1 || d < 1 || d_y < 1) {
    throw DimensionError("dimensions must be positive");
  }
  if (!(rho_C > 0.0 && rho_C < 1.0)) {
    throw ParameterError("rho_C must lie in (0, 1)");
  }
  Rng rng(seed);
  Mat C = rho_C * rng.haar_orthogonal(d_p);
  Mat D = rng.gaussian(d_p, d, 1.0);
  Mat G = rng.gaussian(d_y, d_p, 1.0);
  D /= opnorm(D);
  G /= opnorm(G);
  return make_system(std::move(C), std::move(D), std::move(G), rho_C, horizon);
}

Simulation simulate(const StableLinearSystem& sys, const Mat& inputs) {
  if (inputs.rows() != sys.D.cols()) {
    throw DimensionError("simulate: input dimension mismatch");
  }
  const Eigen::Index T = inputs.cols();
  Simulation sim;
  sim.states.resize(sys.C.rows(), T);
  Vec p = Vec::Zero(sys.C.rows());
  for (Eigen::Index t = 0; t < T; ++t) {
    p = sys.C * p + sys.D * inputs.col(t);
    sim.states.col(t) = p;
  }
  sim.outputs = sys.G * sim.states;
  return sim;
}

std::string system_hash(const StableLinearSystem& sys) {
  Fnv1a h;
  h.update(sys.C);
  h.update(sys.D);
  h.update(sys.G);
  h.update_f64(sys.rho_C);
  return h.hex();
}

InputSpec parse_input_spec(const std::string& name) {
  if (name == "iid_gaussian_unit") return InputSpec::kIidGaussianUnit;
  if (name == "iid_uniform_sphere") return InputSpec::kIidUniformSphere;
  throw ParameterError("unknown input spec '" + name + "'");
}

std::string to_string(InputSpec spec) {
  return spec == InputSpec::kIidGaussianUnit ? "iid_gaussian_unit"
                                             : "iid_uniform_sphere";
}

SequenceDataset generate_dataset(const StableLinearSystem& sys, InputSpec spec,
                                 double noise_sigma, int T, int K,
                                 std::uint64_t seed) {
  if (T <= 0 || K <= 0) throw ParameterError("T and K must be positive");
  if (!(noise_sigma >= 0.0)) throw ParameterError("noise_sigma must be >= 0");
  SequenceDataset ds;
  ds.T = T;
  ds.K = K;
  ds.seed = seed;
  ds.noise_sigma = noise_sigma;
  ds.input_spec = spec;
  ds.system = sys;
  ds.teacher_hash = system_hash(sys);
  const int d = sys.d();
  ds.inputs.resize(K);
  ds.clean.resize(K);
  ds.observed.resize(K);
  for (int i = 0; i < K; ++i) {
    Rng rng(subseed(seed, static_cast<std::uint64_t>(i)));
    Mat X(d, T);
    for (int t = 0; t < T; ++t) {
      Vec x;
      if (spec == InputSpec::kIidGaussianUnit) {
        // N(0, I/d), projected onto the unit ball.
        x = rng.gaussian(d, 1.0 / std::sqrt(static_cast<double>(d)));
        const double n = x.norm();
        if (n > 1.0) x /= n;
      } else {
        x = rng.unit_vector(d);
      }
      X.col(t) = x;
    }
    Mat Y = simulate(sys, X).outputs;
    ds.observed[i] = Y;
    if (noise_sigma > 0.0) {
      ds.observed[i] += rng.gaussian(Y.rows(), Y.cols(), noise_sigma);
    }
    ds.inputs[i] = std::move(X);
    ds.clean[i] = std::move(Y);
  }
  return ds;
}

std::string dataset_hash(const SequenceDataset& ds) {
  Fnv1a h;
  h.update(ds.teacher_hash);
  h.update_u64(static_cast<std::uint64_t>(ds.T));
  h.update_u64(static_cast<std::uint64_t>(ds.K));
  for (int i = 0; i < ds.K; ++i) {
    h.update(ds.inputs[i]);
    h.update(ds.observed[i]);
  }
  return h.hex();
}

void save_dataset(const SequenceDataset& ds, const std::string& dir) {
  ensure_dir(dir);
  Json meta;
  meta["format_version"] = 1;
  meta["d_p"] = ds.system.d_p();
  meta["d"] = ds.d();
  meta["d_y"] = ds.d_y();
  meta["T"] = ds.T;
  meta["K"] = ds.K;
  meta["noise_sigma"] = ds.noise_sigma;
  meta["seed"] = ds.seed;
  meta["input_spec"] = to_string(ds.input_spec);
  meta["teacher_hash"] = ds.teacher_hash;
  meta["system"] = {{"C", matrix_to_json(ds.system.C)},
                    {"D", matrix_to_json(ds.system.D)},
                    {"G", matrix_to_json(ds.system.G)},
                    {"rho_C", ds.system.rho_C},
                    {"c_rho", ds.system.c_rho},
                    {"c_rho_state", ds.system.c_rho_state},
                    {"certified_horizon", ds.system.certified_horizon}};
  write_file(dir + "/meta.json", meta.dump(2) + "\n");

  std::ofstream out(dir + "/data.csv", std::ios::binary);
  if (!out) throw ConfigError("cannot write " + dir + "/data.csv");
  const int d = ds.d(), dy = ds.d_y();
  out << "i,t";
  for (int j = 0; j < d; ++j) out << ",x" << j;
  for (int j = 0; j < dy; ++j) out << ",y" << j;
  for (int j = 0; j < dy; ++j) out << ",yclean" << j;
  out << "\n";
  for (int i = 0; i < ds.K; ++i) {
    for (int t = 0; t < ds.T; ++t) {
      out << i << ',' << (t + 1);
      for (int j = 0; j < d; ++j) out << ',' << format_double(ds.inputs[i](j, t));
      for (int j = 0; j < dy; ++j) {
        out << ',' << format_double(ds.observed[i](j, t));
      }
      for (int j = 0; j < dy; ++j) out << ',' << format_double(ds.clean[i](j, t));
      out << '\n';
    }
  }
}

SequenceDataset load_dataset(const std::string& dir) {
  const Json meta = Json::parse(read_file(dir + "/meta.json"));
  SequenceDataset ds;
  ds.T = meta.at("T").get<int>();
  ds.K = meta.at("K").get<int>();
  ds.noise_sigma = meta.at("noise_sigma").get<double>();
  ds.seed = meta.at("seed").get<std::uint64_t>();
  ds.input_spec = parse_input_spec(meta.at("input_spec").get<std::string>());
  const Json& s = meta.at("system");
  ds.system.C = matrix_from_json(s.at("C"));
  ds.system.D = matrix_from_json(s.at("D"));
  ds.system.G = matrix_from_json(s.at("G"));
  ds.system.rho_C = s.at("rho_C").get<double>();
  ds.system.c_rho = s.at("c_rho").get<double>();
  ds.system.c_rho_state = s.at("c_rho_state").get<double>();
  ds.system.certified_horizon = s.at("certified_horizon").get<int>();
  ds.system.opnorm_D = opnorm(ds.system.D);
  ds.system.opnorm_G = opnorm(ds.system.G);
  ds.teacher_hash = system_hash(ds.system);
  if (ds.teacher_hash != meta.at("teacher_hash").get<std::string>()) {
    throw ConfigError("dataset meta.json: teacher hash mismatch");
  }
  const int d = meta.at("d").get<int>(), dy = meta.at("d_y").get<int>();
  ds.inputs.assign(ds.K, Mat::Zero(d, ds.T));
  ds.observed.assign(ds.K, Mat::Zero(dy, ds.T));
  ds.clean.assign(ds.K, Mat::Zero(dy, ds.T));

  std::ifstream in(dir + "/data.csv");
  if (!in) throw ConfigError("cannot open " + dir + "/data.csv");
  std::string line;
  std::getline(in, line);  // header
  long rows = 0;
  std::vector<std::string_view> fields;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    fields.clear();
    std::size_t start = 0;
    for (std::size_t pos = 0; pos <= line.size(); ++pos) {
      if (pos == line.size() || line[pos] == ',') {
        fields.emplace_back(line.data() + start, pos - start);
        start = pos + 1;
      }
    }
    if (static_cast<int>(fields.size()) != 2 + d + 2 * dy) {
      throw ConfigError("data.csv: wrong field count");
    }
    const auto i = static_cast<int>(parse_double(fields[0]));
    const auto t = static_cast<int>(parse_double(fields[1])) - 1;
    if (i < 0 || i >= ds.K || t < 0 || t >= ds.T) {
      throw ConfigError("data.csv: index out of range");
    }
    std::size_t f = 2;
    for (int j = 0; j < d; ++j) ds.inputs[i](j, t) = parse_double(fields[f++]);
    for (int j = 0; j < dy; ++j) ds.observed[i](j, t) = parse_double(fields[f++]);
    for (int j = 0; j < dy; ++j) ds.clean[i](j, t) = parse_double(fields[f++]);
    ++rows;
  }
  if (rows != static_cast<long>(ds.K) * ds.T) {
    throw ConfigError("data.csv: row count mismatch");
  }
  return ds;
}

}  // namespace sysid
