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

#ifndef SYSID_EXPERIMENT_HPP_
#define SYSID_EXPERIMENT_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sysid/io.hpp"
#include "sysid/teacher.hpp"
#include "sysid/theory_verify.hpp"
#include "sysid/trainer.hpp"

namespace sysid {

inline constexpr int kSummarySchemaVersion = 1;

enum class ExperimentKind { kTrain, kVerify, kExistence, kSweep };

ExperimentKind parse_experiment_kind(const std::string& name);
std::string to_string(ExperimentKind kind);

struct TeacherConfig {
  int d_p = 4;
  int d = 2;
  int d_y = 2;
  double rho_C = 0.8;
  std::uint64_t seed = 7;
};

struct DataConfig {
  std::string path;  // load a saved dataset instead of generating one
  int T = 20;
  int K = 256;
  double noise_sigma = 0.0;
  std::string input = "iid_gaussian_unit";
  int holdout_K = 0;  // 0: no held-out set
};

struct StudentConfig {
  int m = 512;
  std::string rho_mode = "practical";  // practical | theory
  double rho = 0.9;                    // practical mode
  std::string init_law = "algorithm";
};

struct ScheduleConfig {
  double epsilon = 0.1;
  double delta = 0.36787944117144233;
  double rho_0 = 0.9;
  std::optional<int> T_max;  // override for the existence construction
};

struct TrainConfig {
  std::optional<double> eta;  // fixed step; otherwise calibrated on eta_grid
  std::vector<double> eta_grid;  // multiplied by 1/m
  long calibration_K = 2000;
  long K = 2000;
  long window = 200;
  long checkpoint_every = 500;
};

struct AssertConfig {
  std::optional<double> loss_ratio;     // running average <= ratio * initial
  std::optional<double> holdout_ratio;  // holdout <= ratio * train at the end
  std::optional<std::pair<double, double>> gap_exponent;
  std::optional<std::pair<double, double>> fit_slope;  // existence over m
  bool distances = false;                              // existence, every cell
  bool lemmas = false;                                 // verify
};

struct OutputConfig {
  bool comparators = true;  // existence cells export (W*, A*) checkpoints
};

struct SweepConfig {
  std::string cell_kind = "train";  // train | existence
  std::vector<int> m_grid;
  std::vector<std::uint64_t> seeds;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kTrain;
  std::uint64_t seed = 1;
  TeacherConfig teacher;
  DataConfig data;
  StudentConfig student;
  std::string loss = "square";
  double huber_delta = 1.0;
  ScheduleConfig schedule;
  TrainConfig train;
  std::vector<std::string> lemmas;  // verify; "all" expands
  VerifyOptions verify;
  SweepConfig sweep;
  OutputConfig output;
  AssertConfig asserts;
  Json source;  // the parsed document, normalized
};

// Strict parse: unknown keys and wrong types raise ConfigError.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::string& path);

// FNV-1a of the canonical dump of `source` with `seed` applied.
std::string config_hash(const ExperimentConfig& cfg);

struct ExperimentResult {
  Json report;
  std::vector<std::vector<std::string>> summary_rows;
  bool pass = true;
};

// Runs the pipeline and writes config.json, report.json, summary.csv and,
// for training, trace.jsonl and checkpoints under out_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::string& out_dir);

std::vector<std::string> summary_header();
std::string summary_csv(const std::vector<std::vector<std::string>>& rows);

struct GapCurve {
  std::vector<long> K;
  std::vector<double> gap;  // |mean_{k<K} (train_k - holdout_k)|
  double exponent = 0.0;    // log-log slope of gap against K
};

// Requires a trace recorded with a held-out set. Throws EvaluationError when
// the datasets come from different teachers or do not match the trace.
GapCurve generalization_gap(const TrainTrace& trace, const SequenceDataset& train,
                            const SequenceDataset& holdout,
                            const std::vector<long>& K_grid);

std::vector<long> doubling_K_grid(long lo, long hi);

Json to_json(const GapCurve& g);

}  // namespace sysid

#endif  // SYSID_EXPERIMENT_HPP_
