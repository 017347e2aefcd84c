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

#ifndef SYSID_TRAINER_HPP_
#define SYSID_TRAINER_HPP_

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sysid/loss.hpp"
#include "sysid/student.hpp"
#include "sysid/teacher.hpp"

namespace sysid {

struct TrainStep {
  long k = 0;
  int i = 0;          // sampled sequence
  double loss = 0.0;  // (1/T) sum_t L at the current iterate, before the step
  double dW_frob = 0.0;  // ||W_k - W_0||_F
  double dA_frob = 0.0;
  // Paired held-out loss at the same iterate (NaN when not recorded).
  double holdout_loss = std::numeric_limits<double>::quiet_NaN();
};

struct TrainOptions {
  double eta = 0.0;
  long K = 0;
  std::uint64_t seed = 0;
  // Full checkpoints every this many steps into `out_dir` (0 disables).
  long checkpoint_every = 500;
  std::string out_dir;  // empty: nothing written
  std::string config_hash;
  // Optional held-out set; sequence (i_k mod K_h) is scored at every step.
  const SequenceDataset* holdout = nullptr;
};

struct TrainTrace {
  std::vector<TrainStep> steps;
  std::string config_hash;
  std::uint64_t seed = 0;
  double eta = 0.0;
  std::string train_hash;    // dataset_hash of the training set
  std::string holdout_hash;  // empty when no held-out set
  std::string teacher_hash;
  bool aborted = false;
  std::string abort_reason;
};

// Plain SGD. Each step draws i uniformly, takes both gradients at the current
// iterate and applies W_tilde -= eta grad_{W_tilde}, A -= eta grad_A.
TrainTrace sgd_train(StudentRNN& rnn, const SequenceDataset& data,
                     const Loss& loss, const TrainOptions& opts);

// (1/K) sum_k loss_k over the recorded steps.
double averaged_loss(const TrainTrace& trace);

// Recompute the average from checkpoints; every step must have a checkpoint
// written by sgd_train with checkpoint_every = 1.
double averaged_loss_from_checkpoints(const TrainTrace& trace,
                                      const SequenceDataset& data,
                                      const Loss& loss, const std::string& dir);

// Mean of the last `window` recorded losses.
double running_average(const TrainTrace& trace, long end, long window);

// Mean loss of the current parameters over a whole dataset.
double dataset_loss(const StudentRNN& rnn, const SequenceDataset& data,
                    const Loss& loss);

// Trace as JSONL: a header line, then one record per step.
std::string trace_to_jsonl(const TrainTrace& trace);
void write_trace(const TrainTrace& trace, const std::string& path);

struct EtaCandidate {
  double eta = 0.0;
  double final_running_loss = 0.0;
  bool diverged = false;
};

struct EtaCalibration {
  std::vector<EtaCandidate> grid;
  double chosen = 0.0;
};

// Short runs from identical initializations; picks the lowest final running
// loss among non-diverged candidates.
EtaCalibration calibrate_eta(const StudentRNN& init, const SequenceDataset& data,
                             const Loss& loss, const std::vector<double>& grid,
                             long K, std::uint64_t seed, long window);

}  // namespace sysid

#endif  // SYSID_TRAINER_HPP_
