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

#include "sysid/trainer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "sysid/error.hpp"
#include "sysid/gradients.hpp"
#include "sysid/io.hpp"
#include "sysid/random.hpp"

namespace sysid {
namespace {

std::string checkpoint_stem(long k) { return "ckpt_" + std::to_string(k); }

}  // namespace

TrainTrace sgd_train(StudentRNN& rnn, const SequenceDataset& data,
                     const Loss& loss, const TrainOptions& opts) {
  if (!(opts.eta >= 0.0)) throw ParameterError("eta must be >= 0");
  if (opts.K < 1) throw ParameterError("K must be >= 1");
  if (data.K < 1) throw ParameterError("empty training set");
  if (data.d() != rnn.d() || data.d_y() != rnn.d_y()) {
    throw DimensionError("dataset and student dimensions differ");
  }
  if (opts.holdout != nullptr && opts.holdout->K < 1) {
    throw ParameterError("empty held-out set");
  }
  TrainTrace trace;
  trace.config_hash = opts.config_hash;
  trace.seed = opts.seed;
  trace.eta = opts.eta;
  trace.train_hash = dataset_hash(data);
  trace.teacher_hash = data.teacher_hash;
  if (opts.holdout != nullptr) trace.holdout_hash = dataset_hash(*opts.holdout);
  trace.steps.reserve(static_cast<std::size_t>(opts.K));

  const bool write = !opts.out_dir.empty() && opts.checkpoint_every > 0;
  const std::string ckpt_dir = opts.out_dir + "/checkpoints";
  if (write) save_checkpoint(rnn, {0, opts.config_hash}, ckpt_dir, checkpoint_stem(0));

  // W_tilde -= eta grad_{W_tilde} with W_tilde = rho W and
  // grad_{W_tilde} = grad_W / rho is W -= (eta / rho^2) grad_W.
  const double step_W = opts.eta / (rnn.rho * rnn.rho);
  Rng rng(opts.seed);
  for (long k = 0; k < opts.K; ++k) {
    const int i = static_cast<int>(rng.index(static_cast<std::uint64_t>(data.K)));
    GradientPair gp;
    TrainStep st;
    st.k = k;
    st.i = i;
    bool finite = true;
    try {
      gp = loss_gradients_bptt(rnn, data.inputs[i], data.observed[i], loss);
      st.loss = gp.loss;
      finite = std::isfinite(gp.loss) && gp.grad_W.allFinite() && gp.grad_A.allFinite();
      if (finite && opts.holdout != nullptr) {
        const int j = i % opts.holdout->K;
        st.holdout_loss = sequence_loss(rnn.W, rnn.A, rnn.B, rnn.rho,
                                        opts.holdout->inputs[j],
                                        opts.holdout->observed[j], loss);
      }
    } catch (const EvaluationError&) {
      // The loss rejects non-finite outputs; the iterate has diverged.
      finite = false;
      st.loss = std::numeric_limits<double>::infinity();
    }
    st.dW_frob = rnn.dW_frob();
    st.dA_frob = rnn.dA_frob();
    trace.steps.push_back(st);
    if (!finite) {
      trace.aborted = true;
      trace.abort_reason = "non-finite loss or gradient at step " + std::to_string(k);
      if (!opts.out_dir.empty()) {
        save_checkpoint(rnn, {k, opts.config_hash}, ckpt_dir, "diagnostic");
      }
      return trace;
    }
    rnn.W.noalias() -= step_W * gp.grad_W;
    rnn.A.noalias() -= opts.eta * gp.grad_A;
    rnn.refresh_radii();
    if (write && ((k + 1) % opts.checkpoint_every == 0 || k + 1 == opts.K)) {
      save_checkpoint(rnn, {k + 1, opts.config_hash}, ckpt_dir,
                      checkpoint_stem(k + 1));
    }
  }
  return trace;
}

double averaged_loss(const TrainTrace& trace) {
  if (trace.steps.empty()) throw ParameterError("averaged_loss: empty trace");
  double s = 0.0;
  for (const TrainStep& st : trace.steps) s += st.loss;
  return s / static_cast<double>(trace.steps.size());
}

double averaged_loss_from_checkpoints(const TrainTrace& trace,
                                      const SequenceDataset& data,
                                      const Loss& loss, const std::string& dir) {
  if (trace.steps.empty()) throw ParameterError("averaged_loss: empty trace");
  double s = 0.0;
  for (const TrainStep& st : trace.steps) {
    const StudentRNN rnn = load_checkpoint(dir + "/checkpoints", checkpoint_stem(st.k));
    s += sequence_loss(rnn.W, rnn.A, rnn.B, rnn.rho, data.inputs[st.i],
                       data.observed[st.i], loss);
  }
  return s / static_cast<double>(trace.steps.size());
}

double running_average(const TrainTrace& trace, long end, long window) {
  const long n = static_cast<long>(trace.steps.size());
  end = std::min(end, n);
  const long begin = std::max(0L, end - window);
  if (end <= begin) throw ParameterError("running_average: empty window");
  double s = 0.0;
  for (long k = begin; k < end; ++k) s += trace.steps[static_cast<std::size_t>(k)].loss;
  return s / static_cast<double>(end - begin);
}

double dataset_loss(const StudentRNN& rnn, const SequenceDataset& data,
                    const Loss& loss) {
  double s = 0.0;
  for (int i = 0; i < data.K; ++i) {
    s += sequence_loss(rnn.W, rnn.A, rnn.B, rnn.rho, data.inputs[i],
                       data.observed[i], loss);
  }
  return s / static_cast<double>(data.K);
}

std::string trace_to_jsonl(const TrainTrace& trace) {
  std::ostringstream out;
  Json header = {{"type", "header"},
                 {"version", kVersion},
                 {"config_hash", trace.config_hash},
                 {"seed", trace.seed},
                 {"eta", trace.eta},
                 {"train_hash", trace.train_hash},
                 {"holdout_hash", trace.holdout_hash},
                 {"teacher_hash", trace.teacher_hash},
                 {"aborted", trace.aborted}};
  out << header.dump() << '\n';
  for (const TrainStep& st : trace.steps) {
    Json rec = {{"k", st.k},
                {"i", st.i},
                {"loss", st.loss},
                {"dW_frob", st.dW_frob},
                {"dA_frob", st.dA_frob}};
    if (!std::isnan(st.holdout_loss)) rec["holdout_loss"] = st.holdout_loss;
    out << rec.dump() << '\n';
  }
  return out.str();
}

void write_trace(const TrainTrace& trace, const std::string& path) {
  write_file(path, trace_to_jsonl(trace));
}

EtaCalibration calibrate_eta(const StudentRNN& init, const SequenceDataset& data,
                             const Loss& loss, const std::vector<double>& grid,
                             long K, std::uint64_t seed, long window) {
  EtaCalibration cal;
  double best = std::numeric_limits<double>::infinity();
  for (double eta : grid) {
    StudentRNN rnn = init;
    TrainOptions opts;
    opts.eta = eta;
    opts.K = K;
    opts.seed = seed;
    opts.checkpoint_every = 0;
    const TrainTrace tr = sgd_train(rnn, data, loss, opts);
    EtaCandidate c;
    c.eta = eta;
    c.diverged = tr.aborted;
    c.final_running_loss = tr.aborted ? std::numeric_limits<double>::infinity()
                                      : running_average(tr, K, window);
    if (!std::isfinite(c.final_running_loss)) c.diverged = true;
    if (!c.diverged && c.final_running_loss < best) {
      best = c.final_running_loss;
      cal.chosen = eta;
    }
    cal.grid.push_back(c);
  }
  return cal;
}

}  // namespace sysid
