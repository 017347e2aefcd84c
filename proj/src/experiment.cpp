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

#include "sysid/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "sysid/error.hpp"
#include "sysid/existence.hpp"
#include "sysid/parallel.hpp"
#include "sysid/random.hpp"
#include "sysid/schedule.hpp"

namespace sysid {
namespace {

// Reads the members of one JSON object and rejects anything left unread.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  template <typename T>
  void get(const std::string& key, std::optional<T>& out) {
    if (!j_.contains(key)) return;
    T v{};
    get(key, v);
    out = v;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(path_ + ": unknown key '" + k + "'");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void get_range(Section& s, const std::string& key,
               std::optional<std::pair<double, double>>& out) {
  std::optional<std::vector<double>> v;
  s.get(key, v);
  if (!v) return;
  if (v->size() != 2 || !((*v)[0] <= (*v)[1])) {
    throw ConfigError("assert." + key + ": expected [lo, hi]");
  }
  out = std::make_pair((*v)[0], (*v)[1]);
}

const std::vector<std::string>& all_lemmas() {
  static const std::vector<std::string> v = {"spectral", "concentration", "tail",
                                             "linearization", "truncation"};
  return v;
}

LemmaReport run_lemma(const std::string& id, const VerifyOptions& o) {
  if (id == "spectral") return verify_spectral(o);
  if (id == "concentration") return verify_concentration(o);
  if (id == "tail") return verify_tail(o);
  if (id == "linearization") return verify_linearization(o);
  if (id == "truncation") return verify_truncation(o);
  throw ConfigError("unknown lemma '" + id + "'");
}

std::string fmt(double v) { return std::isfinite(v) ? format_double(v) : ""; }

struct Cell {
  int m = 0;
  std::uint64_t seed = 0;
};

struct CellOutput {
  Json report;
  std::vector<std::string> row;
  bool pass = true;
  // Generalization curve of a train cell (empty otherwise).
  GapCurve gap;
  bool has_gap = false;
  double fit_error = 0.0;
};

std::vector<std::string> blank_row(const std::string& hash, const std::string& kind,
                                   const Cell& c) {
  std::vector<std::string> r(summary_header().size());
  r[0] = std::to_string(kSummarySchemaVersion);
  r[1] = hash;
  r[2] = kVersion;
  r[3] = kind;
  r[4] = std::to_string(c.m);
  r[5] = std::to_string(c.seed);
  return r;
}

enum Col {
  kEta = 6,
  kK,
  kInitialLoss,
  kFinalLoss,
  kHoldoutLoss,
  kGapExponent,
  kDistW,
  kDistA,
  kFitError,
  kPass
};

double student_rho(const ExperimentConfig& cfg, const StableLinearSystem& teacher, int m) {
  if (cfg.student.rho_mode == "practical") return cfg.student.rho;
  return theory_schedule(cfg.schedule.epsilon, cfg.schedule.delta, cfg.schedule.rho_0,
                         teacher.c_rho, m)
      .rho;
}

StableLinearSystem make_teacher(const ExperimentConfig& cfg) {
  const TeacherConfig& t = cfg.teacher;
  return random_stable_system(t.d_p, t.d, t.d_y, t.rho_C, t.seed);
}

CellOutput run_train_cell(const ExperimentConfig& cfg, const std::string& hash,
                          const Cell& cell, const std::string& dir) {
  CellOutput out;
  SequenceDataset train, holdout;
  const bool use_holdout = cfg.data.holdout_K > 0;
  if (!cfg.data.path.empty()) {
    train = load_dataset(cfg.data.path);
  } else {
    const StableLinearSystem teacher = make_teacher(cfg);
    train = generate_dataset(teacher, parse_input_spec(cfg.data.input), cfg.data.noise_sigma,
                             cfg.data.T, cfg.data.K, subseed(cell.seed, 1));
  }
  if (use_holdout) {
    holdout = generate_dataset(train.system, train.input_spec, train.noise_sigma, train.T,
                               cfg.data.holdout_K, subseed(cell.seed, 2));
  }
  const Loss loss = make_loss(cfg.loss, cfg.huber_delta);
  const double rho = student_rho(cfg, train.system, cell.m);
  const StudentRNN init = init_student(cell.m, train.d(), train.d_y(), rho,
                                       subseed(cell.seed, 3),
                                       parse_init_law(cfg.student.init_law));
  Json rep;
  rep["kind"] = "train";
  rep["m"] = cell.m;
  rep["seed"] = cell.seed;
  rep["rho"] = rho;
  rep["teacher_hash"] = train.teacher_hash;
  rep["train_hash"] = dataset_hash(train);

  double eta = 0.0;
  if (cfg.train.eta) {
    eta = *cfg.train.eta;
  } else {
    if (cfg.train.eta_grid.empty()) throw ConfigError("train: give eta or eta_grid");
    std::vector<double> grid;
    for (double g : cfg.train.eta_grid) grid.push_back(g / cell.m);
    const EtaCalibration cal = calibrate_eta(init, train, loss, grid, cfg.train.calibration_K,
                                             subseed(cell.seed, 5), cfg.train.window);
    Json cj = Json::array();
    for (const EtaCandidate& c : cal.grid) {
      cj.push_back({{"eta", c.eta},
                    {"final_running_loss", fmt(c.final_running_loss)},
                    {"diverged", c.diverged}});
    }
    rep["eta_calibration"] = {{"grid", cj}, {"chosen", cal.chosen}, {"K", cfg.train.calibration_K}};
    if (!(cal.chosen > 0.0)) throw EvaluationError("eta calibration: every candidate diverged");
    eta = cal.chosen;
  }
  rep["eta"] = eta;

  StudentRNN rnn = init;
  TrainOptions opts;
  opts.eta = eta;
  opts.K = cfg.train.K;
  opts.seed = subseed(cell.seed, 4);
  opts.checkpoint_every = cfg.train.checkpoint_every;
  opts.out_dir = dir;
  opts.config_hash = hash;
  opts.holdout = use_holdout ? &holdout : nullptr;
  const double initial = dataset_loss(init, train, loss);
  const TrainTrace trace = sgd_train(rnn, train, loss, opts);
  if (!dir.empty()) write_trace(trace, dir + "/trace.jsonl");

  const long steps = static_cast<long>(trace.steps.size());
  const double final_avg = running_average(trace, steps, cfg.train.window);
  const double final_train = dataset_loss(rnn, train, loss);
  rep["initial_loss"] = initial;
  rep["final_running_loss"] = final_avg;
  rep["final_train_loss"] = final_train;
  rep["averaged_loss"] = averaged_loss(trace);
  rep["aborted"] = trace.aborted;
  if (trace.aborted) rep["abort_reason"] = trace.abort_reason;
  rep["dist_W"] = rnn.dW_frob();
  rep["dist_A"] = rnn.dA_frob();

  Json asserts = Json::object();
  bool pass = !trace.aborted;
  if (cfg.asserts.loss_ratio) {
    const bool ok = final_avg <= *cfg.asserts.loss_ratio * initial;
    asserts["loss_ratio"] = {{"value", final_avg / initial},
                             {"limit", *cfg.asserts.loss_ratio},
                             {"pass", ok}};
    pass = pass && ok;
  }
  double holdout_final = std::nan("");
  if (use_holdout) {
    holdout_final = dataset_loss(rnn, holdout, loss);
    rep["final_holdout_loss"] = holdout_final;
    rep["holdout_hash"] = dataset_hash(holdout);
    if (cfg.asserts.holdout_ratio) {
      const bool ok = holdout_final <= *cfg.asserts.holdout_ratio * final_train;
      asserts["holdout_ratio"] = {{"value", holdout_final / final_train},
                                  {"limit", *cfg.asserts.holdout_ratio},
                                  {"pass", ok}};
      pass = pass && ok;
    }
    if (!trace.aborted && steps >= 2) {
      out.gap = generalization_gap(trace, train, holdout, doubling_K_grid(16, steps));
      out.has_gap = true;
      rep["generalization"] = to_json(out.gap);
    }
  }
  rep["assertions"] = asserts;
  rep["pass"] = pass;

  out.row = blank_row(hash, "train", cell);
  out.row[kEta] = fmt(eta);
  out.row[kK] = std::to_string(steps);
  out.row[kInitialLoss] = fmt(initial);
  out.row[kFinalLoss] = fmt(final_avg);
  out.row[kHoldoutLoss] = fmt(holdout_final);
  out.row[kGapExponent] = out.has_gap ? fmt(out.gap.exponent) : "";
  out.row[kDistW] = fmt(rnn.dW_frob());
  out.row[kDistA] = fmt(rnn.dA_frob());
  out.row[kPass] = pass ? "1" : "0";
  out.report = std::move(rep);
  out.pass = pass;
  return out;
}

CellOutput run_existence_cell(const ExperimentConfig& cfg, const std::string& hash,
                              const Cell& cell, const std::string& dir) {
  CellOutput out;
  const StableLinearSystem teacher = make_teacher(cfg);
  const double rho = student_rho(cfg, teacher, cell.m);
  const StudentRNN init = init_student(cell.m, teacher.d(), teacher.d_y(), rho,
                                       subseed(cell.seed, 3),
                                       parse_init_law(cfg.student.init_law));
  ScheduleInputs in;
  in.epsilon = cfg.schedule.epsilon;
  in.delta = cfg.schedule.delta;
  in.rho_0 = cfg.schedule.rho_0;
  in.c_rho = teacher.c_rho;
  in.m = cell.m;
  in.l0 = make_loss(cfg.loss, cfg.huber_delta).l0(teacher.d_y());
  const TheorySchedule s = theory_schedule(in);
  const int T_max = cfg.schedule.T_max.value_or(s.T_max);
  const ComparatorParams comp =
      construct_comparator(init.W0, init.A0, init.B, teacher, rho, T_max, s.b);
  Json rep;
  rep["kind"] = "existence";
  rep["m"] = cell.m;
  rep["seed"] = cell.seed;
  rep["rho"] = rho;
  rep["teacher_hash"] = system_hash(teacher);
  rep["comparator"] = to_json(comp);
  if (cfg.data.K > 0) {
    const SequenceDataset data =
        generate_dataset(teacher, parse_input_spec(cfg.data.input), cfg.data.noise_sigma,
                         cfg.data.T, cfg.data.K, subseed(cell.seed, 1));
    rep["evaluation"] = to_json(verify_existence(comp, init.B, teacher, data,
                                                 make_loss(cfg.loss, cfg.huber_delta)));
  }
  const bool dist_ok = comp.dist_W <= comp.distance_bound && comp.dist_A <= comp.distance_bound;
  const bool pass = !cfg.asserts.distances || dist_ok;
  rep["distances_ok"] = dist_ok;
  rep["pass"] = pass;
  if (!dir.empty()) {
    if (cfg.output.comparators) {
      save_comparator(comp, init, dir);
    } else {
      ensure_dir(dir);
      write_file(dir + "/comparator.json", to_json(comp).dump(2) + "\n");
    }
  }

  out.row = blank_row(hash, "existence", cell);
  out.row[kDistW] = fmt(comp.dist_W);
  out.row[kDistA] = fmt(comp.dist_A);
  out.row[kFitError] = fmt(comp.fit_error);
  out.row[kPass] = pass ? "1" : "0";
  out.fit_error = comp.fit_error;
  out.report = std::move(rep);
  out.pass = pass;
  return out;
}

std::string cell_dir(const std::string& out_dir, const Cell& c) {
  if (out_dir.empty()) return "";
  return out_dir + "/cells/m" + std::to_string(c.m) + "_s" + std::to_string(c.seed);
}

// Runs every (m, seed) cell and merges the results in grid order.
ExperimentResult run_cells(const ExperimentConfig& cfg, const std::string& hash,
                           const std::string& cell_kind, const std::vector<int>& m_grid,
                           const std::vector<std::uint64_t>& seeds,
                           const std::string& out_dir) {
  std::vector<Cell> cells;
  for (int m : m_grid) {
    for (std::uint64_t s : seeds) cells.push_back({m, s});
  }
  std::vector<CellOutput> outs(cells.size());
  parallel_for(static_cast<int>(cells.size()), [&](int i) {
    const Cell& c = cells[static_cast<std::size_t>(i)];
    const std::string dir = cell_dir(out_dir, c);
    if (!dir.empty()) ensure_dir(dir);
    CellOutput o = cell_kind == "train" ? run_train_cell(cfg, hash, c, dir)
                                        : run_existence_cell(cfg, hash, c, dir);
    if (!dir.empty()) write_file(dir + "/report.json", o.report.dump(2) + "\n");
    outs[static_cast<std::size_t>(i)] = std::move(o);
  });

  ExperimentResult res;
  Json cj = Json::array();
  for (const CellOutput& o : outs) {
    cj.push_back(o.report);
    res.summary_rows.push_back(o.row);
    res.pass = res.pass && o.pass;
  }
  res.report["cells"] = std::move(cj);

  // Aggregates over seeds for each m.
  if (cell_kind == "existence" && !cells.empty()) {
    std::vector<double> xs, ys;
    Json per_m = Json::array();
    bool monotone = true;
    double prev = std::numeric_limits<double>::infinity();
    for (int m : m_grid) {
      double lsum = 0.0;
      int n = 0;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].m == m) {
          lsum += std::log(outs[i].fit_error);
          ++n;
        }
      }
      const double gmean = std::exp(lsum / n);
      monotone = monotone && gmean < prev;
      prev = gmean;
      xs.push_back(m);
      ys.push_back(gmean);
      per_m.push_back({{"m", m}, {"fit_error_geometric_mean", gmean}});
    }
    Json agg = {{"per_m", per_m}, {"fit_error_monotone", monotone}};
    if (m_grid.size() >= 2) {
      const double slope = fit_loglog_slope(xs, ys);
      agg["fit_error_slope"] = slope;
      if (cfg.asserts.fit_slope) {
        const bool ok = slope >= cfg.asserts.fit_slope->first &&
                        slope <= cfg.asserts.fit_slope->second;
        agg["fit_slope_pass"] = ok;
        res.pass = res.pass && ok;
      }
    }
    res.report["aggregate"] = std::move(agg);
  }
  if (cell_kind == "train" && !cells.empty() && outs.front().has_gap) {
    Json per_m = Json::array();
    for (int m : m_grid) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].m == m && outs[i].has_gap) idx.push_back(i);
      }
      if (idx.empty()) continue;
      GapCurve rms;
      rms.K = outs[idx[0]].gap.K;
      for (std::size_t q = 0; q < rms.K.size(); ++q) {
        double s2 = 0.0;
        for (std::size_t i : idx) s2 += outs[i].gap.gap[q] * outs[i].gap.gap[q];
        rms.gap.push_back(std::sqrt(s2 / static_cast<double>(idx.size())));
      }
      std::vector<double> xs(rms.K.begin(), rms.K.end());
      rms.exponent = fit_loglog_slope(xs, rms.gap);
      Json g = to_json(rms);
      g["m"] = m;
      if (cfg.asserts.gap_exponent) {
        const bool ok = rms.exponent >= cfg.asserts.gap_exponent->first &&
                        rms.exponent <= cfg.asserts.gap_exponent->second;
        g["exponent_pass"] = ok;
        res.pass = res.pass && ok;
      }
      per_m.push_back(std::move(g));
    }
    res.report["generalization_rms"] = std::move(per_m);
  }
  return res;
}

ExperimentResult run_verify(const ExperimentConfig& cfg) {
  ExperimentResult res;
  std::vector<std::string> ids;
  for (const std::string& id : cfg.lemmas) {
    if (id == "all") {
      ids.insert(ids.end(), all_lemmas().begin(), all_lemmas().end());
    } else {
      ids.push_back(id);
    }
  }
  VerifyOptions o = cfg.verify;
  o.seed = cfg.seed;
  Json reports = Json::array();
  bool pass = true;
  for (const std::string& id : ids) {
    const LemmaReport r = run_lemma(id, o);
    reports.push_back(to_json(r));
    pass = pass && r.pass;
    Cell c{o.m, o.seed};
    std::vector<std::string> row = blank_row("", "verify:" + id, c);
    row[kPass] = r.pass ? "1" : "0";
    res.summary_rows.push_back(std::move(row));
  }
  res.report["lemmas"] = std::move(reports);
  res.pass = cfg.asserts.lemmas ? pass : true;
  res.report["all_lemmas_pass"] = pass;
  return res;
}

}  // namespace

ExperimentKind parse_experiment_kind(const std::string& name) {
  if (name == "train") return ExperimentKind::kTrain;
  if (name == "verify") return ExperimentKind::kVerify;
  if (name == "existence") return ExperimentKind::kExistence;
  if (name == "sweep") return ExperimentKind::kSweep;
  throw ConfigError("unknown experiment kind '" + name + "'");
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kTrain: return "train";
    case ExperimentKind::kVerify: return "verify";
    case ExperimentKind::kExistence: return "existence";
    case ExperimentKind::kSweep: return "sweep";
  }
  return "train";
}

ExperimentConfig parse_config(const Json& j) {
  ExperimentConfig c;
  Section top(j, "config");
  std::string kind = "train";
  top.get("kind", kind);
  c.kind = parse_experiment_kind(kind);
  top.get("seed", c.seed);
  if (top.has("teacher")) {
    Section s(top.raw("teacher"), "teacher");
    s.get("d_p", c.teacher.d_p);
    s.get("d", c.teacher.d);
    s.get("d_y", c.teacher.d_y);
    s.get("rho_C", c.teacher.rho_C);
    s.get("seed", c.teacher.seed);
    s.finish();
  }
  if (top.has("data")) {
    Section s(top.raw("data"), "data");
    s.get("path", c.data.path);
    s.get("T", c.data.T);
    s.get("K", c.data.K);
    s.get("noise_sigma", c.data.noise_sigma);
    s.get("input", c.data.input);
    s.get("holdout_K", c.data.holdout_K);
    s.finish();
    parse_input_spec(c.data.input);
  }
  if (top.has("student")) {
    Section s(top.raw("student"), "student");
    s.get("m", c.student.m);
    s.get("rho_mode", c.student.rho_mode);
    s.get("rho", c.student.rho);
    s.get("init_law", c.student.init_law);
    s.finish();
    if (c.student.rho_mode != "practical" && c.student.rho_mode != "theory") {
      throw ConfigError("student.rho_mode must be practical or theory");
    }
    parse_init_law(c.student.init_law);
  }
  if (top.has("loss")) {
    Section s(top.raw("loss"), "loss");
    s.get("kind", c.loss);
    s.get("delta", c.huber_delta);
    s.finish();
  }
  make_loss(c.loss, c.huber_delta);
  if (top.has("schedule")) {
    Section s(top.raw("schedule"), "schedule");
    s.get("epsilon", c.schedule.epsilon);
    s.get("delta", c.schedule.delta);
    s.get("rho_0", c.schedule.rho_0);
    s.get("T_max", c.schedule.T_max);
    s.finish();
  }
  if (top.has("train")) {
    Section s(top.raw("train"), "train");
    s.get("eta", c.train.eta);
    s.get("eta_grid", c.train.eta_grid);
    s.get("calibration_K", c.train.calibration_K);
    s.get("K", c.train.K);
    s.get("window", c.train.window);
    s.get("checkpoint_every", c.train.checkpoint_every);
    s.finish();
  }
  c.lemmas = {"all"};
  if (top.has("verify")) {
    Section s(top.raw("verify"), "verify");
    VerifyOptions& o = c.verify;
    s.get("lemmas", c.lemmas);
    s.get("m", o.m);
    s.get("trials", o.trials);
    s.get("threshold", o.threshold);
    s.get("rho_0", o.rho_0);
    s.get("epsilon", o.epsilon);
    s.get("delta", o.delta);
    s.get("c_rho", o.c_rho);
    s.get("rho", o.rho);
    s.get("d", o.d);
    s.get("d_y", o.d_y);
    s.get("tau", o.tau);
    s.get("T", o.T);
    s.get("w0_scale", o.w0_scale);
    s.get("q_scale", o.q_scale);
    s.get("tau_grid", o.tau_grid);
    s.get("omega_grid", o.omega_grid);
    s.get("displacement", o.displacement);
    s.get("lanczos_iterations", o.lanczos.max_iterations);
    s.get("lanczos_tolerance", o.lanczos.tolerance);
    s.get("single_precision_operator", o.single_precision_operator);
    s.finish();
    for (const std::string& id : c.lemmas) {
      if (id != "all" &&
          std::find(all_lemmas().begin(), all_lemmas().end(), id) == all_lemmas().end()) {
        throw ConfigError("verify.lemmas: unknown lemma '" + id + "'");
      }
    }
  }
  if (top.has("sweep")) {
    Section s(top.raw("sweep"), "sweep");
    s.get("cell_kind", c.sweep.cell_kind);
    s.get("m_grid", c.sweep.m_grid);
    s.get("seeds", c.sweep.seeds);
    s.finish();
    if (c.sweep.cell_kind != "train" && c.sweep.cell_kind != "existence") {
      throw ConfigError("sweep.cell_kind must be train or existence");
    }
  }
  if (top.has("output")) {
    Section s(top.raw("output"), "output");
    s.get("comparators", c.output.comparators);
    s.finish();
  }
  if (top.has("assert")) {
    Section s(top.raw("assert"), "assert");
    s.get("loss_ratio", c.asserts.loss_ratio);
    s.get("holdout_ratio", c.asserts.holdout_ratio);
    get_range(s, "gap_exponent", c.asserts.gap_exponent);
    get_range(s, "fit_slope", c.asserts.fit_slope);
    s.get("distances", c.asserts.distances);
    s.get("lemmas", c.asserts.lemmas);
    s.finish();
  }
  top.finish();
  c.source = j;
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j);
}

std::string config_hash(const ExperimentConfig& cfg) {
  Json j = cfg.source.is_object() ? cfg.source : Json::object();
  j["seed"] = cfg.seed;
  Fnv1a h;
  h.update(j.dump());
  return h.hex();
}

std::vector<std::string> summary_header() {
  return {"schema_version", "config_hash", "code_version", "kind",      "m",
          "seed",           "eta",         "K",            "initial_loss",
          "final_loss",     "holdout_loss", "gap_exponent", "dist_W",   "dist_A",
          "fit_error",      "pass"};
}

std::string summary_csv(const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream os;
  const std::vector<std::string> head = summary_header();
  for (std::size_t i = 0; i < head.size(); ++i) os << (i ? "," : "") << head[i];
  os << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << "\n";
  }
  return os.str();
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
  const std::string hash = config_hash(cfg);
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    Json copy = cfg.source.is_object() ? cfg.source : Json::object();
    copy["seed"] = cfg.seed;
    write_file(out_dir + "/config.json", copy.dump(2) + "\n");
  }
  ExperimentResult res;
  switch (cfg.kind) {
    case ExperimentKind::kTrain: {
      CellOutput o = run_train_cell(cfg, hash, {cfg.student.m, cfg.seed}, out_dir);
      res.report = std::move(o.report);
      res.summary_rows.push_back(std::move(o.row));
      res.pass = o.pass;
      if (o.has_gap && cfg.asserts.gap_exponent) {
        const bool ok = o.gap.exponent >= cfg.asserts.gap_exponent->first &&
                        o.gap.exponent <= cfg.asserts.gap_exponent->second;
        res.report["generalization"]["exponent_pass"] = ok;
        res.pass = res.pass && ok;
      }
      break;
    }
    case ExperimentKind::kVerify:
      res = run_verify(cfg);
      for (auto& row : res.summary_rows) row[1] = hash;
      break;
    case ExperimentKind::kExistence: {
      const std::vector<int> ms =
          cfg.sweep.m_grid.empty() ? std::vector<int>{cfg.student.m} : cfg.sweep.m_grid;
      const std::vector<std::uint64_t> seeds =
          cfg.sweep.seeds.empty() ? std::vector<std::uint64_t>{cfg.seed} : cfg.sweep.seeds;
      res = run_cells(cfg, hash, "existence", ms, seeds, out_dir);
      break;
    }
    case ExperimentKind::kSweep:
      res = run_cells(cfg, hash, cfg.sweep.cell_kind, cfg.sweep.m_grid, cfg.sweep.seeds,
                      out_dir);
      break;
  }
  res.report["schema_version"] = 1;
  res.report["kind"] = to_string(cfg.kind);
  res.report["config_hash"] = hash;
  res.report["seed"] = cfg.seed;
  res.report["version"] = kVersion;
  res.report["pass"] = res.pass;
  if (!out_dir.empty()) {
    write_file(out_dir + "/report.json", res.report.dump(2) + "\n");
    write_file(out_dir + "/summary.csv", summary_csv(res.summary_rows));
  }
  return res;
}

std::vector<long> doubling_K_grid(long lo, long hi) {
  std::vector<long> g;
  if (hi < 1) return g;
  lo = std::max(1L, std::min(lo, hi));
  for (long k = lo; k < hi; k *= 2) g.push_back(k);
  g.push_back(hi);
  return g;
}

GapCurve generalization_gap(const TrainTrace& trace, const SequenceDataset& train,
                            const SequenceDataset& holdout, const std::vector<long>& K_grid) {
  if (train.teacher_hash != holdout.teacher_hash) {
    throw EvaluationError("generalization_gap: held-out set comes from a different teacher");
  }
  if (trace.teacher_hash != train.teacher_hash || trace.train_hash != dataset_hash(train) ||
      trace.holdout_hash != dataset_hash(holdout)) {
    throw EvaluationError("generalization_gap: trace was recorded on other datasets");
  }
  GapCurve g;
  const long n = static_cast<long>(trace.steps.size());
  double acc = 0.0;
  long k = 0;
  for (long K : K_grid) {
    if (K < 1 || K > n || K < k) {
      throw ParameterError("generalization_gap: K grid must be ascending within the trace");
    }
    for (; k < K; ++k) {
      const TrainStep& st = trace.steps[static_cast<std::size_t>(k)];
      if (std::isnan(st.holdout_loss)) {
        throw EvaluationError("generalization_gap: trace has no held-out losses");
      }
      acc += st.loss - st.holdout_loss;
    }
    g.K.push_back(K);
    g.gap.push_back(std::abs(acc / static_cast<double>(K)));
  }
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < g.K.size(); ++i) {
    if (g.gap[i] > 0.0) {
      xs.push_back(static_cast<double>(g.K[i]));
      ys.push_back(g.gap[i]);
    }
  }
  g.exponent = xs.size() >= 2 ? fit_loglog_slope(xs, ys) : 0.0;
  return g;
}

Json to_json(const GapCurve& g) {
  return {{"K", g.K}, {"gap", g.gap}, {"exponent", g.exponent}};
}

}  // namespace sysid
