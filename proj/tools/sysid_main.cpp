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

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sysid/error.hpp"
#include "sysid/experiment.hpp"

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"System identification with over-parameterized RNNs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", sysid::kVersion);

  std::string config_path, out;
  std::optional<std::uint64_t> seed;
  std::string lemma = "all";
  std::optional<int> m, trials;

  for (const char* name : {"train", "existence", "sweep"}) {
    CLI::App* sub = app.add_subcommand(name, std::string("run a ") + name + " experiment");
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "override the config seed");
  }
  CLI::App* ver = app.add_subcommand("verify", "check the random-matrix bounds");
  ver->add_option("--config", config_path, "experiment config (JSON)");
  ver->add_option("--lemma", lemma, "spectral|concentration|tail|linearization|truncation|all")
      ->check(CLI::IsMember({"spectral", "concentration", "tail", "linearization",
                             "truncation", "all"}));
  ver->add_option("--m", m, "hidden width");
  ver->add_option("--trials", trials, "number of trials");
  ver->add_option("--seed", seed, "base seed");
  ver->add_option("--out", out, "report.json path or output directory");

  CLI11_PARSE(app, argc, argv);
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    sysid::ExperimentConfig cfg;
    if (!config_path.empty()) {
      cfg = sysid::load_config(config_path);
    } else {
      cfg = sysid::parse_config(sysid::Json{{"kind", "verify"}});
    }
    if (sysid::parse_experiment_kind(cmd) != cfg.kind) {
      throw sysid::ConfigError("config kind '" + sysid::to_string(cfg.kind) +
                               "' does not match subcommand '" + cmd + "'");
    }
    if (seed) cfg.seed = *seed;
    std::string out_dir = out;
    std::string report_file;
    if (cmd == "verify") {
      if (ver->count("--lemma") || config_path.empty()) cfg.lemmas = {lemma};
      if (m) cfg.verify.m = *m;
      if (trials) cfg.verify.trials = *trials;
      cfg.asserts.lemmas = true;
      if (ends_with(out, ".json")) {
        report_file = out;
        out_dir.clear();
      }
      // Options given on the command line are part of the run's identity.
      cfg.source["verify_cli"] = {{"lemmas", cfg.lemmas},
                                  {"m", cfg.verify.m},
                                  {"trials", cfg.verify.trials}};
    }
    const sysid::ExperimentResult res = sysid::run_experiment(cfg, out_dir);
    if (!report_file.empty()) {
      sysid::write_file(report_file, res.report.dump(2) + "\n");
    }
    if (out.empty()) std::cout << res.report.dump(2) << "\n";
    std::cerr << cmd << ": " << (res.pass ? "pass" : "FAIL") << "\n";
    return res.pass ? 0 : 1;
  } catch (const sysid::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
