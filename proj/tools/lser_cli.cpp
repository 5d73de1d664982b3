// Copyright 2026 the lser authors
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
//
// Command line front-end over the lser C API.

#include <CLI11.hpp>

#include <cstdio>
#include <list>
#include <string>
#include <vector>

#include "lser/lser.h"

namespace {

struct ConfigHandle {
  lser_config* ptr = nullptr;
  ~ConfigHandle() { lser_config_destroy(ptr); }
};

struct ReportHandle {
  lser_report* ptr = nullptr;
  ~ReportHandle() { lser_report_destroy(ptr); }
};

[[noreturn]] void die(lser_status status) {
  std::fprintf(stderr, "error (%s): %s\n", lser_status_name(status),
               lser_last_error_message());
  std::exit(1);
}

void check(lser_status status) {
  if (status != LSER_OK) die(status);
}

// One CLI flag bound to a dotted config key; applied only when given.
struct Override {
  std::string key;
  std::string value;
};

class CommonOptions {
 public:
  void attach(CLI::App* cmd, bool with_corpus = true) {
    cmd->add_option("--config", config_path_, "configuration JSON file");
    auto bind = [this, cmd](const std::string& flag, const std::string& key,
                            const std::string& help) {
      auto* storage = &values_.emplace_back();
      CLI::Option* opt = cmd->add_option(flag, *storage, help);
      bound_.push_back({opt, key, storage});
    };
    if (with_corpus) bind("--corpus", "corpus.dir", "corpus root directory");
    bind("--cache-dir", "cache.dir", "cache directory");
    bind("--out", "output.dir", "output directory");
    bind("--lp-order", "lp.order", "LP analysis order");
    bind("--window-ms", "lp.window_ms", "analysis window (ms)");
    bind("--hop-ms", "lp.hop_ms", "analysis hop (ms)");
    bind("--channels", "frontend.channels", "number of ERB channels");
    bind("--fmin", "frontend.fmin_hz", "lowest center frequency (Hz)");
    bind("--fmax", "frontend.fmax_hz", "highest center frequency (Hz)");
    bind("--log-floor-db", "frontend.log_floor_db", "log compression floor (dB)");
    bind("--seed", "reservoir.seed", "reservoir topology seed");
    bind("--dt-ms", "reservoir.dt_ms", "simulation step (ms); 1.0 is fast mode");
    bind("--tau-minus-ratio-vt", "reservoir.tau_minus_ratio_vt",
         "STDP tau-/tau+ for the vocal tract reservoir");
    bind("--tau-minus-ratio-src", "reservoir.tau_minus_ratio_src",
         "STDP tau-/tau+ for the source reservoir");
    bind("--gmax", "reservoir.g_max", "synaptic conductance ceiling");
    bind("--a-plus", "reservoir.a_plus", "max STDP potentiation");
    bind("--g-in-max", "reservoir.g_in_max", "input drive ceiling (mV)");
    bind("--k-vt", "readout.k_vt", "vocal tract principal components");
    bind("--k-src", "readout.k_src", "source principal components");
    bind("--folds", "readout.folds", "cross-validation folds");
    bind("--test-fraction", "readout.test_fraction", "held-out fraction");
    bind("--split-seed", "readout.split_seed", "cross-validation split seed");
    bind("--stratify", "corpus.stratify", "split stratification: emotion|speaker");
    bind("--jobs", "run.jobs", "worker pool size (0 = hardware)");
    bind("--single-reservoir", "run.reservoirs",
         "ablation: source|vocal_tract (default dual)");
  }

  ConfigHandle build() const {
    ConfigHandle handle;
    if (!config_path_.empty()) {
      check(lser_config_load(config_path_.c_str(), &handle.ptr));
    } else {
      handle.ptr = lser_config_create();
    }
    for (const auto& b : bound_) {
      if (b.option->count() > 0) {
        check(lser_config_set(handle.ptr, b.key.c_str(), b.storage->c_str()));
      }
    }
    return handle;
  }

 private:
  struct Bound {
    CLI::Option* option;
    std::string key;
    std::string* storage;
  };
  std::string config_path_;
  std::list<std::string> values_;  // stable storage for CLI11 bindings
  std::vector<Bound> bound_;
};

void print_stats(const char* stage, const lser_stage_stats& stats) {
  std::printf("%s: %d computed, %d reused, %d failed\n", stage, stats.computed,
              stats.reused, stats.failed);
}

void print_report(const lser_report* report) {
  std::printf("mean accuracy: %.2f%%  (95%% CI half-width %.2f%%)\n",
              100.0 * lser_report_mean_accuracy(report),
              100.0 * lser_report_ci95(report));
  std::printf("report: %s\n", lser_report_json_path(report));
  std::printf("confusion matrix: %s\n",
              lser_report_confusion_csv_path(report));
}

// "--sweep A..BxC..D", e.g. 1..40x1..50.
bool parse_sweep_ranges(const std::string& text, int out[4]) {
  return std::sscanf(text.c_str(), "%d..%dx%d..%d", &out[0], &out[1], &out[2],
                     &out[3]) == 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lser: speech emotion recognition with a dual liquid state machine"};
  app.require_subcommand(1);
  app.set_version_flag("--version", lser_version());

  // init-config
  auto* init = app.add_subcommand(
      "init-config", "write a configuration file with the full defaults");
  std::string init_out = "lser.json";
  init->add_option("-o,--output", init_out, "destination path");
  CommonOptions init_options;
  init_options.attach(init);

  // make-synthetic-corpus
  auto* synth = app.add_subcommand(
      "make-synthetic-corpus",
      "generate the bundled seven-class synthetic test corpus");
  std::string synth_dir;
  std::uint64_t synth_seed = 1234;
  int synth_per_class = 10;
  synth->add_option("--out", synth_dir, "destination directory")->required();
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--per-class", synth_per_class, "utterances per class");

  // pipeline stages
  auto* preprocess = app.add_subcommand(
      "preprocess", "compute and cache both spectro-temporal maps");
  CommonOptions preprocess_options;
  preprocess_options.attach(preprocess);

  auto* simulate = app.add_subcommand(
      "simulate", "run the reservoirs over the cached maps");
  CommonOptions simulate_options;
  simulate_options.attach(simulate);

  auto* evaluate = app.add_subcommand(
      "evaluate", "cross-validate the cached liquid states");
  CommonOptions evaluate_options;
  evaluate_options.attach(evaluate);

  auto* run_all =
      app.add_subcommand("run-all", "preprocess, simulate and evaluate");
  CommonOptions run_all_options;
  run_all_options.attach(run_all);

  auto* sweep = app.add_subcommand(
      "sweep", "cross-validate over a grid of component counts");
  CommonOptions sweep_options;
  sweep_options.attach(sweep);
  std::string sweep_ranges;
  std::string sweep_stride;
  sweep->add_option("--sweep", sweep_ranges,
                    "grid ranges as KVT_MIN..KVT_MAXxKSRC_MIN..KSRC_MAX");
  sweep->add_option("--stride", sweep_stride, "grid stride");

  CLI11_PARSE(app, argc, argv);

  if (init->parsed()) {
    ConfigHandle config = init_options.build();
    check(lser_config_save(config.ptr, init_out.c_str()));
    std::printf("wrote %s\n", init_out.c_str());
    return 0;
  }
  if (synth->parsed()) {
    check(lser_make_synthetic_corpus(synth_dir.c_str(), synth_seed,
                                     synth_per_class));
    std::printf("wrote synthetic corpus to %s\n", synth_dir.c_str());
    return 0;
  }
  if (preprocess->parsed()) {
    ConfigHandle config = preprocess_options.build();
    lser_stage_stats stats{};
    const lser_status st = lser_run_preprocess(config.ptr, &stats);
    print_stats("preprocess", stats);
    if (st != LSER_OK) die(st);
    return 0;
  }
  if (simulate->parsed()) {
    ConfigHandle config = simulate_options.build();
    lser_stage_stats stats{};
    const lser_status st = lser_run_simulate(config.ptr, &stats);
    print_stats("simulate", stats);
    if (st != LSER_OK) die(st);
    return 0;
  }
  if (evaluate->parsed()) {
    ConfigHandle config = evaluate_options.build();
    ReportHandle report;
    check(lser_run_evaluate(config.ptr, &report.ptr));
    print_report(report.ptr);
    return 0;
  }
  if (run_all->parsed()) {
    ConfigHandle config = run_all_options.build();
    ReportHandle report;
    check(lser_run_all(config.ptr, &report.ptr));
    print_report(report.ptr);
    return 0;
  }
  if (sweep->parsed()) {
    ConfigHandle config = sweep_options.build();
    if (!sweep_ranges.empty()) {
      int r[4];
      if (!parse_sweep_ranges(sweep_ranges, r)) {
        std::fprintf(stderr, "error: --sweep expects A..BxC..D\n");
        return 1;
      }
      check(lser_config_set(config.ptr, "sweep.k_vt_min",
                            std::to_string(r[0]).c_str()));
      check(lser_config_set(config.ptr, "sweep.k_vt_max",
                            std::to_string(r[1]).c_str()));
      check(lser_config_set(config.ptr, "sweep.k_src_min",
                            std::to_string(r[2]).c_str()));
      check(lser_config_set(config.ptr, "sweep.k_src_max",
                            std::to_string(r[3]).c_str()));
    }
    if (!sweep_stride.empty()) {
      check(lser_config_set(config.ptr, "sweep.stride", sweep_stride.c_str()));
    }
    check(lser_run_sweep(config.ptr));
    size_t size = 0;
    check(lser_config_get(config.ptr, "output.dir", nullptr, 0, &size));
    std::string out_dir(size, '\0');
    check(lser_config_get(config.ptr, "output.dir", out_dir.data(),
                          out_dir.size(), &size));
    out_dir.resize(size > 0 ? size - 1 : 0);
    std::printf("wrote %s/sweep.csv\n", out_dir.c_str());
    return 0;
  }
  return 0;
}
