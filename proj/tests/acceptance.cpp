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
// Acceptance runner: one numbered criterion per invocation argument (all by
// default), one PASS/FAIL line each, exit code = number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "audio_io.hpp"
#include "errors.hpp"
#include "frontend.hpp"
#include "hash.hpp"
#include "lp_analysis.hpp"
#include "oracles.hpp"
#include "parallel.hpp"
#include "pipeline.hpp"
#include "readout.hpp"
#include "reservoir.hpp"
#include "rng.hpp"

using namespace lser;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

fs::path work_dir(const std::string& name) {
  const fs::path dir = fs::path("lser-acceptance") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::file_not_found, "cannot open " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

PipelineConfig desk_config(const fs::path& corpus, const fs::path& cache,
                           const fs::path& out) {
  PipelineConfig config = default_config();
  config.corpus_dir = corpus.string();
  config.cache_dir = cache.string();
  config.output_dir = out.string();
  config.reservoir.dt_ms = 1.0;  // fast mode
  config.jobs = 0;
  return config;
}

// 1. Levinson-Durbin equals a dense Toeplitz solve on 100 random AR(16)
//    instances to 1e-8 max-abs coefficient error.
Outcome criterion_lp_oracle() {
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto a_true =
        test::random_stable_ar(16, 40000 + static_cast<std::uint64_t>(trial));
    Rng rng(50000 + static_cast<std::uint64_t>(trial));
    std::vector<double> noise(2048);
    for (auto& v : noise) v = rng.uniform(-1.0, 1.0);
    const auto x = test::synthesize_all_pole(noise, a_true);
    const auto r = autocorrelation(x, 16);
    const LpCoefficients lp = levinson_durbin(r, 16);
    const auto dense = test::toeplitz_lp_solve(r, 16);
    for (int i = 0; i < 16; ++i) {
      worst = std::max(worst, std::abs(lp.a[static_cast<std::size_t>(i)] -
                                       dense[static_cast<std::size_t>(i)]));
    }
  }
  return {worst < 1e-8, fmt("max |a - a_dense| = %.3g (tol 1e-8)", worst)};
}

// 2. Residual extraction then all-pole synthesis reconstructs interior
//    samples of 20 random utterance-length signals to 1e-6 relative RMS.
Outcome criterion_round_trip() {
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(61000 + static_cast<std::uint64_t>(trial));
    AudioSignal sig;
    sig.sample_rate = 16000;
    sig.samples.resize(16000);
    const auto shape =
        test::random_stable_ar(12, 62000 + static_cast<std::uint64_t>(trial));
    std::vector<double> noise(16000);
    for (auto& v : noise) v = rng.uniform(-1.0, 1.0);
    const auto shaped = test::synthesize_all_pole(noise, shape);
    for (std::size_t i = 0; i < sig.samples.size(); ++i) {
      const double env =
          0.2 + 0.8 * std::abs(std::sin(2.0 * M_PI * i / 5000.0));
      sig.samples[i] = 0.1 * env * shaped[i];
    }

    const FrameSequence frames = frame_signal(sig, 30.0, 5.0);
    std::vector<LpCoefficients> analyses;
    for (const auto& frame : frames.frames) {
      analyses.push_back(analyze_frame(frame, 16));
    }
    const ResidualSignal res =
        residual(sig, analyses, frames.hop, frames.window_length);

    std::vector<double> rebuilt(res.samples.size(), 0.0);
    for (std::size_t n = 0; n < rebuilt.size(); ++n) {
      const auto k = static_cast<std::size_t>(analysis_index_for_segment(
          static_cast<long>(n) / frames.hop, frames.window_length, frames.hop,
          analyses.size()));
      double acc = res.samples[n];
      const auto& a = analyses[k].a;
      for (std::size_t i = 1; i <= a.size(); ++i) {
        if (n >= i) acc += a[i - 1] * rebuilt[n - i];
      }
      rebuilt[n] = acc;
    }
    double err = 0.0, ref = 0.0;
    for (std::size_t n = 480; n < rebuilt.size(); ++n) {
      err += (rebuilt[n] - sig.samples[n]) * (rebuilt[n] - sig.samples[n]);
      ref += sig.samples[n] * sig.samples[n];
    }
    worst = std::max(worst, std::sqrt(err / ref));
  }
  return {worst < 1e-6, fmt("max interior relative RMS = %.3g (tol 1e-6)", worst)};
}

// 3. All 77 gammatone channels peak within 2% of their center frequency and
//    within +-0.5 dB of unit gain (FFT oracle).
Outcome criterion_filterbank() {
  const double fs = 16000.0;
  const ErbScaleGrid grid = make_erb_grid(77, 50.0, 7500.0, fs);
  const GammatoneFilterbank bank(grid, fs);
  const std::size_t fft_size = 1 << 16;
  std::vector<double> impulse(fft_size, 0.0);
  impulse[0] = 1.0;

  double worst_freq = 0.0, worst_gain = 0.0;
  std::vector<double> freq_err(77), gain_err(77);
  parallel_for(77, 0, [&](std::size_t ch) {
    const double cf = grid.center_frequencies[ch];
    const auto response = bank.filter_channel(impulse, static_cast<int>(ch));
    const auto mag = test::fft_magnitude(response, fft_size);
    std::size_t best = 0;
    for (std::size_t i = 1; i < fft_size / 2; ++i) {
      if (mag[i] > mag[best]) best = i;
    }
    const double peak_hz = static_cast<double>(best) * fs / static_cast<double>(fft_size);
    freq_err[ch] = std::abs(peak_hz - cf) / cf;
    gain_err[ch] = std::abs(20.0 * std::log10(mag[best]));
  });
  for (int ch = 0; ch < 77; ++ch) {
    worst_freq = std::max(worst_freq, freq_err[static_cast<std::size_t>(ch)]);
    worst_gain = std::max(worst_gain, gain_err[static_cast<std::size_t>(ch)]);
  }
  return {worst_freq <= 0.02 && worst_gain <= 0.5,
          fmt("peak offset max %.3f%% (tol 2%%), gain max %.3f dB (tol 0.5)",
              100.0 * worst_freq, worst_gain)};
}

// 4. Over 50 seeded builds, the mean synapse count sits within 3 standard
//    errors of the closed-form expectation; no self-connections; all initial
//    conductances inside [0, g_max].
Outcome criterion_topology() {
  ReservoirConfig config;
  config.rng_seed = 7000;

  // Closed-form expectation and its per-build variance.
  ReservoirTopology probe = build_topology(config);  // positions only
  const int n = config.neuron_count();
  double expectation = 0.0, variance = 0.0;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a == b) continue;
      const double p = connection_probability(
          probe.positions[static_cast<std::size_t>(a)],
          probe.positions[static_cast<std::size_t>(b)], config.connection_c,
          config.lambda);
      expectation += p;
      variance += p * (1.0 - p);
    }
  }

  double mean_count = 0.0;
  bool structure_ok = true;
  for (int build = 0; build < 50; ++build) {
    ReservoirConfig seeded = config;
    seeded.rng_seed = 7000 + static_cast<std::uint64_t>(build);
    const ReservoirTopology topo = build_topology(seeded);
    mean_count += static_cast<double>(topo.synapse_count());
    for (std::size_t s = 0; s < topo.synapse_count(); ++s) {
      if (topo.pre[s] == topo.post[s]) structure_ok = false;
      if (topo.g_init[s] < 0.0 || topo.g_init[s] > config.g_max) {
        structure_ok = false;
      }
    }
  }
  mean_count /= 50.0;
  const double se = std::sqrt(variance / 50.0);
  const double deviation = std::abs(mean_count - expectation);
  return {structure_ok && deviation <= 3.0 * se,
          fmt("mean count %.1f vs expected %.1f (|dev| %.1f <= 3SE %.1f), "
              "structure %s",
              mean_count, expectation, deviation, 3.0 * se,
              structure_ok ? "ok" : "violated")};
}

// 5. Simulated LIF rate under constant drive within 2% of the closed form
//    at dt = 0.1 ms across 10 drive levels.
Outcome criterion_lif_rate() {
  const LifParams params;
  const double dt = 0.1;
  double worst = 0.0;
  for (int level = 0; level < 10; ++level) {
    const double drive = 22.0 + 2.0 * level;
    LifNeuronState state{params.v_rest_mv, -1e300};
    long spikes = 0;
    const long steps = 100000;  // 10 s
    for (long i = 0; i < steps; ++i) {
      if (lif_step(state, drive, static_cast<double>(i) * dt, dt, params)) {
        ++spikes;
      }
    }
    const double simulated = static_cast<double>(spikes) / 10.0;
    const double isi =
        params.refractory_ms +
        params.tau_m_ms *
            std::log((drive + params.v_rest_mv - params.v_reset_mv) /
                     (drive + params.v_rest_mv - params.v_thresh_mv));
    const double analytic = 1000.0 / isi;
    worst = std::max(worst, std::abs(simulated - analytic) / analytic);
  }
  return {worst < 0.02, fmt("max rate error %.3f%% (tol 2%%)", 100.0 * worst)};
}

// 6. stdp_delta matches the asymmetric exponential rule to floating point at
//    1000 sampled deltas for both tau ratios; signs and monotonicity hold.
Outcome criterion_stdp() {
  for (double ratio : {5.0, 3.0}) {
    ReservoirConfig config;
    config.tau_minus_ratio = ratio;
    double prev_abs_neg = 1e300, prev_abs_pos = 1e300;
    for (int i = 0; i < 1000; ++i) {
      const double magnitude = 0.05 + 0.12 * i;  // up to 120 ms
      const double delta = (i % 2 == 0) ? -magnitude : magnitude;
      const double got = stdp_delta(delta, config);
      const double expected =
          delta < 0.0
              ? config.a_plus * std::exp(delta / config.tau_plus_ms)
              : -config.a_minus * std::exp(-delta / config.tau_minus_ms());
      if (std::abs(got - expected) > 1e-15 * std::abs(expected)) {
        return {false, fmt("mismatch at delta %.3f ms (ratio %.0f)", delta, ratio)};
      }
      if (delta < 0.0) {
        if (!(got > 0.0) || !(std::abs(got) < prev_abs_neg)) {
          return {false, fmt("sign/monotonicity broken at delta %.3f", delta)};
        }
        prev_abs_neg = std::abs(got);
      } else {
        if (!(got < 0.0) || !(std::abs(got) < prev_abs_pos)) {
          return {false, fmt("sign/monotonicity broken at delta %.3f", delta)};
        }
        prev_abs_pos = std::abs(got);
      }
    }
  }
  return {true, "exact at 1000 deltas for ratios 5 and 3, signs and decay ok"};
}

std::string report_without_timestamp(const fs::path& path) {
  nlohmann::json j = nlohmann::json::parse(slurp(path));
  j.erase("generated_at");
  return j.dump(2);
}

// 7. Two clean full-pipeline runs on the synthetic corpus produce
//    byte-identical reports (timestamp excluded).
Outcome criterion_determinism() {
  const fs::path corpus = work_dir("c7-corpus");
  make_synthetic_corpus(corpus, 1234, 10);
  std::string first, second;
  for (int round = 0; round < 2; ++round) {
    const std::string tag = round == 0 ? "a" : "b";
    const PipelineConfig config =
        desk_config(corpus, work_dir("c7-cache-" + tag), work_dir("c7-out-" + tag));
    const RunAllResult result = run_all(config);
    (round == 0 ? first : second) =
        report_without_timestamp(result.evaluate.report_json);
  }
  return {!first.empty() && first == second,
          first == second ? "reports byte-identical after timestamp strip"
                          : "reports differ"};
}

// 8. Low-band vs high-band inputs drive dominant layers more than 30 layers
//    apart.
Outcome criterion_tonotopy() {
  ReservoirConfig config;
  config.rng_seed = 1980;
  const ReservoirSimulator sim(config);

  auto band_map = [](int lo, int hi) {
    SpectroTemporalMap map;
    map.n_channels = 77;
    map.n_frames = 100;
    map.frame_hop_ms = 5.0;
    map.log_floor_db = -80.0;
    map.grid = make_erb_grid(77, 50.0, 7500.0, 16000.0);
    map.values.assign(77 * 100, -80.0);
    for (int j = lo; j <= hi; ++j) {
      for (int t = 0; t < 100; ++t) {
        map.at(j, t) = (t % 4 == 0) ? -80.0 : 0.0;
      }
    }
    return map;
  };
  auto argmax_layer = [](const LiquidState& state) {
    int best_layer = 0;
    double best = -1.0;
    for (int layer = 0; layer < 77; ++layer) {
      double acc = 0.0;
      for (int i = 0; i < 9; ++i) {
        acc += state.mean_rates[static_cast<std::size_t>(layer * 9 + i)];
      }
      if (acc > best) {
        best = acc;
        best_layer = layer;
      }
    }
    return best_layer;
  };

  const int low = argmax_layer(sim.run(band_map(0, 10)));
  const int high = argmax_layer(sim.run(band_map(66, 76)));
  return {std::abs(high - low) > 30,
          fmt("dominant layers: low-band %d, high-band %d (need gap > 30)", low,
              high)};
}

// 9. Desk-scale classification: dual accuracy >= 85%, above chance with
//    p < 0.01 under a permutation test, and at least as good as both
//    single-reservoir ablations.
Outcome criterion_classification() {
  const fs::path corpus = work_dir("c9-corpus");
  const fs::path cache = work_dir("c9-cache");
  make_synthetic_corpus(corpus, 1234, 10);

  PipelineConfig config = desk_config(corpus, cache, work_dir("c9-out"));
  const RunAllResult dual = run_all(config);
  const double dual_accuracy = dual.evaluate.report.mean_accuracy;

  PipelineConfig vt_config = config;
  vt_config.mode = ReservoirMode::vocal_tract_only;
  vt_config.output_dir = work_dir("c9-out-vt").string();
  const double vt_accuracy = run_evaluate(vt_config).report.mean_accuracy;

  PipelineConfig src_config = config;
  src_config.mode = ReservoirMode::source_only;
  src_config.output_dir = work_dir("c9-out-src").string();
  const double src_accuracy = run_evaluate(src_config).report.mean_accuracy;

  // Permutation test: shuffled labels, identical protocol.
  const std::vector<UtteranceFeatures> features = load_features(config);
  CrossValidateOptions options;
  options.k_vt = config.k_vt;
  options.k_src = config.k_src;
  options.n_folds = config.n_folds;
  options.test_fraction = config.test_fraction;
  options.seed = config.split_seed;
  options.lda_shrinkage = config.lda_shrinkage;
  options.jobs = 1;

  const int n_permutations = 199;
  std::vector<int> exceed(static_cast<std::size_t>(n_permutations), 0);
  parallel_for(static_cast<std::size_t>(n_permutations), 0, [&](std::size_t p) {
    std::vector<UtteranceFeatures> shuffled = features;
    std::vector<int> labels;
    labels.reserve(shuffled.size());
    for (const auto& f : shuffled) labels.push_back(f.label);
    Rng rng(substream_seed(971, "permutation", p));
    rng.shuffle(labels);
    for (std::size_t i = 0; i < shuffled.size(); ++i) {
      shuffled[i].label = labels[i];
    }
    const EvaluationReport report = cross_validate(shuffled, kNumEmotions, options);
    exceed[p] = report.mean_accuracy >= dual_accuracy ? 1 : 0;
  });
  int exceed_count = 0;
  for (int e : exceed) exceed_count += e;
  const double p_value =
      (1.0 + exceed_count) / static_cast<double>(n_permutations + 1);

  const bool passed = dual_accuracy >= 0.85 && p_value < 0.01 &&
                      dual_accuracy >= vt_accuracy &&
                      dual_accuracy >= src_accuracy;
  return {passed,
          fmt("dual %.2f%% (>= 85%%), vt-only %.2f%%, source-only %.2f%%, "
              "permutation p = %.4f (< 0.01)",
              100.0 * dual_accuracy, 100.0 * vt_accuracy, 100.0 * src_accuracy,
              p_value)};
}

// 10. Perturbing test-fold samples leaves the fitted fold models
//     bit-identical.
Outcome criterion_leakage() {
  Rng rng(5150);
  std::vector<UtteranceFeatures> features;
  for (int label = 0; label < kNumEmotions; ++label) {
    for (int u = 0; u < 10; ++u) {
      UtteranceFeatures f;
      f.label = label;
      f.vt_state.resize(693);
      f.src_state.resize(693);
      for (auto& v : f.vt_state) v = rng.uniform(0.0, 100.0) + 3.0 * label;
      for (auto& v : f.src_state) v = rng.uniform(0.0, 100.0) - 2.0 * label;
      features.push_back(std::move(f));
    }
  }
  std::vector<int> train, test;
  for (int i = 0; i < static_cast<int>(features.size()); ++i) {
    (i % 10 == 7 ? test : train).push_back(i);
  }
  const FoldModels before = fit_fold(features, train, 29, 44, 1e-3);

  auto models_equal = [](const FoldModels& x, const FoldModels& y) {
    auto eq = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
      return a.rows() == b.rows() && a.cols() == b.cols() &&
             std::memcmp(a.data(), b.data(),
                         sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
    };
    return eq(x.pca_vt.components, y.pca_vt.components) &&
           eq(x.pca_vt.mean, y.pca_vt.mean) &&
           eq(x.pca_src.components, y.pca_src.components) &&
           eq(x.pca_src.mean, y.pca_src.mean) && eq(x.lda.means, y.lda.means) &&
           eq(x.lda.weights, y.lda.weights) && eq(x.lda.bias, y.lda.bias);
  };

  // Perturb each test sample individually, then all together.
  for (int i : test) {
    std::vector<UtteranceFeatures> mutated = features;
    for (auto& v : mutated[static_cast<std::size_t>(i)].vt_state) v += 1e6;
    for (auto& v : mutated[static_cast<std::size_t>(i)].src_state) v -= 1e6;
    if (!models_equal(before, fit_fold(mutated, train, 29, 44, 1e-3))) {
      return {false, fmt("models changed when test sample %d moved", i)};
    }
  }
  std::vector<UtteranceFeatures> mutated = features;
  for (int i : test) {
    for (auto& v : mutated[static_cast<std::size_t>(i)].vt_state) v *= -7.0;
  }
  if (!models_equal(before, fit_fold(mutated, train, 29, 44, 1e-3))) {
    return {false, "models changed when every test sample moved"};
  }
  return {true, "fitted models bit-identical under all test-fold perturbations"};
}

// 11. Replication harness: run-all plus the sweep CSV including cell
//     (29, 44) and the k = 0 borders. Uses LSER_EMODB_DIR when provided,
//     otherwise the bundled synthetic corpus. No accuracy threshold.
Outcome criterion_replication() {
  fs::path corpus;
  std::string source_label;
  if (const char* env = std::getenv("LSER_EMODB_DIR"); env && *env) {
    corpus = env;
    source_label = "Emo-DB at " + std::string(env);
  } else {
    corpus = work_dir("c11-corpus");
    make_synthetic_corpus(corpus, 1234, 10);
    source_label = "bundled synthetic corpus (set LSER_EMODB_DIR for Emo-DB)";
  }

  PipelineConfig config =
      desk_config(corpus, work_dir("c11-cache"), work_dir("c11-out"));
  config.sweep_k_vt_min = 29;
  config.sweep_k_vt_max = 29;
  config.sweep_k_src_min = 44;
  config.sweep_k_src_max = 44;
  config.sweep_stride = 1;

  const RunAllResult result = run_all(config);
  const std::vector<SweepCell> grid = run_sweep(config);

  bool has_cell = false, has_vt_border = false, has_src_border = false;
  for (const auto& cell : grid) {
    if (cell.k_vt == 29 && cell.k_src == 44) has_cell = true;
    if (cell.k_src == 0) has_vt_border = true;
    if (cell.k_vt == 0) has_src_border = true;
  }
  const std::string csv = slurp(fs::path(config.output_dir) / "sweep.csv");
  const bool csv_ok = csv.rfind("k_vt,k_src,mean_acc,ci95", 0) == 0 &&
                      csv.find("\n29,44,") != std::string::npos;
  const bool passed = has_cell && has_vt_border && has_src_border && csv_ok;
  return {passed, fmt("%s; accuracy %.2f%% (report only; reference 82.35%%), "
                      "sweep cells %zu incl (29,44) and k=0 borders",
                      source_label.c_str(),
                      100.0 * result.evaluate.report.mean_accuracy, grid.size())};
}

struct Criterion {
  int number;
  const char* name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "lp-oracle-equivalence", criterion_lp_oracle},
      {2, "analysis-synthesis-round-trip", criterion_round_trip},
      {3, "filterbank-fidelity", criterion_filterbank},
      {4, "topology-statistics", criterion_topology},
      {5, "lif-analytic-rate", criterion_lif_rate},
      {6, "stdp-closed-form", criterion_stdp},
      {7, "pipeline-determinism", criterion_determinism},
      {8, "tonotopy", criterion_tonotopy},
      {9, "desk-scale-classification", criterion_classification},
      {10, "leakage-canary", criterion_leakage},
      {11, "replication-harness", criterion_replication},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const Criterion& criterion : criteria()) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), criterion.number) ==
            selected.end()) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("[%s] %2d %s: %s (%.1f s)\n", outcome.passed ? "PASS" : "FAIL",
                criterion.number, criterion.name, outcome.detail.c_str(),
                seconds);
    std::fflush(stdout);
    if (!outcome.passed) ++failures;
  }
  return failures;
}
