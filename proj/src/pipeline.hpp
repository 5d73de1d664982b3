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
// End-to-end orchestration: configuration, content-addressed caching of the
// preprocessing and simulation stages, evaluation reports, and the bundled
// synthetic corpus generator.

#ifndef LSER_PIPELINE_HPP_
#define LSER_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "audio_io.hpp"
#include "readout.hpp"
#include "reservoir.hpp"

namespace lser {

enum class ReservoirMode { dual, vocal_tract_only, source_only };

const char* reservoir_mode_name(ReservoirMode mode);

enum class StratifyBy { emotion, speaker };

struct PipelineConfig {
  std::string corpus_dir;
  std::string cache_dir = "lser-cache";
  std::string output_dir = "lser-out";

  // LP analysis
  int lp_order = 16;
  double window_ms = 30.0;
  double hop_ms = 5.0;

  // auditory front-end
  int channels = 77;
  double fmin_hz = 50.0;
  double fmax_hz = 7500.0;
  double log_floor_db = -80.0;

  // reservoirs; the base config's tau_minus_ratio and n_layers are resolved
  // per kind by reservoir_for()
  ReservoirConfig reservoir;
  double tau_minus_ratio_vt = 5.0;
  double tau_minus_ratio_src = 3.0;
  double a_minus_ratio = 1.05;  // a_minus = a_minus_ratio * a_plus

  // readout
  int k_vt = 29;
  int k_src = 44;
  int n_folds = 50;
  double test_fraction = 0.1;
  std::uint64_t split_seed = 20177;
  double lda_shrinkage = 1e-3;
  StratifyBy stratify = StratifyBy::emotion;

  // run control
  int jobs = 0;  // 0: one worker per hardware thread
  ReservoirMode mode = ReservoirMode::dual;

  // sweep grid
  int sweep_k_vt_min = 1;
  int sweep_k_vt_max = 40;
  int sweep_k_src_min = 1;
  int sweep_k_src_max = 50;
  int sweep_stride = 5;

  // Resolved per-kind reservoir config: layer count follows the channel
  // count, the STDP ratio follows the kind, and the topology seed is a named
  // substream of the base seed.
  ReservoirConfig reservoir_for(MapKind kind) const;

  void validate() const;  // throws bad_config with the offending key
};

PipelineConfig default_config();
PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const PipelineConfig& config,
                 const std::filesystem::path& path);
std::string config_to_json(const PipelineConfig& config);
PipelineConfig config_from_json(const std::string& text);

// Sets one dotted key, e.g. "reservoir.seed" = "42". Unknown keys throw.
void config_set(PipelineConfig& config, const std::string& key,
                const std::string& value);
std::string config_get(const PipelineConfig& config, const std::string& key);

// LSER_CACHE_DIR wins over the configured cache directory.
std::filesystem::path resolve_cache_dir(const PipelineConfig& config);

struct StageStats {
  int computed = 0;
  int reused = 0;
  std::vector<std::string> failures;  // "path: message" per failed entry
};

// Cache file paths for one corpus entry; the key hashes the input bytes, the
// stage name, and the stage-relevant config subset.
std::filesystem::path map_cache_path(const PipelineConfig& config,
                                     const std::filesystem::path& wav_path,
                                     MapKind kind);
std::filesystem::path state_cache_path(const PipelineConfig& config,
                                       const std::filesystem::path& wav_path,
                                       MapKind kind);

// Builds both spectro-temporal maps for every corpus entry. Idempotent:
// existing cache files are counted as reused. Per-entry failures are
// collected, never thrown.
StageStats run_preprocess(const PipelineConfig& config);

// Simulates the reservoirs selected by config.mode over the cached maps.
StageStats run_simulate(const PipelineConfig& config);

// Loads the cached liquid states for every corpus entry (per config.mode).
// Throws missing_cache listing every absent entry.
std::vector<UtteranceFeatures> load_features(const PipelineConfig& config);

struct EvaluateOutput {
  EvaluationReport report;
  std::vector<std::string> class_names;
  std::filesystem::path report_json;
  std::filesystem::path confusion_csv;
};

// Cross-validates the cached states and writes report JSON + confusion CSV
// into the output directory.
EvaluateOutput run_evaluate(const PipelineConfig& config);

// Full component sweep; writes "sweep.csv" (header k_vt,k_src,mean_acc,ci95)
// into the output directory and returns the grid.
std::vector<SweepCell> run_sweep(const PipelineConfig& config);

struct RunAllResult {
  StageStats preprocess;
  StageStats simulate;
  EvaluateOutput evaluate;
};

// preprocess -> simulate -> evaluate; a stage with failures aborts the run
// with the aggregated error list.
RunAllResult run_all(const PipelineConfig& config);

// Writes the desk-scale test corpus: seven synthetic classes told apart by
// formant placement and F0 contour, n_per_class one-second utterances each,
// named by the Emo-DB convention. Deterministic for a given seed.
void make_synthetic_corpus(const std::filesystem::path& dir,
                           std::uint64_t seed, int n_per_class = 10);

// Report serialization (also used by the acceptance suite).
std::string report_to_json(const EvaluationReport& report,
                           const std::vector<std::string>& class_names,
                           ReservoirMode mode, std::uint64_t split_seed,
                           const std::string& timestamp);
void write_confusion_csv(const std::filesystem::path& path,
                         const EvaluationReport& report,
                         const std::vector<std::string>& class_names);
void write_sweep_csv(const std::filesystem::path& path,
                     const std::vector<SweepCell>& grid);

// Atomic write: temp file in the target directory, then rename.
void atomic_write_file(const std::filesystem::path& path,
                       const std::string& bytes);

}  // namespace lser

#endif  // LSER_PIPELINE_HPP_
