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

#include "pipeline.hpp"

#include <json.hpp>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <mutex>
#include <sstream>

#include "errors.hpp"
#include "hash.hpp"
#include "lp_analysis.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace lser {

namespace {

using nlohmann::json;

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::file_not_found, "cannot open " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

json lif_to_json(const LifParams& p) {
  return json{{"refractory_ms", p.refractory_ms}, {"tau_m_ms", p.tau_m_ms},
              {"tau_syn_ms", p.tau_syn_ms},       {"v_reset_mv", p.v_reset_mv},
              {"v_rest_mv", p.v_rest_mv},         {"v_thresh_mv", p.v_thresh_mv}};
}

LifParams lif_from_json(const json& j) {
  LifParams p;
  p.refractory_ms = j.at("refractory_ms").get<double>();
  p.tau_m_ms = j.at("tau_m_ms").get<double>();
  p.tau_syn_ms = j.at("tau_syn_ms").get<double>();
  p.v_reset_mv = j.at("v_reset_mv").get<double>();
  p.v_rest_mv = j.at("v_rest_mv").get<double>();
  p.v_thresh_mv = j.at("v_thresh_mv").get<double>();
  return p;
}

json config_to_json_object(const PipelineConfig& c) {
  json j;
  j["cache"] = {{"dir", c.cache_dir}};
  j["corpus"] = {{"dir", c.corpus_dir},
                 {"stratify",
                  c.stratify == StratifyBy::emotion ? "emotion" : "speaker"}};
  j["frontend"] = {{"channels", c.channels},
                   {"fmax_hz", c.fmax_hz},
                   {"fmin_hz", c.fmin_hz},
                   {"log_floor_db", c.log_floor_db}};
  j["lp"] = {{"hop_ms", c.hop_ms}, {"order", c.lp_order},
             {"window_ms", c.window_ms}};
  j["output"] = {{"dir", c.output_dir}};
  j["readout"] = {{"folds", c.n_folds},
                  {"k_src", c.k_src},
                  {"k_vt", c.k_vt},
                  {"lda_shrinkage", c.lda_shrinkage},
                  {"split_seed", c.split_seed},
                  {"test_fraction", c.test_fraction}};
  j["reservoir"] = {{"a_minus_ratio", c.a_minus_ratio},
                    {"a_plus", c.reservoir.a_plus},
                    {"c", c.reservoir.connection_c},
                    {"dt_ms", c.reservoir.dt_ms},
                    {"g_in_max", c.reservoir.g_in_max},
                    {"g_max", c.reservoir.g_max},
                    {"lambda", c.reservoir.lambda},
                    {"layer_cols", c.reservoir.layer_cols},
                    {"layer_rows", c.reservoir.layer_rows},
                    {"lif", lif_to_json(c.reservoir.lif)},
                    {"seed", c.reservoir.rng_seed},
                    {"tau_minus_ratio_src", c.tau_minus_ratio_src},
                    {"tau_minus_ratio_vt", c.tau_minus_ratio_vt},
                    {"tau_plus_ms", c.reservoir.tau_plus_ms}};
  j["run"] = {{"jobs", c.jobs}, {"reservoirs", reservoir_mode_name(c.mode)}};
  j["sweep"] = {{"k_src_max", c.sweep_k_src_max},
                {"k_src_min", c.sweep_k_src_min},
                {"k_vt_max", c.sweep_k_vt_max},
                {"k_vt_min", c.sweep_k_vt_min},
                {"stride", c.sweep_stride}};
  return j;
}

PipelineConfig config_from_json_object(const json& j) {
  PipelineConfig c;
  c.cache_dir = j.at("cache").at("dir").get<std::string>();
  c.corpus_dir = j.at("corpus").at("dir").get<std::string>();
  const std::string strat = j.at("corpus").at("stratify").get<std::string>();
  if (strat == "emotion") {
    c.stratify = StratifyBy::emotion;
  } else if (strat == "speaker") {
    c.stratify = StratifyBy::speaker;
  } else {
    fail(Errc::bad_config, "corpus.stratify must be emotion or speaker");
  }
  c.channels = j.at("frontend").at("channels").get<int>();
  c.fmax_hz = j.at("frontend").at("fmax_hz").get<double>();
  c.fmin_hz = j.at("frontend").at("fmin_hz").get<double>();
  c.log_floor_db = j.at("frontend").at("log_floor_db").get<double>();
  c.hop_ms = j.at("lp").at("hop_ms").get<double>();
  c.lp_order = j.at("lp").at("order").get<int>();
  c.window_ms = j.at("lp").at("window_ms").get<double>();
  c.output_dir = j.at("output").at("dir").get<std::string>();
  c.n_folds = j.at("readout").at("folds").get<int>();
  c.k_src = j.at("readout").at("k_src").get<int>();
  c.k_vt = j.at("readout").at("k_vt").get<int>();
  c.lda_shrinkage = j.at("readout").at("lda_shrinkage").get<double>();
  c.split_seed = j.at("readout").at("split_seed").get<std::uint64_t>();
  c.test_fraction = j.at("readout").at("test_fraction").get<double>();
  const json& r = j.at("reservoir");
  c.a_minus_ratio = r.at("a_minus_ratio").get<double>();
  c.reservoir.a_plus = r.at("a_plus").get<double>();
  c.reservoir.connection_c = r.at("c").get<double>();
  c.reservoir.dt_ms = r.at("dt_ms").get<double>();
  c.reservoir.g_in_max = r.at("g_in_max").get<double>();
  c.reservoir.g_max = r.at("g_max").get<double>();
  c.reservoir.lambda = r.at("lambda").get<double>();
  c.reservoir.layer_cols = r.at("layer_cols").get<int>();
  c.reservoir.layer_rows = r.at("layer_rows").get<int>();
  c.reservoir.lif = lif_from_json(r.at("lif"));
  c.reservoir.rng_seed = r.at("seed").get<std::uint64_t>();
  c.tau_minus_ratio_src = r.at("tau_minus_ratio_src").get<double>();
  c.tau_minus_ratio_vt = r.at("tau_minus_ratio_vt").get<double>();
  c.reservoir.tau_plus_ms = r.at("tau_plus_ms").get<double>();
  c.jobs = j.at("run").at("jobs").get<int>();
  const std::string mode = j.at("run").at("reservoirs").get<std::string>();
  if (mode == "dual") {
    c.mode = ReservoirMode::dual;
  } else if (mode == "vocal_tract") {
    c.mode = ReservoirMode::vocal_tract_only;
  } else if (mode == "source") {
    c.mode = ReservoirMode::source_only;
  } else {
    fail(Errc::bad_config, "run.reservoirs must be dual, vocal_tract or source");
  }
  c.sweep_k_src_max = j.at("sweep").at("k_src_max").get<int>();
  c.sweep_k_src_min = j.at("sweep").at("k_src_min").get<int>();
  c.sweep_k_vt_max = j.at("sweep").at("k_vt_max").get<int>();
  c.sweep_k_vt_min = j.at("sweep").at("k_vt_min").get<int>();
  c.sweep_stride = j.at("sweep").at("stride").get<int>();
  return c;
}

// Stage-relevant config subsets, serialized canonically (sorted keys) so the
// cache key changes exactly when a dependency changes.
std::string preprocess_subset(const PipelineConfig& c) {
  json j{{"channels", c.channels},     {"fmax_hz", c.fmax_hz},
         {"fmin_hz", c.fmin_hz},       {"hop_ms", c.hop_ms},
         {"log_floor_db", c.log_floor_db}, {"lp_order", c.lp_order},
         {"window_ms", c.window_ms}};
  return j.dump();
}

std::string simulate_subset(const PipelineConfig& c, MapKind kind) {
  const ReservoirConfig r = c.reservoir_for(kind);
  json j{{"a_minus", r.a_minus},
         {"a_plus", r.a_plus},
         {"c", r.connection_c},
         {"dt_ms", r.dt_ms},
         {"g_in_max", r.g_in_max},
         {"g_max", r.g_max},
         {"lambda", r.lambda},
         {"layer_cols", r.layer_cols},
         {"layer_rows", r.layer_rows},
         {"lif", lif_to_json(r.lif)},
         {"n_layers", r.n_layers},
         {"seed", r.rng_seed},
         {"tau_minus_ratio", r.tau_minus_ratio},
         {"tau_plus_ms", r.tau_plus_ms}};
  return j.dump();
}

std::uint64_t simulate_config_hash(const PipelineConfig& c, MapKind kind) {
  return fnv1a64(simulate_subset(c, kind));
}

std::filesystem::path map_cache_path_for_bytes(const PipelineConfig& c,
                                               const std::string& wav_bytes,
                                               const std::string& stem,
                                               MapKind kind) {
  Fnv1a64 h;
  h.update(wav_bytes).update("preprocess").update(preprocess_subset(c));
  return resolve_cache_dir(c) /
         (stem + "." + map_kind_name(kind) + "." + h.hex() + ".lsmap");
}

std::filesystem::path state_cache_path_for_bytes(const PipelineConfig& c,
                                                 const std::string& map_bytes,
                                                 const std::string& stem,
                                                 MapKind kind) {
  Fnv1a64 h;
  h.update(map_bytes).update("simulate").update(simulate_subset(c, kind));
  return resolve_cache_dir(c) /
         (stem + "." + map_kind_name(kind) + "." + h.hex() + ".lstate");
}

std::vector<MapKind> kinds_for_mode(ReservoirMode mode) {
  switch (mode) {
    case ReservoirMode::dual:
      return {MapKind::vocal_tract, MapKind::source};
    case ReservoirMode::vocal_tract_only:
      return {MapKind::vocal_tract};
    case ReservoirMode::source_only:
      return {MapKind::source};
  }
  return {};
}

struct UtteranceMaps {
  SpectroTemporalMap source;
  SpectroTemporalMap vocal_tract;
};

// Shared corpus preprocessing: LP analysis on Hamming frames, residual via
// inverse filtering, gammatone energy map for the source, ERB-sampled
// all-pole responses for the vocal tract.
UtteranceMaps compute_maps(const PipelineConfig& c, const AudioSignal& wav) {
  const FrameSequence frames = frame_signal(wav, c.window_ms, c.hop_ms);
  std::vector<LpCoefficients> analyses;
  analyses.reserve(frames.frames.size());
  for (const auto& frame : frames.frames) {
    analyses.push_back(analyze_frame(frame, c.lp_order));
  }

  // Keep the band edges below Nyquist for corpora not recorded at 16 kHz.
  const double fmax = std::min(c.fmax_hz, 0.46875 * wav.sample_rate);
  const ErbScaleGrid grid =
      make_erb_grid(c.channels, c.fmin_hz, fmax, wav.sample_rate);

  const ResidualSignal resid =
      residual(wav, analyses, frames.hop, frames.window_length);
  const GammatoneFilterbank bank(grid, wav.sample_rate);
  const auto channels = bank.filter(resid.samples);

  UtteranceMaps maps;
  maps.source = channel_energy_map(channels, c.hop_ms, wav.sample_rate, grid,
                                   c.log_floor_db);
  maps.vocal_tract = warp_lp_spectra(analyses, grid, wav.sample_rate, c.hop_ms,
                                     c.log_floor_db);
  return maps;
}

}  // namespace

const char* reservoir_mode_name(ReservoirMode mode) {
  switch (mode) {
    case ReservoirMode::dual:
      return "dual";
    case ReservoirMode::vocal_tract_only:
      return "vocal_tract";
    case ReservoirMode::source_only:
      return "source";
  }
  return "dual";
}

ReservoirConfig PipelineConfig::reservoir_for(MapKind kind) const {
  ReservoirConfig r = reservoir;
  r.n_layers = channels;
  r.tau_minus_ratio =
      kind == MapKind::vocal_tract ? tau_minus_ratio_vt : tau_minus_ratio_src;
  r.a_minus = a_minus_ratio * r.a_plus;
  r.rng_seed = substream_seed(reservoir.rng_seed, map_kind_name(kind));
  return r;
}

void PipelineConfig::validate() const {
  if (lp_order < 1) fail(Errc::bad_config, "lp.order must be >= 1");
  if (!(hop_ms > 0.0) || window_ms < hop_ms) {
    fail(Errc::bad_config, "lp.window_ms >= lp.hop_ms > 0 required");
  }
  if (channels < 2) fail(Errc::bad_config, "frontend.channels must be >= 2");
  if (!(fmin_hz > 0.0) || !(fmax_hz > fmin_hz)) {
    fail(Errc::bad_config, "frontend band edges must satisfy 0 < fmin < fmax");
  }
  if (!(a_minus_ratio > 0.0)) {
    fail(Errc::bad_config, "reservoir.a_minus_ratio must be > 0");
  }
  if (!(tau_minus_ratio_vt > 0.0) || !(tau_minus_ratio_src > 0.0)) {
    fail(Errc::bad_config, "reservoir tau ratios must be > 0");
  }
  reservoir_for(MapKind::vocal_tract).validate();
  reservoir_for(MapKind::source).validate();
  if (k_vt < 0 || k_src < 0) fail(Errc::bad_config, "component counts must be >= 0");
  if (mode == ReservoirMode::dual && (k_vt < 1 || k_src < 1)) {
    fail(Errc::bad_config, "dual mode needs readout.k_vt and k_src >= 1");
  }
  if (mode == ReservoirMode::vocal_tract_only && k_vt < 1) {
    fail(Errc::bad_config, "vocal_tract mode needs readout.k_vt >= 1");
  }
  if (mode == ReservoirMode::source_only && k_src < 1) {
    fail(Errc::bad_config, "source mode needs readout.k_src >= 1");
  }
  if (n_folds < 1) fail(Errc::bad_config, "readout.folds must be >= 1");
  if (!(test_fraction > 0.0) || test_fraction >= 1.0) {
    fail(Errc::bad_config, "readout.test_fraction must be in (0, 1)");
  }
  if (lda_shrinkage < 0.0 || lda_shrinkage >= 1.0) {
    fail(Errc::bad_config, "readout.lda_shrinkage must be in [0, 1)");
  }
  if (jobs < 0) fail(Errc::bad_config, "run.jobs must be >= 0");
  if (sweep_stride < 1 || sweep_k_vt_min < 0 || sweep_k_src_min < 0 ||
      sweep_k_vt_max < sweep_k_vt_min || sweep_k_src_max < sweep_k_src_min) {
    fail(Errc::bad_config, "invalid sweep ranges");
  }
}

PipelineConfig default_config() { return PipelineConfig{}; }

std::string config_to_json(const PipelineConfig& config) {
  return config_to_json_object(config).dump(2) + "\n";
}

PipelineConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::bad_config, std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig c;
  try {
    c = config_from_json_object(j);
  } catch (const json::exception& e) {
    fail(Errc::bad_config, std::string("config schema error: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  return config_from_json(read_file_bytes(path));
}

void save_config(const PipelineConfig& config,
                 const std::filesystem::path& path) {
  atomic_write_file(path, config_to_json(config));
}

void config_set(PipelineConfig& config, const std::string& key,
                const std::string& value) {
  json j = config_to_json_object(config);
  json* node = &j;
  std::size_t start = 0;
  std::vector<std::string> parts;
  while (true) {
    const std::size_t dot = key.find('.', start);
    parts.push_back(key.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->contains(parts[i])) {
      fail(Errc::bad_config, "unknown config key: " + key);
    }
    node = &(*node)[parts[i]];
  }
  const std::string& leaf = parts.back();
  if (!node->is_object() || !node->contains(leaf)) {
    fail(Errc::bad_config, "unknown config key: " + key);
  }
  json& slot = (*node)[leaf];
  if (slot.is_string()) {
    slot = value;
  } else {
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::exception&) {
      fail(Errc::bad_config, "value for " + key + " is not a number/bool: " + value);
    }
    if (parsed.is_object() || parsed.is_array() || parsed.is_string()) {
      fail(Errc::bad_config, "value for " + key + " must be scalar");
    }
    slot = parsed;
  }
  config = config_from_json(j.dump());
}

std::string config_get(const PipelineConfig& config, const std::string& key) {
  json j = config_to_json_object(config);
  const json* node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (!node->is_object() || !node->contains(part)) {
      fail(Errc::bad_config, "unknown config key: " + key);
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return node->is_string() ? node->get<std::string>() : node->dump();
}

std::filesystem::path resolve_cache_dir(const PipelineConfig& config) {
  if (const char* env = std::getenv("LSER_CACHE_DIR"); env && *env) {
    return env;
  }
  return config.cache_dir;
}

void atomic_write_file(const std::filesystem::path& path,
                       const std::string& bytes) {
  static std::atomic<std::uint64_t> counter{0};
  const std::filesystem::path tmp =
      path.parent_path() /
      (path.filename().string() + ".tmp" +
       std::to_string(counter.fetch_add(1)) + "-" +
       std::to_string(static_cast<unsigned long>(::getpid())));
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(Errc::io_error, "cannot write " + tmp.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) {
      std::filesystem::remove(tmp);
      fail(Errc::io_error, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    fail(Errc::io_error, "rename failed for " + path.string() + ": " + ec.message());
  }
}

std::filesystem::path map_cache_path(const PipelineConfig& config,
                                     const std::filesystem::path& wav_path,
                                     MapKind kind) {
  return map_cache_path_for_bytes(config, read_file_bytes(wav_path),
                                  wav_path.stem().string(), kind);
}

std::filesystem::path state_cache_path(const PipelineConfig& config,
                                       const std::filesystem::path& wav_path,
                                       MapKind kind) {
  const auto map_path = map_cache_path(config, wav_path, kind);
  return state_cache_path_for_bytes(config, read_file_bytes(map_path),
                                    wav_path.stem().string(), kind);
}

StageStats run_preprocess(const PipelineConfig& config) {
  config.validate();
  const CorpusScan scan = scan_corpus(config.corpus_dir);
  std::filesystem::create_directories(resolve_cache_dir(config));

  StageStats stats;
  std::mutex mutex;
  parallel_for(scan.entries.size(), config.jobs, [&](std::size_t i) {
    const CorpusEntry& entry = scan.entries[i];
    try {
      const std::string wav_bytes = read_file_bytes(entry.path);
      const std::string stem = entry.path.stem().string();
      const auto src_path = map_cache_path_for_bytes(config, wav_bytes, stem,
                                                     MapKind::source);
      const auto vt_path = map_cache_path_for_bytes(config, wav_bytes, stem,
                                                    MapKind::vocal_tract);
      const bool need_src = !std::filesystem::exists(src_path);
      const bool need_vt = !std::filesystem::exists(vt_path);
      if (!need_src && !need_vt) {
        std::lock_guard<std::mutex> lock(mutex);
        stats.reused += 2;
        return;
      }
      const AudioSignal wav = load_wav(entry.path);
      const UtteranceMaps maps = compute_maps(config, wav);
      if (need_src) atomic_write_file(src_path, serialize_map(maps.source));
      if (need_vt) atomic_write_file(vt_path, serialize_map(maps.vocal_tract));
      std::lock_guard<std::mutex> lock(mutex);
      stats.computed += (need_src ? 1 : 0) + (need_vt ? 1 : 0);
      stats.reused += (need_src ? 0 : 1) + (need_vt ? 0 : 1);
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(mutex);
      stats.failures.push_back(entry.path.string() + ": " + e.what());
    }
  });
  return stats;
}

StageStats run_simulate(const PipelineConfig& config) {
  config.validate();
  const CorpusScan scan = scan_corpus(config.corpus_dir);
  std::filesystem::create_directories(resolve_cache_dir(config));
  const std::vector<MapKind> kinds = kinds_for_mode(config.mode);

  // One immutable topology template per reservoir kind, shared by all
  // workers; run() clones the plastic state.
  std::vector<ReservoirSimulator> simulators;
  simulators.reserve(kinds.size());
  for (MapKind kind : kinds) {
    simulators.emplace_back(config.reservoir_for(kind));
  }

  struct Task {
    std::size_t entry;
    std::size_t kind_index;
  };
  std::vector<Task> tasks;
  for (std::size_t e = 0; e < scan.entries.size(); ++e) {
    for (std::size_t k = 0; k < kinds.size(); ++k) tasks.push_back({e, k});
  }

  StageStats stats;
  std::mutex mutex;
  parallel_for(tasks.size(), config.jobs, [&](std::size_t t) {
    const CorpusEntry& entry = scan.entries[tasks[t].entry];
    const MapKind kind = kinds[tasks[t].kind_index];
    try {
      const std::string stem = entry.path.stem().string();
      const auto map_path = map_cache_path_for_bytes(
          config, read_file_bytes(entry.path), stem, kind);
      if (!std::filesystem::exists(map_path)) {
        fail(Errc::missing_cache,
             "missing map cache " + map_path.string() + " (run preprocess)");
      }
      const std::string map_bytes = read_file_bytes(map_path);
      const auto state_path =
          state_cache_path_for_bytes(config, map_bytes, stem, kind);
      if (std::filesystem::exists(state_path)) {
        std::lock_guard<std::mutex> lock(mutex);
        ++stats.reused;
        return;
      }
      const SpectroTemporalMap map = parse_map(map_bytes, map_path.string());
      const LiquidState state = simulators[tasks[t].kind_index].run(map);
      const ReservoirConfig rc = config.reservoir_for(kind);
      atomic_write_file(state_path,
                        serialize_state(state, kind, rc.rng_seed,
                                        simulate_config_hash(config, kind)));
      std::lock_guard<std::mutex> lock(mutex);
      ++stats.computed;
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(mutex);
      stats.failures.push_back(entry.path.string() + " [" +
                               map_kind_name(kind) + "]: " + e.what());
    }
  });
  return stats;
}

std::vector<UtteranceFeatures> load_features(const PipelineConfig& config) {
  config.validate();
  const CorpusScan scan = scan_corpus(config.corpus_dir);
  if (scan.entries.empty()) {
    fail(Errc::bad_argument, "corpus has no usable entries");
  }
  const std::vector<MapKind> kinds = kinds_for_mode(config.mode);

  std::vector<int> speaker_group(scan.entries.size(), -1);
  if (config.stratify == StratifyBy::speaker) {
    std::vector<std::string> speakers;
    for (std::size_t i = 0; i < scan.entries.size(); ++i) {
      const auto& id = scan.entries[i].speaker_id;
      auto it = std::find(speakers.begin(), speakers.end(), id);
      if (it == speakers.end()) {
        speakers.push_back(id);
        it = std::prev(speakers.end());
      }
      speaker_group[i] = static_cast<int>(it - speakers.begin());
    }
  }

  std::vector<UtteranceFeatures> features(scan.entries.size());
  std::vector<std::string> missing;
  std::mutex mutex;
  parallel_for(scan.entries.size(), config.jobs, [&](std::size_t i) {
    const CorpusEntry& entry = scan.entries[i];
    UtteranceFeatures& f = features[i];
    f.label = static_cast<int>(entry.emotion);
    f.strat_group = speaker_group[i];
    for (MapKind kind : kinds) {
      try {
        const auto path = state_cache_path(config, entry.path, kind);
        if (!std::filesystem::exists(path)) {
          std::lock_guard<std::mutex> lock(mutex);
          missing.push_back(path.string());
          continue;
        }
        const LiquidState state = read_state(path);
        auto& slot =
            kind == MapKind::vocal_tract ? f.vt_state : f.src_state;
        slot = state.mean_rates;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mutex);
        missing.push_back(entry.path.string() + " [" + map_kind_name(kind) +
                          "]: " + e.what());
      }
    }
  });
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    std::string message = "missing cached states:";
    for (const auto& m : missing) message += "\n  " + m;
    fail(Errc::missing_cache, message);
  }
  return features;
}

EvaluateOutput run_evaluate(const PipelineConfig& config) {
  const std::vector<UtteranceFeatures> features = load_features(config);

  CrossValidateOptions options;
  options.k_vt = config.mode == ReservoirMode::source_only ? 0 : config.k_vt;
  options.k_src =
      config.mode == ReservoirMode::vocal_tract_only ? 0 : config.k_src;
  options.n_folds = config.n_folds;
  options.test_fraction = config.test_fraction;
  options.seed = config.split_seed;
  options.lda_shrinkage = config.lda_shrinkage;
  options.jobs = config.jobs;

  EvaluateOutput out;
  out.report = cross_validate(features, kNumEmotions, options);
  for (int e = 0; e < kNumEmotions; ++e) {
    out.class_names.push_back(emotion_name(static_cast<Emotion>(e)));
  }

  std::filesystem::create_directories(config.output_dir);
  out.report_json = std::filesystem::path(config.output_dir) / "report.json";
  out.confusion_csv =
      std::filesystem::path(config.output_dir) / "confusion.csv";
  atomic_write_file(out.report_json,
                    report_to_json(out.report, out.class_names, config.mode,
                                   config.split_seed, now_iso8601()));
  write_confusion_csv(out.confusion_csv, out.report, out.class_names);
  return out;
}

std::vector<SweepCell> run_sweep(const PipelineConfig& config) {
  PipelineConfig dual = config;
  dual.mode = ReservoirMode::dual;  // the sweep needs both reservoirs cached
  const std::vector<UtteranceFeatures> features = load_features(dual);

  CrossValidateOptions options;
  options.n_folds = config.n_folds;
  options.test_fraction = config.test_fraction;
  options.seed = config.split_seed;
  options.lda_shrinkage = config.lda_shrinkage;
  options.jobs = config.jobs;

  const std::vector<SweepCell> grid = sweep_components(
      features, kNumEmotions, config.sweep_k_vt_min, config.sweep_k_vt_max,
      config.sweep_k_src_min, config.sweep_k_src_max, config.sweep_stride,
      options);

  std::filesystem::create_directories(config.output_dir);
  write_sweep_csv(std::filesystem::path(config.output_dir) / "sweep.csv", grid);
  return grid;
}

RunAllResult run_all(const PipelineConfig& config) {
  RunAllResult result;
  result.preprocess = run_preprocess(config);
  if (!result.preprocess.failures.empty()) {
    std::string message = "preprocess stage failed for some entries:";
    for (const auto& f : result.preprocess.failures) message += "\n  " + f;
    fail(Errc::internal, message);
  }
  result.simulate = run_simulate(config);
  if (!result.simulate.failures.empty()) {
    std::string message = "simulate stage failed for some entries:";
    for (const auto& f : result.simulate.failures) message += "\n  " + f;
    fail(Errc::internal, message);
  }
  result.evaluate = run_evaluate(config);
  return result;
}

namespace {

struct SynthClass {
  Emotion emotion;
  double f1;                 // first formant, Hz (static)
  double f2_start, f2_end;   // second formant glide, Hz
  double f0_start, f0_end;   // fundamental contour, Hz
};

// The reservoir input encoding normalizes each channel over the utterance,
// so class identity must live in per-channel temporal patterns: the vocal
// tract view carries it as a second-formant glide, the source view as an F0
// contour. Glide sets A/B/C and contours flat/rising/falling combine so
// that neither view alone separates all seven classes. F0 stays low so the
// order-16 envelope tracks formants rather than individual harmonics.
constexpr SynthClass kSynthClasses[kNumEmotions] = {
    {Emotion::anger, 700.0, 1150.0, 1150.0, 150.0, 108.0},
    {Emotion::boredom, 320.0, 2200.0, 800.0, 104.0, 104.0},
    {Emotion::disgust, 320.0, 800.0, 2200.0, 104.0, 104.0},
    {Emotion::fear, 320.0, 800.0, 2200.0, 86.0, 126.0},
    {Emotion::happiness, 700.0, 1150.0, 1150.0, 86.0, 126.0},
    {Emotion::sadness, 320.0, 2200.0, 800.0, 150.0, 108.0},
    {Emotion::neutral, 700.0, 1150.0, 1150.0, 104.0, 104.0},
};

// Two-pole resonator with per-sample coefficient update (for glides).
class Resonator {
 public:
  Resonator(double bw_hz, double fs) {
    radius_ = std::exp(-3.14159265358979323846 * bw_hz / fs);
    fs_ = fs;
  }
  double step(double x, double f_hz) {
    const double theta = 2.0 * 3.14159265358979323846 * f_hz / fs_;
    const double y = x + 2.0 * radius_ * std::cos(theta) * y1_ - radius_ * radius_ * y2_;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double radius_ = 0.0, fs_ = 0.0, y1_ = 0.0, y2_ = 0.0;
};

// Raised-cosine syllable gate: three voiced stretches separated by silence,
// so every active channel swings through its full range.
double syllable_gate(double t_frac, double jitter) {
  const double spans[3][2] = {{0.02, 0.30}, {0.36, 0.62}, {0.68, 0.95}};
  for (const auto& span : spans) {
    const double lo = span[0] + jitter;
    const double hi = span[1] + jitter;
    if (t_frac < lo || t_frac > hi) continue;
    const double ramp = 0.03;
    if (t_frac < lo + ramp) {
      return 0.5 - 0.5 * std::cos(3.14159265358979323846 * (t_frac - lo) / ramp);
    }
    if (t_frac > hi - ramp) {
      return 0.5 - 0.5 * std::cos(3.14159265358979323846 * (hi - t_frac) / ramp);
    }
    return 1.0;
  }
  return 0.0;
}

}  // namespace

void make_synthetic_corpus(const std::filesystem::path& dir,
                           std::uint64_t seed, int n_per_class) {
  if (n_per_class < 1) fail(Errc::bad_argument, "need n_per_class >= 1");
  std::filesystem::create_directories(dir);
  const double fs = 16000.0;
  const int n = 16000;  // one second

  for (const SynthClass& cls : kSynthClasses) {
    for (int u = 0; u < n_per_class; ++u) {
      Rng rng(substream_seed(seed, emotion_name(cls.emotion),
                             static_cast<std::uint64_t>(u)));
      const double f0_scale = rng.uniform(0.94, 1.06);
      const double formant_scale = rng.uniform(0.95, 1.05);
      const double peak = 0.35 * rng.uniform(0.8, 1.1);
      const double gate_jitter = rng.uniform(-0.015, 0.015);

      // Glottal-like impulse train following the class F0 contour, gated
      // into syllables and shaped by the class formant trajectory.
      std::vector<double> x(static_cast<std::size_t>(n), 0.0);
      double phase = rng.uniform();
      for (int i = 0; i < n; ++i) {
        const double frac = static_cast<double>(i) / n;
        const double f0 =
            (cls.f0_start + (cls.f0_end - cls.f0_start) * frac) * f0_scale;
        phase += f0 / fs;
        if (phase >= 1.0) {
          phase -= 1.0;
          x[static_cast<std::size_t>(i)] =
              (1.0 + rng.uniform(-0.1, 0.1)) * syllable_gate(frac, gate_jitter);
        }
      }
      Resonator r1(90.0, fs), r2(110.0, fs), r3(160.0, fs);
      for (int i = 0; i < n; ++i) {
        const double frac = static_cast<double>(i) / n;
        const double f2 =
            (cls.f2_start + (cls.f2_end - cls.f2_start) * frac) * formant_scale;
        double v = x[static_cast<std::size_t>(i)];
        v = r1.step(v, cls.f1 * formant_scale);
        v = r2.step(v, f2);
        v = r3.step(v, 2600.0 * formant_scale);
        x[static_cast<std::size_t>(i)] = v;
      }

      double max_abs = 0.0;
      for (double v : x) max_abs = std::max(max_abs, std::abs(v));
      if (max_abs > 0.0) {
        for (double& v : x) v *= peak / max_abs;
      }
      // Aspiration-like noise floor blurs the weaker per-view cues.
      for (double& v : x) v += 0.02 * peak * rng.uniform(-1.0, 1.0);

      char name[32];
      std::snprintf(name, sizeof(name), "%02da%02d%ca.wav", (u % 10) + 1,
                    u + 1, emotion_code(cls.emotion));
      AudioSignal wav;
      wav.sample_rate = static_cast<int>(fs);
      wav.samples = std::move(x);
      write_wav(dir / name, wav);
    }
  }
}

std::string report_to_json(const EvaluationReport& report,
                           const std::vector<std::string>& class_names,
                           ReservoirMode mode, std::uint64_t split_seed,
                           const std::string& timestamp) {
  json j;
  j["ci95_half_width"] = report.ci95_half_width;
  j["class_names"] = class_names;
  json counts = json::array();
  json percents = json::array();
  const std::vector<double> row_percent = report.confusion_row_percent();
  for (int r = 0; r < report.n_classes; ++r) {
    json count_row = json::array();
    json percent_row = json::array();
    for (int c = 0; c < report.n_classes; ++c) {
      count_row.push_back(report.confusion(r, c));
      percent_row.push_back(
          row_percent[static_cast<std::size_t>(r) *
                          static_cast<std::size_t>(report.n_classes) +
                      static_cast<std::size_t>(c)]);
    }
    counts.push_back(count_row);
    percents.push_back(percent_row);
  }
  j["confusion_counts"] = counts;
  j["confusion_row_percent"] = percents;
  j["fold_accuracies"] = report.fold_accuracies;
  j["generated_at"] = timestamp;
  j["k_src"] = report.k_src;
  j["k_vt"] = report.k_vt;
  j["mean_accuracy"] = report.mean_accuracy;
  j["mode"] = reservoir_mode_name(mode);
  j["n_folds"] = static_cast<int>(report.fold_accuracies.size());
  j["n_utterances"] = report.n_utterances;
  j["notes"] = report.notes;
  j["split_seed"] = split_seed;
  return j.dump(2) + "\n";
}

void write_confusion_csv(const std::filesystem::path& path,
                         const EvaluationReport& report,
                         const std::vector<std::string>& class_names) {
  std::string out = "true\\predicted";
  for (const auto& name : class_names) out += "," + name;
  out += "\n";
  for (int r = 0; r < report.n_classes; ++r) {
    out += class_names[static_cast<std::size_t>(r)];
    for (int c = 0; c < report.n_classes; ++c) {
      out += "," + std::to_string(report.confusion(r, c));
    }
    out += "\n";
  }
  atomic_write_file(path, out);
}

void write_sweep_csv(const std::filesystem::path& path,
                     const std::vector<SweepCell>& grid) {
  std::string out = "k_vt,k_src,mean_acc,ci95\n";
  for (const SweepCell& cell : grid) {
    out += std::to_string(cell.k_vt) + "," + std::to_string(cell.k_src) + "," +
           format_double(cell.mean_accuracy) + "," +
           format_double(cell.ci95_half_width) + "\n";
  }
  atomic_write_file(path, out);
}

}  // namespace lser
