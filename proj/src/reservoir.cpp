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

#include "reservoir.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "errors.hpp"
#include "hash.hpp"
#include "rng.hpp"

namespace lser {

namespace {

constexpr char kStateMagic[7] = {'L', 'S', 'T', 'A', 'T', 'E', '1'};

template <typename T>
void write_pod(std::string& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.append(b, sizeof(T));
}

struct ByteCursor {
  const std::string& bytes;
  const std::string& origin;
  std::size_t pos = 0;

  template <typename T>
  T read() {
    if (pos + sizeof(T) > bytes.size()) {
      fail(Errc::io_error, origin + ": truncated state file");
    }
    T v;
    std::memcpy(&v, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
};

}  // namespace

void ReservoirConfig::validate() const {
  if (n_layers <= 0 || layer_rows <= 0 || layer_cols <= 0) {
    fail(Errc::bad_config, "reservoir dimensions must be positive");
  }
  if (!(lambda > 0.0) || connection_c < 0.0) {
    fail(Errc::bad_config, "need lambda > 0 and C >= 0");
  }
  if (!(tau_plus_ms > 0.0) || !(tau_minus_ratio > 0.0)) {
    fail(Errc::bad_config, "STDP time constants must be positive");
  }
  if (!(a_plus > 0.0) || !(a_minus > 0.0)) {
    fail(Errc::bad_config, "STDP magnitudes must be positive");
  }
  if (!(g_max > 0.0) || g_in_max < 0.0) {
    fail(Errc::bad_config, "conductance bounds must be positive");
  }
  if (!(dt_ms > 0.0) || dt_ms > 1.0) {
    fail(Errc::bad_config, "dt_ms must be in (0, 1]");
  }
  if (!(lif.v_reset_mv < lif.v_thresh_mv)) {
    fail(Errc::bad_config, "v_reset must be below v_thresh");
  }
  if (!(lif.tau_m_ms > 0.0) || !(lif.tau_syn_ms > 0.0) ||
      !(lif.refractory_ms > 0.0)) {
    fail(Errc::bad_config, "LIF time constants must be positive");
  }
}

double neuron_distance(const NeuronPosition& a, const NeuronPosition& b) {
  const double dl = a.layer - b.layer;
  const double dr = a.row - b.row;
  const double dc = a.col - b.col;
  return std::sqrt(dl * dl + dr * dr + dc * dc);
}

double connection_probability(double distance, double c, double lambda) {
  const double p = c * std::exp(-(distance * distance) / (lambda * lambda));
  return std::clamp(p, 0.0, 1.0);
}

double connection_probability(const NeuronPosition& a, const NeuronPosition& b,
                              double c, double lambda) {
  return connection_probability(neuron_distance(a, b), c, lambda);
}

ReservoirTopology build_topology(const ReservoirConfig& config) {
  config.validate();
  const int n = config.neuron_count();

  ReservoirTopology topo;
  topo.config = config;
  topo.positions.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int per_layer = config.layer_rows * config.layer_cols;
    topo.positions[static_cast<std::size_t>(i)] = {
        i / per_layer, (i % per_layer) / config.layer_cols,
        i % config.layer_cols};
  }

  Rng rng(config.rng_seed);
  topo.out_synapses.resize(static_cast<std::size_t>(n));
  topo.in_synapses.resize(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a == b) continue;
      const double p = connection_probability(
          topo.positions[static_cast<std::size_t>(a)],
          topo.positions[static_cast<std::size_t>(b)], config.connection_c,
          config.lambda);
      if (rng.bernoulli(p)) {
        const auto idx = static_cast<std::int32_t>(topo.pre.size());
        topo.pre.push_back(a);
        topo.post.push_back(b);
        topo.out_synapses[static_cast<std::size_t>(a)].push_back(idx);
        topo.in_synapses[static_cast<std::size_t>(b)].push_back(idx);
      }
    }
  }
  topo.g_init.resize(topo.pre.size());
  for (auto& g : topo.g_init) {
    g = rng.uniform(0.4, 0.6) * config.g_max;
  }
  return topo;
}

double stdp_delta(double delta_ms, const ReservoirConfig& config) {
  if (delta_ms < 0.0) {
    return config.a_plus * std::exp(delta_ms / config.tau_plus_ms);
  }
  if (delta_ms > 0.0) {
    return -config.a_minus * std::exp(-delta_ms / config.tau_minus_ms());
  }
  return 0.0;
}

bool lif_step(LifNeuronState& state, double drive_mv, double t_ms,
              double dt_ms, const LifParams& params) {
  if (t_ms < state.refractory_until_ms) {
    state.v = params.v_reset_mv;
    return false;
  }
  state.v += dt_ms * ((params.v_rest_mv - state.v) + drive_mv) / params.tau_m_ms;
  if (state.v >= params.v_thresh_mv) {
    state.v = params.v_reset_mv;
    state.refractory_until_ms = t_ms + dt_ms + params.refractory_ms;
    return true;
  }
  return false;
}

std::vector<std::vector<double>> encode_input(const SpectroTemporalMap& map,
                                              double g_in_max) {
  const int n_ch = map.n_channels;
  const int n_fr = map.n_frames;
  std::vector<std::vector<double>> drive(
      static_cast<std::size_t>(n_fr),
      std::vector<double>(static_cast<std::size_t>(n_ch), 0.0));
  for (int j = 0; j < n_ch; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < n_fr; ++t) {
      if (!std::isfinite(map.at(j, t))) {
        fail(Errc::bad_argument, "non-finite map entry in channel " +
                                     std::to_string(j));
      }
      lo = std::min(lo, map.at(j, t));
      hi = std::max(hi, map.at(j, t));
    }
    if (!(hi > lo)) continue;  // constant channel stays at zero drive
    const double scale = g_in_max / (hi - lo);
    for (int t = 0; t < n_fr; ++t) {
      drive[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] =
          (map.at(j, t) - lo) * scale;
    }
  }
  return drive;
}

ReservoirSimulator::ReservoirSimulator(const ReservoirConfig& config)
    : topology_(build_topology(config)) {}

LiquidState ReservoirSimulator::run(const SpectroTemporalMap& map,
                                    std::vector<double>* final_conductances) const {
  const ReservoirConfig& cfg = topology_.config;
  const int n = cfg.neuron_count();
  const int per_layer = cfg.layer_rows * cfg.layer_cols;
  if (map.n_channels != cfg.n_layers) {
    fail(Errc::dimension_mismatch,
         "map has " + std::to_string(map.n_channels) + " channels, reservoir " +
             std::to_string(cfg.n_layers) + " layers");
  }

  const auto drive_per_frame = encode_input(map, cfg.g_in_max);
  const double dt = cfg.dt_ms;
  const double duration_ms = map.n_frames * map.frame_hop_ms;
  const auto n_steps = static_cast<long>(std::lround(duration_ms / dt));
  const double syn_decay = std::exp(-dt / cfg.lif.tau_syn_ms);

  // Per-run mutable state; the topology template is never touched.
  std::vector<double> g(topology_.g_init);
  std::vector<LifNeuronState> neurons(
      static_cast<std::size_t>(n), LifNeuronState{cfg.lif.v_rest_mv, -1e300});
  std::vector<double> syn_trace(static_cast<std::size_t>(n), 0.0);
  std::vector<double> last_spike(static_cast<std::size_t>(n), -1e300);
  std::vector<std::int64_t> spike_count(static_cast<std::size_t>(n), 0);
  std::vector<std::int32_t> spikes;
  spikes.reserve(static_cast<std::size_t>(n));

  for (long step = 0; step < n_steps; ++step) {
    const double t = step * dt;
    const double t_spike = t + dt;
    auto frame = static_cast<std::size_t>(t / map.frame_hop_ms);
    if (frame >= drive_per_frame.size()) frame = drive_per_frame.size() - 1;
    const std::vector<double>& input = drive_per_frame[frame];

    spikes.clear();
    for (int i = 0; i < n; ++i) {
      auto ui = static_cast<std::size_t>(i);
      const double drive = syn_trace[ui] + input[static_cast<std::size_t>(i / per_layer)];
      if (lif_step(neurons[ui], drive, t, dt, cfg.lif)) {
        spikes.push_back(i);
        ++spike_count[ui];
      }
      if (!std::isfinite(neurons[ui].v)) {
        fail(Errc::numeric_fault,
             "non-finite membrane potential at neuron " + std::to_string(i));
      }
      syn_trace[ui] *= syn_decay;
    }

    for (std::int32_t s : spikes) {
      last_spike[static_cast<std::size_t>(s)] = t_spike;
    }
    for (std::int32_t s : spikes) {
      // Outgoing: deliver the spike, then depress against earlier
      // post-synaptic spikes (delta = t_pre - t_post > 0).
      for (std::int32_t k : topology_.out_synapses[static_cast<std::size_t>(s)]) {
        const auto uk = static_cast<std::size_t>(k);
        const auto tgt = static_cast<std::size_t>(topology_.post[uk]);
        syn_trace[tgt] += g[uk];
        const double t_post = last_spike[tgt];
        if (t_post > -1e300 && t_post != t_spike) {
          g[uk] = std::clamp(g[uk] + stdp_delta(t_spike - t_post, cfg), 0.0,
                             cfg.g_max);
        }
      }
      // Incoming: potentiate against earlier pre-synaptic spikes
      // (delta = t_pre - t_post < 0). Simultaneous spikes change nothing.
      for (std::int32_t k : topology_.in_synapses[static_cast<std::size_t>(s)]) {
        const auto uk = static_cast<std::size_t>(k);
        const double t_pre = last_spike[static_cast<std::size_t>(topology_.pre[uk])];
        if (t_pre > -1e300 && t_pre != t_spike) {
          g[uk] = std::clamp(g[uk] + stdp_delta(t_pre - t_spike, cfg), 0.0,
                             cfg.g_max);
        }
      }
    }
  }

  if (final_conductances) *final_conductances = g;

  LiquidState state;
  state.mean_rates.resize(static_cast<std::size_t>(n));
  const double duration_s = n_steps * dt / 1000.0;
  for (int i = 0; i < n; ++i) {
    state.mean_rates[static_cast<std::size_t>(i)] =
        duration_s > 0.0 ? spike_count[static_cast<std::size_t>(i)] / duration_s
                         : 0.0;
  }
  return state;
}

LiquidState simulate(const SpectroTemporalMap& map,
                     const ReservoirConfig& config) {
  return ReservoirSimulator(config).run(map);
}

std::string serialize_state(const LiquidState& state, MapKind kind,
                            std::uint64_t seed, std::uint64_t config_hash) {
  std::string out;
  out.append(kStateMagic, sizeof(kStateMagic));
  write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(kind));
  write_pod<std::uint64_t>(out, seed);
  write_pod<std::uint64_t>(out, config_hash);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(state.mean_rates.size()));
  for (double r : state.mean_rates) write_pod<float>(out, static_cast<float>(r));
  return out;
}

LiquidState parse_state(const std::string& bytes, const std::string& origin,
                        MapKind* kind, std::uint64_t* seed,
                        std::uint64_t* config_hash) {
  if (bytes.size() < 7 || std::memcmp(bytes.data(), kStateMagic, 7) != 0) {
    fail(Errc::io_error, origin + ": bad state magic");
  }
  ByteCursor cur{bytes, origin, 7};
  const auto k = static_cast<MapKind>(cur.read<std::uint8_t>());
  const auto s = cur.read<std::uint64_t>();
  const auto h = cur.read<std::uint64_t>();
  const auto count = cur.read<std::uint32_t>();
  if (count > 1u << 24) fail(Errc::io_error, origin + ": implausible count");
  if (kind) *kind = k;
  if (seed) *seed = s;
  if (config_hash) *config_hash = h;
  LiquidState state;
  state.mean_rates.resize(count);
  for (auto& r : state.mean_rates) r = cur.read<float>();
  return state;
}

void write_state(const std::filesystem::path& path, const LiquidState& state,
                 MapKind kind, std::uint64_t seed, std::uint64_t config_hash) {
  const std::string out = serialize_state(state, kind, seed, config_hash);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(Errc::io_error, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) fail(Errc::io_error, "write failed for " + path.string());
}

LiquidState read_state(const std::filesystem::path& path, MapKind* kind,
                       std::uint64_t* seed, std::uint64_t* config_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::file_not_found, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return parse_state(bytes, path.string(), kind, seed, config_hash);
}

}  // namespace lser
