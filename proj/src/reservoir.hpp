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
// Liquid state machine core: a tonotopic 3D lattice of leaky
// integrate-and-fire neurons (one 3x3 layer per input channel), distance
// dependent random excitatory connectivity P = C*exp(-D^2/lambda^2), and
// asymmetric STDP adapting the synaptic conductances within each utterance.

#ifndef LSER_RESERVOIR_HPP_
#define LSER_RESERVOIR_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "frontend.hpp"

namespace lser {

struct LifParams {
  double tau_m_ms = 20.0;
  double v_rest_mv = -74.0;
  double v_reset_mv = -60.0;
  double v_thresh_mv = -54.0;
  double refractory_ms = 1.0;
  double tau_syn_ms = 5.0;  // synaptic conductance decay
};

// Drive is expressed in mV: a constant drive d settles the membrane at
// v_rest + d, so the threshold distance is v_thresh - v_rest = 20 mV by
// default. Conductances share this unit. None of these magnitudes come from
// published values; they follow the usual integrate-and-fire ranges.
struct ReservoirConfig {
  int n_layers = 77;
  int layer_rows = 3;
  int layer_cols = 3;
  double connection_c = 1.0;     // C of the connection probability
  double lambda = 3.4;           // reach of the connection probability
  double tau_plus_ms = 20.0;     // STDP potentiation time constant
  double tau_minus_ratio = 5.0;  // tau_minus / tau_plus (5 vocal tract, 3 source)
  double a_plus = 0.005;         // max potentiation per pairing
  double a_minus = 0.00525;      // max depression per pairing
  double g_max = 1.0;            // conductance ceiling
  double g_in_max = 38.0;        // input drive ceiling, mV
  double dt_ms = 0.1;
  std::uint64_t rng_seed = 1;
  LifParams lif;

  double tau_minus_ms() const { return tau_plus_ms * tau_minus_ratio; }
  int neuron_count() const { return n_layers * layer_rows * layer_cols; }
  void validate() const;  // throws bad_config
};

struct NeuronPosition {
  int layer = 0;
  int row = 0;
  int col = 0;
};

// Unit lattice spacing on all three axes, layers stacked along the first.
double neuron_distance(const NeuronPosition& a, const NeuronPosition& b);

// C*exp(-D^2/lambda^2), clamped to [0, 1].
double connection_probability(double distance, double c, double lambda);
double connection_probability(const NeuronPosition& a, const NeuronPosition& b,
                              double c, double lambda);

struct ReservoirTopology {
  ReservoirConfig config;
  std::vector<NeuronPosition> positions;
  std::vector<std::int32_t> pre;      // synapse source neuron
  std::vector<std::int32_t> post;     // synapse target neuron
  std::vector<double> g_init;         // seeded initial conductances
  std::vector<std::vector<std::int32_t>> out_synapses;  // per neuron
  std::vector<std::vector<std::int32_t>> in_synapses;   // per neuron

  std::size_t synapse_count() const { return pre.size(); }
};

// Samples every ordered neuron pair once with the seeded generator; no self
// connections, initial conductances uniform in [0.4, 0.6]*g_max.
ReservoirTopology build_topology(const ReservoirConfig& config);

// STDP increment for a pre-minus-post spike time difference delta_ms:
// potentiation a_plus*exp(delta/tau_plus) for delta < 0, depression
// -a_minus*exp(-delta/tau_minus) for delta > 0, zero for delta == 0.
double stdp_delta(double delta_ms, const ReservoirConfig& config);

struct LifNeuronState {
  double v = 0.0;
  double refractory_until_ms = -1e300;
};

// One Euler step of the leaky integrate-and-fire membrane:
// dv = dt*((v_rest - v) + drive_mv)/tau_m, held at v_reset while refractory.
// Returns true when the neuron fires (threshold crossing at t_ms + dt_ms).
bool lif_step(LifNeuronState& state, double drive_mv, double t_ms,
              double dt_ms, const LifParams& params);

struct LiquidState {
  std::vector<double> mean_rates;  // spikes/second per neuron
};

// Per-frame input drive, one value per channel, affinely normalized per
// channel over the utterance to [0, 1] (constant channels map to 0) and
// scaled to [0, g_in_max]. Indexed [frame][channel].
std::vector<std::vector<double>> encode_input(const SpectroTemporalMap& map,
                                              double g_in_max);

// Owns an immutable topology template; run() clones the plastic conductances
// so concurrent runs on the same simulator are safe.
class ReservoirSimulator {
 public:
  explicit ReservoirSimulator(const ReservoirConfig& config);

  const ReservoirTopology& topology() const { return topology_; }

  // final_conductances, when given, receives the adapted synapse
  // conductances at the end of the utterance.
  LiquidState run(const SpectroTemporalMap& map,
                  std::vector<double>* final_conductances = nullptr) const;

 private:
  ReservoirTopology topology_;
};

// Convenience wrapper: build the seeded topology and run one utterance.
LiquidState simulate(const SpectroTemporalMap& map,
                     const ReservoirConfig& config);

// Binary state container, magic "LSTATE1": kind u8, seed u64,
// config hash u64, count u32, then count f32 mean rates. Little-endian.
std::string serialize_state(const LiquidState& state, MapKind kind,
                            std::uint64_t seed, std::uint64_t config_hash);
LiquidState parse_state(const std::string& bytes, const std::string& origin,
                        MapKind* kind = nullptr, std::uint64_t* seed = nullptr,
                        std::uint64_t* config_hash = nullptr);
void write_state(const std::filesystem::path& path, const LiquidState& state,
                 MapKind kind, std::uint64_t seed, std::uint64_t config_hash);
LiquidState read_state(const std::filesystem::path& path,
                       MapKind* kind = nullptr, std::uint64_t* seed = nullptr,
                       std::uint64_t* config_hash = nullptr);

}  // namespace lser

#endif  // LSER_RESERVOIR_HPP_
