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
// ERB-scaled auditory front-end: the gammatone filterbank turns the LP
// residual into a log energy map, and the per-frame all-pole responses are
// sampled on the same ERB grid. Both outputs share the 77 x T shape.

#ifndef LSER_FRONTEND_HPP_
#define LSER_FRONTEND_HPP_

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lp_analysis.hpp"

namespace lser {

// Glasberg-Moore ERB-rate scale, 21.4*log10(4.37*f/1000 + 1).
double erb_rate(double f_hz);
double erb_rate_to_hz(double erb);
// Equivalent rectangular bandwidth 24.7*(4.37*f/1000 + 1).
double erb_bandwidth(double f_hz);

struct ErbScaleGrid {
  std::vector<double> center_frequencies;  // strictly increasing, Hz
  double fmin = 0.0;
  double fmax = 0.0;
};

// Center frequencies equally spaced on the ERB-rate scale with the endpoints
// pinned to fmin and fmax exactly.
ErbScaleGrid make_erb_grid(int n_channels, double fmin, double fmax,
                           double sample_rate);

enum class MapKind : std::uint8_t { source = 0, vocal_tract = 1 };

const char* map_kind_name(MapKind kind);

struct SpectroTemporalMap {
  std::vector<double> values;  // channel-major, n_channels x n_frames, dB
  int n_channels = 0;
  int n_frames = 0;
  double frame_hop_ms = 5.0;
  ErbScaleGrid grid;
  MapKind kind = MapKind::source;
  double log_floor_db = -80.0;

  double& at(int channel, int frame) {
    return values[static_cast<std::size_t>(channel) *
                      static_cast<std::size_t>(n_frames) +
                  static_cast<std::size_t>(frame)];
  }
  double at(int channel, int frame) const {
    return values[static_cast<std::size_t>(channel) *
                      static_cast<std::size_t>(n_frames) +
                  static_cast<std::size_t>(frame)];
  }
};

// Fourth-order gammatone filterbank, one channel per grid frequency. Each
// channel is a cascade of four complex one-pole stages with decay
// 2*pi*1.019*ERB(cf), normalized to unit magnitude response at cf.
class GammatoneFilterbank {
 public:
  GammatoneFilterbank(const ErbScaleGrid& grid, double sample_rate);

  // Returns one filtered signal per channel.
  std::vector<std::vector<double>> filter(std::span<const double> x) const;

  // Single-channel variant.
  std::vector<double> filter_channel(std::span<const double> x,
                                     int channel) const;

  int num_channels() const { return static_cast<int>(poles_.size()); }
  double sample_rate() const { return sample_rate_; }

 private:
  std::vector<std::complex<double>> poles_;
  std::vector<double> gains_;
  double sample_rate_ = 0.0;
};

// Log energy of non-overlapping hop_ms segments per channel, clamped at the
// energy floor 10^(log_floor_db/10). A trailing partial segment is dropped.
SpectroTemporalMap channel_energy_map(
    const std::vector<std::vector<double>>& channels, double hop_ms,
    double sample_rate, const ErbScaleGrid& grid, double log_floor_db);

// Samples each frame's all-pole response at the grid frequencies; entries
// are clamped from below at log_floor_db.
SpectroTemporalMap warp_lp_spectra(const std::vector<LpCoefficients>& analyses,
                                   const ErbScaleGrid& grid,
                                   double sample_rate, double hop_ms,
                                   double log_floor_db);

// Binary map container, magic "LSMAP1": kind u8, n_channels u32,
// n_frames u32, hop f32, fmin f64, fmax f64, log_floor f32, grid f32[n_ch],
// then row-major (channel-major) f32 values. Little-endian throughout.
std::string serialize_map(const SpectroTemporalMap& map);
SpectroTemporalMap parse_map(const std::string& bytes,
                             const std::string& origin);
void write_map(const std::filesystem::path& path,
               const SpectroTemporalMap& map);
SpectroTemporalMap read_map(const std::filesystem::path& path);

}  // namespace lser

#endif  // LSER_FRONTEND_HPP_
