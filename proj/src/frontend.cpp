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

#include "frontend.hpp"

#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>

#include "errors.hpp"

namespace lser {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kGammatoneOrder = 4;
constexpr double kBandwidthFactor = 1.019;
constexpr char kMapMagic[6] = {'L', 'S', 'M', 'A', 'P', '1'};

// Magnitude response at angular frequency omega of the real filter obtained
// by taking Re() of the four-stage complex one-pole cascade with pole p.
double cascade_gain_at(std::complex<double> pole, double omega) {
  const std::complex<double> z_inv = std::exp(std::complex<double>(0.0, -omega));
  const std::complex<double> direct =
      std::pow(1.0 - pole * z_inv, -kGammatoneOrder);
  const std::complex<double> conjugate =
      std::pow(1.0 - std::conj(pole) * z_inv, -kGammatoneOrder);
  return std::abs(0.5 * (direct + conjugate));
}

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
      fail(Errc::io_error, origin + ": truncated map file");
    }
    T v;
    std::memcpy(&v, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
};

}  // namespace

double erb_rate(double f_hz) {
  if (f_hz < 0.0) fail(Errc::bad_argument, "negative frequency");
  return 21.4 * std::log10(4.37 * f_hz / 1000.0 + 1.0);
}

double erb_rate_to_hz(double erb) {
  return (std::pow(10.0, erb / 21.4) - 1.0) * 1000.0 / 4.37;
}

double erb_bandwidth(double f_hz) {
  return 24.7 * (4.37 * f_hz / 1000.0 + 1.0);
}

ErbScaleGrid make_erb_grid(int n_channels, double fmin, double fmax,
                           double sample_rate) {
  if (n_channels < 2) fail(Errc::bad_argument, "need at least two channels");
  if (!(fmin > 0.0) || !(fmax > fmin) || fmax > sample_rate / 2.0) {
    fail(Errc::bad_argument,
         "band edges must satisfy 0 < fmin < fmax <= Nyquist");
  }
  ErbScaleGrid grid;
  grid.fmin = fmin;
  grid.fmax = fmax;
  grid.center_frequencies.resize(static_cast<std::size_t>(n_channels));
  const double lo = erb_rate(fmin);
  const double hi = erb_rate(fmax);
  for (int j = 0; j < n_channels; ++j) {
    const double e = lo + (hi - lo) * j / (n_channels - 1);
    grid.center_frequencies[static_cast<std::size_t>(j)] = erb_rate_to_hz(e);
  }
  // Pin the endpoints exactly; the inverse map is only accurate to rounding.
  grid.center_frequencies.front() = fmin;
  grid.center_frequencies.back() = fmax;
  return grid;
}

const char* map_kind_name(MapKind kind) {
  return kind == MapKind::source ? "source" : "vocal_tract";
}

GammatoneFilterbank::GammatoneFilterbank(const ErbScaleGrid& grid,
                                         double sample_rate)
    : sample_rate_(sample_rate) {
  if (!(sample_rate > 0.0)) fail(Errc::bad_argument, "sample rate must be > 0");
  poles_.reserve(grid.center_frequencies.size());
  gains_.reserve(grid.center_frequencies.size());
  for (double cf : grid.center_frequencies) {
    if (cf > sample_rate / 2.0) {
      fail(Errc::bad_argument, "center frequency " + std::to_string(cf) +
                                   " above Nyquist");
    }
    const double bandwidth = kBandwidthFactor * erb_bandwidth(cf);
    const double radius = std::exp(-2.0 * kPi * bandwidth / sample_rate);
    const double omega = 2.0 * kPi * cf / sample_rate;
    const std::complex<double> pole = radius * std::exp(std::complex<double>(0.0, omega));
    poles_.push_back(pole);
    gains_.push_back(1.0 / cascade_gain_at(pole, omega));
  }
}

std::vector<double> GammatoneFilterbank::filter_channel(
    std::span<const double> x, int channel) const {
  const std::complex<double> p = poles_[static_cast<std::size_t>(channel)];
  const double g = gains_[static_cast<std::size_t>(channel)];
  std::complex<double> s1{}, s2{}, s3{}, s4{};
  std::vector<double> y(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    s1 = x[n] + p * s1;
    s2 = s1 + p * s2;
    s3 = s2 + p * s3;
    s4 = s3 + p * s4;
    y[n] = g * s4.real();
  }
  return y;
}

std::vector<std::vector<double>> GammatoneFilterbank::filter(
    std::span<const double> x) const {
  std::vector<std::vector<double>> out(poles_.size());
  for (int ch = 0; ch < num_channels(); ++ch) {
    out[static_cast<std::size_t>(ch)] = filter_channel(x, ch);
  }
  return out;
}

SpectroTemporalMap channel_energy_map(
    const std::vector<std::vector<double>>& channels, double hop_ms,
    double sample_rate, const ErbScaleGrid& grid, double log_floor_db) {
  if (channels.empty()) fail(Errc::bad_argument, "no channels");
  const std::size_t len = channels.front().size();
  for (const auto& c : channels) {
    if (c.size() != len) {
      fail(Errc::dimension_mismatch, "channels differ in length");
    }
  }
  const int seg =
      static_cast<int>(std::lround(hop_ms * 1e-3 * sample_rate));
  if (seg <= 0) fail(Errc::bad_argument, "segment shorter than one sample");
  const int n_frames = static_cast<int>(len / static_cast<std::size_t>(seg));
  const double energy_floor = std::pow(10.0, log_floor_db / 10.0);

  SpectroTemporalMap map;
  map.n_channels = static_cast<int>(channels.size());
  map.n_frames = n_frames;
  map.frame_hop_ms = hop_ms;
  map.grid = grid;
  map.kind = MapKind::source;
  map.log_floor_db = log_floor_db;
  map.values.resize(static_cast<std::size_t>(map.n_channels) *
                    static_cast<std::size_t>(n_frames));
  for (int j = 0; j < map.n_channels; ++j) {
    const auto& ch = channels[static_cast<std::size_t>(j)];
    for (int t = 0; t < n_frames; ++t) {
      double energy = 0.0;
      const double* s = ch.data() + static_cast<std::size_t>(t) * seg;
      for (int i = 0; i < seg; ++i) energy += s[i] * s[i];
      map.at(j, t) = 10.0 * std::log10(std::max(energy, energy_floor));
    }
  }
  return map;
}

SpectroTemporalMap warp_lp_spectra(const std::vector<LpCoefficients>& analyses,
                                   const ErbScaleGrid& grid,
                                   double sample_rate, double hop_ms,
                                   double log_floor_db) {
  SpectroTemporalMap map;
  map.n_channels = static_cast<int>(grid.center_frequencies.size());
  map.n_frames = static_cast<int>(analyses.size());
  map.frame_hop_ms = hop_ms;
  map.grid = grid;
  map.kind = MapKind::vocal_tract;
  map.log_floor_db = log_floor_db;
  map.values.resize(static_cast<std::size_t>(map.n_channels) *
                    static_cast<std::size_t>(map.n_frames));
  for (int t = 0; t < map.n_frames; ++t) {
    const LpSpectrum spec = lp_spectrum(analyses[static_cast<std::size_t>(t)],
                                        grid.center_frequencies, sample_rate);
    for (int j = 0; j < map.n_channels; ++j) {
      map.at(j, t) =
          std::max(spec.magnitudes_db[static_cast<std::size_t>(j)],
                   log_floor_db);
    }
  }
  return map;
}

std::string serialize_map(const SpectroTemporalMap& map) {
  std::string out;
  out.append(kMapMagic, sizeof(kMapMagic));
  write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(map.kind));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(map.n_channels));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(map.n_frames));
  write_pod<float>(out, static_cast<float>(map.frame_hop_ms));
  write_pod<double>(out, map.grid.fmin);
  write_pod<double>(out, map.grid.fmax);
  write_pod<float>(out, static_cast<float>(map.log_floor_db));
  for (double cf : map.grid.center_frequencies) {
    write_pod<float>(out, static_cast<float>(cf));
  }
  for (double v : map.values) write_pod<float>(out, static_cast<float>(v));
  return out;
}

SpectroTemporalMap parse_map(const std::string& bytes,
                             const std::string& origin) {
  if (bytes.size() < 6 || std::memcmp(bytes.data(), kMapMagic, 6) != 0) {
    fail(Errc::io_error, origin + ": bad map magic");
  }
  ByteCursor cur{bytes, origin, 6};
  SpectroTemporalMap map;
  map.kind = static_cast<MapKind>(cur.read<std::uint8_t>());
  map.n_channels = static_cast<int>(cur.read<std::uint32_t>());
  map.n_frames = static_cast<int>(cur.read<std::uint32_t>());
  map.frame_hop_ms = cur.read<float>();
  map.grid.fmin = cur.read<double>();
  map.grid.fmax = cur.read<double>();
  map.log_floor_db = cur.read<float>();
  if (map.n_channels <= 0 || map.n_channels > 1 << 16 || map.n_frames < 0 ||
      map.n_frames > 1 << 24) {
    fail(Errc::io_error, origin + ": implausible map dimensions");
  }
  map.grid.center_frequencies.resize(static_cast<std::size_t>(map.n_channels));
  for (auto& cf : map.grid.center_frequencies) cf = cur.read<float>();
  map.values.resize(static_cast<std::size_t>(map.n_channels) *
                    static_cast<std::size_t>(map.n_frames));
  for (auto& v : map.values) v = cur.read<float>();
  return map;
}

void write_map(const std::filesystem::path& path,
               const SpectroTemporalMap& map) {
  const std::string out = serialize_map(map);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(Errc::io_error, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) fail(Errc::io_error, "write failed for " + path.string());
}

SpectroTemporalMap read_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::file_not_found, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return parse_map(bytes, path.string());
}

}  // namespace lser
