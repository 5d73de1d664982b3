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

#include "lp_analysis.hpp"

#include <cmath>
#include <complex>

#include "errors.hpp"

namespace lser {

std::vector<double> autocorrelation(std::span<const double> frame,
                                    int max_lag) {
  const auto n = static_cast<long>(frame.size());
  if (max_lag < 0 || max_lag >= n) {
    fail(Errc::bad_argument,
         "max_lag " + std::to_string(max_lag) + " must be < frame length " +
             std::to_string(n));
  }
  std::vector<double> r(static_cast<std::size_t>(max_lag) + 1, 0.0);
  for (int k = 0; k <= max_lag; ++k) {
    double sum = 0.0;
    for (long i = 0; i + k < n; ++i) {
      sum += frame[static_cast<std::size_t>(i)] *
             frame[static_cast<std::size_t>(i + k)];
    }
    r[static_cast<std::size_t>(k)] = sum;
  }
  return r;
}

LpCoefficients levinson_durbin(std::span<const double> r, int order) {
  if (order < 0) fail(Errc::bad_argument, "order must be >= 0");
  if (static_cast<long>(r.size()) < order + 1) {
    fail(Errc::bad_argument, "need order+1 autocorrelation lags");
  }
  if (!(r[0] > 0.0)) {
    fail(Errc::silent_frame, "autocorrelation r[0] <= 0 (silent frame)");
  }

  LpCoefficients out;
  out.order = order;
  out.a.assign(static_cast<std::size_t>(order), 0.0);

  double e = r[0];
  std::vector<double> prev(static_cast<std::size_t>(order), 0.0);
  for (int m = 1; m <= order; ++m) {
    double acc = r[static_cast<std::size_t>(m)];
    for (int i = 1; i < m; ++i) {
      acc -= out.a[static_cast<std::size_t>(i - 1)] *
             r[static_cast<std::size_t>(m - i)];
    }
    const double k = acc / e;
    if (!(std::abs(k) < 1.0)) {
      fail(Errc::degenerate_frame,
           "reflection coefficient magnitude >= 1 at stage " +
               std::to_string(m));
    }
    prev = out.a;
    out.a[static_cast<std::size_t>(m - 1)] = k;
    for (int i = 1; i < m; ++i) {
      out.a[static_cast<std::size_t>(i - 1)] =
          prev[static_cast<std::size_t>(i - 1)] -
          k * prev[static_cast<std::size_t>(m - i - 1)];
    }
    e *= 1.0 - k * k;
  }
  out.error_energy = e;
  return out;
}

LpCoefficients analyze_frame(std::span<const double> frame, int order) {
  std::vector<double> r = autocorrelation(frame, order);
  if (r[0] < kSilentFrameEnergy) {
    LpCoefficients flat;
    flat.order = order;
    flat.a.assign(static_cast<std::size_t>(order), 0.0);
    flat.error_energy = kSilentFrameEnergy;
    return flat;
  }
  return levinson_durbin(r, order);
}

int analysis_index_for_segment(long segment, int window_length, int hop,
                               std::size_t n_frames) {
  const long shift =
      std::lround((window_length - hop) / 2.0 / static_cast<double>(hop));
  const long k = segment - shift;
  if (k < 0) return 0;
  if (k >= static_cast<long>(n_frames)) return static_cast<int>(n_frames) - 1;
  return static_cast<int>(k);
}

ResidualSignal residual(const AudioSignal& signal,
                        const std::vector<LpCoefficients>& analyses, int hop,
                        int window_length) {
  if (hop <= 0 || window_length < hop) {
    fail(Errc::bad_argument, "need window_length >= hop > 0");
  }
  if (analyses.empty()) fail(Errc::dimension_mismatch, "no analyses given");
  const long n_frames = static_cast<long>(analyses.size());
  const long span = n_frames * hop;
  if (span > static_cast<long>(signal.samples.size())) {
    fail(Errc::dimension_mismatch,
         "analysis count " + std::to_string(n_frames) +
             " exceeds the signal span at hop " + std::to_string(hop));
  }

  ResidualSignal out;
  out.sample_rate = signal.sample_rate;
  out.samples.resize(static_cast<std::size_t>(span));
  const double* x = signal.samples.data();
  for (long t = 0; t < n_frames; ++t) {
    const int k =
        analysis_index_for_segment(t, window_length, hop, analyses.size());
    const auto& a = analyses[static_cast<std::size_t>(k)].a;
    const int order = analyses[static_cast<std::size_t>(k)].order;
    for (long n = t * hop; n < (t + 1) * hop; ++n) {
      double pred = 0.0;
      for (int i = 1; i <= order; ++i) {
        if (n - i >= 0) pred += a[static_cast<std::size_t>(i - 1)] * x[n - i];
      }
      out.samples[static_cast<std::size_t>(n)] = x[n] - pred;
    }
  }
  return out;
}

LpSpectrum lp_spectrum(const LpCoefficients& coeffs,
                       std::span<const double> grid_hz, double sample_rate) {
  if (!(sample_rate > 0.0)) fail(Errc::bad_argument, "sample rate must be > 0");
  LpSpectrum out;
  out.grid_hz.assign(grid_hz.begin(), grid_hz.end());
  out.magnitudes_db.resize(grid_hz.size());
  const double gain = std::sqrt(coeffs.error_energy);
  for (std::size_t j = 0; j < grid_hz.size(); ++j) {
    const double f = grid_hz[j];
    if (f < 0.0 || f > sample_rate / 2.0) {
      fail(Errc::bad_argument, "grid frequency " + std::to_string(f) +
                                   " outside [0, Nyquist]");
    }
    const double omega = 2.0 * 3.14159265358979323846 * f / sample_rate;
    std::complex<double> a_of_z(1.0, 0.0);
    for (int i = 1; i <= coeffs.order; ++i) {
      a_of_z -= coeffs.a[static_cast<std::size_t>(i - 1)] *
                std::exp(std::complex<double>(0.0, -omega * i));
    }
    out.magnitudes_db[j] = 20.0 * std::log10(gain / std::abs(a_of_z));
  }
  return out;
}

}  // namespace lser
