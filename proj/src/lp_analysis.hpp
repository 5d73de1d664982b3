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
// Per-frame linear prediction: autocorrelation method, Levinson-Durbin,
// inverse-filter residual, and the all-pole frequency response. The
// prediction convention is x~(n) = sum_i a_i x(n-i), e(n) = x(n) - x~(n).

#ifndef LSER_LP_ANALYSIS_HPP_
#define LSER_LP_ANALYSIS_HPP_

#include <span>
#include <vector>

#include "audio_io.hpp"

namespace lser {

struct LpCoefficients {
  std::vector<double> a;       // predictor coefficients a1..aM
  int order = 0;               // M
  double error_energy = 0.0;   // minimized quadratic error E
};

struct ResidualSignal {
  std::vector<double> samples;  // e(n), covers the analyzed span
  int sample_rate = 0;
};

struct LpSpectrum {
  std::vector<double> magnitudes_db;  // 20*log10(g/|A|) on the grid
  std::vector<double> grid_hz;
};

// Energy threshold below which a frame counts as silent; callers substitute
// the flat-spectrum fallback instead of failing (see analyze_frame).
inline constexpr double kSilentFrameEnergy = 1e-12;

// Biased, unnormalized autocorrelation r[k] = sum_n frame[n]*frame[n+k].
std::vector<double> autocorrelation(std::span<const double> frame, int max_lag);

// Solves the autocorrelation normal equations by the Levinson-Durbin
// recursion. Errors: silent_frame when r[0] <= 0, degenerate_frame on a
// reflection coefficient reaching magnitude 1.
LpCoefficients levinson_durbin(std::span<const double> r, int order);

// Windowed frame -> coefficients, substituting a flat spectrum with
// error_energy = kSilentFrameEnergy for silent frames.
LpCoefficients analyze_frame(std::span<const double> frame, int order);

// Index of the analysis frame whose window is centered on hop segment t
// (frames are left-aligned, so the nearest center lags by about half a
// window), clamped to the available frames.
int analysis_index_for_segment(long segment, int window_length, int hop,
                               std::size_t n_frames);

// Inverse filtering with per-hop coefficient switching. Segment t covers
// samples [t*hop, (t+1)*hop) and uses the frame-centered coefficients given
// by analysis_index_for_segment; prediction history is the continuous input
// signal, zero before sample 0. Residual length is analyses.size()*hop.
ResidualSignal residual(const AudioSignal& signal,
                        const std::vector<LpCoefficients>& analyses, int hop,
                        int window_length);

// All-pole magnitude response 20*log10(g/|A(e^{i 2 pi f/fs})|) with gain
// g = sqrt(error_energy), evaluated by direct polynomial summation.
LpSpectrum lp_spectrum(const LpCoefficients& coeffs,
                       std::span<const double> grid_hz, double sample_rate);

}  // namespace lser

#endif  // LSER_LP_ANALYSIS_HPP_
