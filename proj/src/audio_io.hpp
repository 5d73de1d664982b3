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
// WAV loading, Emo-DB style corpus cataloguing, and frame/window cutting.

#ifndef LSER_AUDIO_IO_HPP_
#define LSER_AUDIO_IO_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lser {

// The seven emotion classes of the Berlin emotional speech corpus, in fixed
// index order. The index doubles as the class id used by the readout.
enum class Emotion : int {
  anger = 0,
  boredom = 1,
  disgust = 2,
  fear = 3,
  happiness = 4,
  sadness = 5,
  neutral = 6,
};

inline constexpr int kNumEmotions = 7;

const char* emotion_name(Emotion e);
char emotion_code(Emotion e);  // Emo-DB filename letter: W L E A F T N
std::optional<Emotion> emotion_from_code(char code);
std::optional<Emotion> emotion_from_name(const std::string& name);

struct AudioSignal {
  std::vector<double> samples;  // normalized to [-1, 1]
  int sample_rate = 0;          // Hz
};

struct CorpusEntry {
  std::filesystem::path path;
  std::string speaker_id;  // two characters
  std::string text_id;     // three characters
  Emotion emotion = Emotion::neutral;
  char version = 'a';
  int sample_rate = 0;  // read from the WAV header during the scan
};

struct CorpusScan {
  std::vector<CorpusEntry> entries;  // sorted by path
  std::vector<std::string> warnings;  // skipped files, one message each
};

enum class WindowKind { hamming };

struct FrameSequence {
  std::vector<std::vector<double>> frames;  // each of window_length samples
  int window_length = 0;  // samples
  int hop = 0;            // samples
  WindowKind window_kind = WindowKind::hamming;
};

// Loads a PCM 8/16-bit or IEEE float32 RIFF/WAV file. Multi-channel input
// takes channel 0. Distinct error codes: file_not_found, malformed_riff,
// unsupported_encoding.
AudioSignal load_wav(const std::filesystem::path& path);

// Writes mono 16-bit PCM. Samples are clamped to [-1, 1] and quantized.
void write_wav(const std::filesystem::path& path, const AudioSignal& signal);

// Catalogues every *.wav under root (recursive). Emotion is decoded from the
// sixth character of the file stem per the Emo-DB naming convention; files
// with an unknown letter or a malformed stem are skipped with a warning.
CorpusScan scan_corpus(const std::filesystem::path& root);

// Hamming coefficients 0.54 - 0.46*cos(2*pi*n/(L-1)).
std::vector<double> hamming_window(int length);

// Cuts left-aligned frames of window_ms every hop_ms and applies the Hamming
// window multiplicatively. Frame k starts at sample k*hop; the tail shorter
// than one window is dropped.
FrameSequence frame_signal(const AudioSignal& signal, double window_ms,
                           double hop_ms);

}  // namespace lser

#endif  // LSER_AUDIO_IO_HPP_
