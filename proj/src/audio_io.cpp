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

#include "audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "errors.hpp"

namespace lser {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct EmotionCode {
  char code;
  Emotion emotion;
  const char* name;
};

constexpr EmotionCode kEmotionTable[kNumEmotions] = {
    {'W', Emotion::anger, "anger"},       {'L', Emotion::boredom, "boredom"},
    {'E', Emotion::disgust, "disgust"},   {'A', Emotion::fear, "fear"},
    {'F', Emotion::happiness, "happiness"}, {'T', Emotion::sadness, "sadness"},
    {'N', Emotion::neutral, "neutral"},
};

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 |
         static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

struct WavFormat {
  std::uint16_t audio_format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits_per_sample = 0;
};

// Parses the RIFF container and decodes the first channel of the data chunk.
AudioSignal decode_wav(const std::vector<unsigned char>& bytes,
                       const std::string& origin) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    fail(Errc::malformed_riff, origin + ": not a RIFF/WAVE file");
  }

  WavFormat fmt;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    std::uint32_t chunk_size = read_u32(chunk + 4);
    std::size_t body = pos + 8;
    if (body + chunk_size > bytes.size()) {
      // Tolerate a short final data chunk (common with streamed writers).
      if (std::memcmp(chunk, "data", 4) == 0 && body < bytes.size()) {
        chunk_size = static_cast<std::uint32_t>(bytes.size() - body);
      } else {
        fail(Errc::malformed_riff, origin + ": truncated chunk");
      }
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (chunk_size < 16) fail(Errc::malformed_riff, origin + ": short fmt chunk");
      fmt.audio_format = read_u16(chunk + 8);
      fmt.channels = read_u16(chunk + 10);
      fmt.sample_rate = read_u32(chunk + 12);
      fmt.bits_per_sample = read_u16(chunk + 22);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = chunk_size;
      break;  // assume fmt precedes data, as every writer emits it
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data == nullptr) {
    fail(Errc::malformed_riff, origin + ": missing fmt or data chunk");
  }
  if (fmt.channels == 0 || fmt.sample_rate == 0) {
    fail(Errc::malformed_riff, origin + ": zero channels or sample rate");
  }

  const bool pcm8 = fmt.audio_format == 1 && fmt.bits_per_sample == 8;
  const bool pcm16 = fmt.audio_format == 1 && fmt.bits_per_sample == 16;
  const bool f32 = fmt.audio_format == 3 && fmt.bits_per_sample == 32;
  if (!pcm8 && !pcm16 && !f32) {
    fail(Errc::unsupported_encoding,
         origin + ": unsupported encoding (format " +
             std::to_string(fmt.audio_format) + ", " +
             std::to_string(fmt.bits_per_sample) + " bit)");
  }

  const std::size_t bytes_per_sample = fmt.bits_per_sample / 8u;
  const std::size_t stride = bytes_per_sample * fmt.channels;
  const std::size_t n = stride == 0 ? 0 : data_size / stride;

  AudioSignal out;
  out.sample_rate = static_cast<int>(fmt.sample_rate);
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* s = data + i * stride;  // channel 0
    if (pcm16) {
      std::int16_t v;
      std::memcpy(&v, s, 2);
      out.samples[i] = static_cast<double>(v) / 32768.0;
    } else if (pcm8) {
      out.samples[i] = (static_cast<double>(s[0]) - 128.0) / 128.0;
    } else {
      float v;
      std::memcpy(&v, s, 4);
      out.samples[i] = static_cast<double>(v);
    }
  }
  return out;
}

}  // namespace

const char* emotion_name(Emotion e) {
  return kEmotionTable[static_cast<int>(e)].name;
}

char emotion_code(Emotion e) {
  return kEmotionTable[static_cast<int>(e)].code;
}

std::optional<Emotion> emotion_from_code(char code) {
  for (const auto& row : kEmotionTable) {
    if (row.code == code) return row.emotion;
  }
  return std::nullopt;
}

std::optional<Emotion> emotion_from_name(const std::string& name) {
  for (const auto& row : kEmotionTable) {
    if (name == row.name) return row.emotion;
  }
  return std::nullopt;
}

AudioSignal load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::file_not_found, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return decode_wav(bytes, path.string());
}

void write_wav(const std::filesystem::path& path, const AudioSignal& signal) {
  const std::uint32_t n = static_cast<std::uint32_t>(signal.samples.size());
  const std::uint32_t data_bytes = n * 2;

  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(signal.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(signal.sample_rate) * 2);
  put_u16(out, 2);   // block align
  put_u16(out, 16);  // bits
  out += "data";
  put_u32(out, data_bytes);
  for (double s : signal.samples) {
    double clamped = std::clamp(s, -1.0, 1.0);
    auto q = static_cast<long>(std::lround(clamped * 32768.0));
    q = std::clamp(q, -32768L, 32767L);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(Errc::io_error, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) fail(Errc::io_error, "write failed for " + path.string());
}

CorpusScan scan_corpus(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) {
    fail(Errc::file_not_found, "corpus directory not found: " + root.string());
  }

  CorpusScan scan;
  std::vector<fs::path> wavs;
  for (const auto& it : fs::recursive_directory_iterator(root)) {
    if (!it.is_regular_file()) continue;
    std::string ext = it.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav") wavs.push_back(it.path());
  }
  std::sort(wavs.begin(), wavs.end());

  for (const auto& path : wavs) {
    const std::string stem = path.stem().string();
    if (stem.size() < 7) {
      scan.warnings.push_back("skipped " + path.string() +
                              ": stem shorter than the SStttEv convention");
      continue;
    }
    auto emotion = emotion_from_code(stem[5]);
    if (!emotion) {
      scan.warnings.push_back("skipped " + path.string() +
                              ": unknown emotion letter '" + stem[5] + "'");
      continue;
    }
    CorpusEntry entry;
    entry.path = path;
    entry.speaker_id = stem.substr(0, 2);
    entry.text_id = stem.substr(2, 3);
    entry.emotion = *emotion;
    entry.version = stem[6];
    try {
      entry.sample_rate = load_wav(path).sample_rate;
    } catch (const Error& e) {
      scan.warnings.push_back("skipped " + path.string() + ": " + e.what());
      continue;
    }
    scan.entries.push_back(std::move(entry));
  }
  return scan;
}

std::vector<double> hamming_window(int length) {
  if (length <= 0) fail(Errc::bad_argument, "window length must be positive");
  std::vector<double> w(static_cast<std::size_t>(length));
  if (length == 1) {
    w[0] = 1.0;
    return w;
  }
  for (int n = 0; n < length; ++n) {
    w[static_cast<std::size_t>(n)] =
        0.54 - 0.46 * std::cos(2.0 * kPi * n / (length - 1));
  }
  return w;
}

FrameSequence frame_signal(const AudioSignal& signal, double window_ms,
                           double hop_ms) {
  if (!(hop_ms > 0.0) || window_ms < hop_ms) {
    fail(Errc::bad_argument, "need window_ms >= hop_ms > 0");
  }
  const int window = static_cast<int>(
      std::lround(window_ms * 1e-3 * signal.sample_rate));
  const int hop =
      static_cast<int>(std::lround(hop_ms * 1e-3 * signal.sample_rate));
  const auto n = static_cast<long>(signal.samples.size());
  if (window <= 0 || hop <= 0) {
    fail(Errc::bad_argument, "window and hop must span at least one sample");
  }
  if (n < window) {
    fail(Errc::short_signal,
         "signal of " + std::to_string(n) + " samples is shorter than one " +
             std::to_string(window) + "-sample window");
  }

  const std::vector<double> w = hamming_window(window);
  const long count = (n - window) / hop + 1;

  FrameSequence seq;
  seq.window_length = window;
  seq.hop = hop;
  seq.window_kind = WindowKind::hamming;
  seq.frames.resize(static_cast<std::size_t>(count));
  for (long k = 0; k < count; ++k) {
    auto& frame = seq.frames[static_cast<std::size_t>(k)];
    frame.resize(static_cast<std::size_t>(window));
    const double* src = signal.samples.data() + k * hop;
    for (int i = 0; i < window; ++i) {
      frame[static_cast<std::size_t>(i)] = src[i] * w[static_cast<std::size_t>(i)];
    }
  }
  return seq;
}

}  // namespace lser
