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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "audio_io.hpp"
#include "errors.hpp"
#include "rng.hpp"

using namespace lser;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lser-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Raw RIFF writer used as the byte-level reference; independent of
// lser::write_wav.
void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

std::string pcm16_wav_bytes(const std::vector<std::int16_t>& samples,
                            std::uint32_t rate) {
  std::string s = "RIFF";
  put_u32(s, 36 + 2 * static_cast<std::uint32_t>(samples.size()));
  s += "WAVEfmt ";
  put_u32(s, 16);
  put_u16(s, 1);
  put_u16(s, 1);
  put_u32(s, rate);
  put_u32(s, rate * 2);
  put_u16(s, 2);
  put_u16(s, 16);
  s += "data";
  put_u32(s, 2 * static_cast<std::uint32_t>(samples.size()));
  for (std::int16_t v : samples) put_u16(s, static_cast<std::uint16_t>(v));
  return s;
}

void write_bytes(const fs::path& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("load_wav scales 16-bit PCM to [-1, 1]") {
  const fs::path dir = temp_dir("wav-scale");
  write_bytes(dir / "one.wav", pcm16_wav_bytes({32767}, 16000));
  const AudioSignal sig = load_wav(dir / "one.wav");
  REQUIRE(sig.samples.size() == 1);
  CHECK(sig.sample_rate == 16000);
  CHECK(sig.samples[0] == doctest::Approx(32767.0 / 32768.0).epsilon(1e-12));
}

TEST_CASE("load_wav reads silence and the header rate") {
  const fs::path dir = temp_dir("wav-silence");
  write_bytes(dir / "zeros.wav",
              pcm16_wav_bytes(std::vector<std::int16_t>(160, 0), 16000));
  const AudioSignal sig = load_wav(dir / "zeros.wav");
  REQUIRE(sig.samples.size() == 160);
  CHECK(sig.sample_rate == 16000);
  for (double v : sig.samples) CHECK(v == 0.0);
}

TEST_CASE("load_wav byte-level oracle: 44-byte header plus two samples") {
  // Hand-built container per the RIFF layout: values {0, -32768} must map
  // to {0.0, -1.0}.
  const fs::path dir = temp_dir("wav-oracle");
  write_bytes(dir / "two.wav", pcm16_wav_bytes({0, -32768}, 8000));
  REQUIRE(fs::file_size(dir / "two.wav") == 48);  // 44-byte header + 4 bytes
  const AudioSignal sig = load_wav(dir / "two.wav");
  REQUIRE(sig.samples.size() == 2);
  CHECK(sig.sample_rate == 8000);
  CHECK(sig.samples[0] == 0.0);
  CHECK(sig.samples[1] == -1.0);
}

TEST_CASE("load_wav takes channel 0 of multi-channel input") {
  std::string s = "RIFF";
  put_u32(s, 36 + 8);
  s += "WAVEfmt ";
  put_u32(s, 16);
  put_u16(s, 1);
  put_u16(s, 2);  // stereo
  put_u32(s, 16000);
  put_u32(s, 64000);
  put_u16(s, 4);
  put_u16(s, 16);
  s += "data";
  put_u32(s, 8);
  put_u16(s, 1000);   // L0
  put_u16(s, 60000);  // R0 (-5536 as signed)
  put_u16(s, 2000);   // L1
  put_u16(s, 60000);  // R1
  const fs::path dir = temp_dir("wav-stereo");
  write_bytes(dir / "st.wav", s);
  const AudioSignal sig = load_wav(dir / "st.wav");
  REQUIRE(sig.samples.size() == 2);
  CHECK(sig.samples[0] == doctest::Approx(1000.0 / 32768.0));
  CHECK(sig.samples[1] == doctest::Approx(2000.0 / 32768.0));
}

TEST_CASE("load_wav distinct error values") {
  const fs::path dir = temp_dir("wav-errors");

  CHECK_THROWS_WITH_AS(load_wav(dir / "absent.wav"),
                       doctest::Contains("cannot open"), Error);
  try {
    load_wav(dir / "absent.wav");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::file_not_found);
  }

  write_bytes(dir / "garbage.wav", "definitely not RIFF data");
  try {
    load_wav(dir / "garbage.wav");
    FAIL("expected malformed_riff");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::malformed_riff);
  }

  // 24-bit PCM is not supported.
  std::string s = "RIFF";
  put_u32(s, 36 + 3);
  s += "WAVEfmt ";
  put_u32(s, 16);
  put_u16(s, 1);
  put_u16(s, 1);
  put_u32(s, 16000);
  put_u32(s, 48000);
  put_u16(s, 3);
  put_u16(s, 24);
  s += "data";
  put_u32(s, 3);
  s += std::string(3, '\0');
  write_bytes(dir / "pcm24.wav", s);
  try {
    load_wav(dir / "pcm24.wav");
    FAIL("expected unsupported_encoding");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::unsupported_encoding);
  }
}

TEST_CASE("wav round trip is exact to one quantization step") {
  const fs::path dir = temp_dir("wav-roundtrip");
  Rng rng(99);
  AudioSignal sig;
  sig.sample_rate = 16000;
  for (int i = 0; i < 4096; ++i) sig.samples.push_back(rng.uniform(-1.0, 1.0));
  write_wav(dir / "rt.wav", sig);
  const AudioSignal back = load_wav(dir / "rt.wav");
  REQUIRE(back.samples.size() == sig.samples.size());
  CHECK(back.sample_rate == sig.sample_rate);
  for (std::size_t i = 0; i < sig.samples.size(); ++i) {
    CHECK(std::abs(back.samples[i] - sig.samples[i]) <= 1.0 / 32768.0);
  }
}

TEST_CASE("scan_corpus decodes the Emo-DB naming convention") {
  const fs::path dir = temp_dir("corpus");
  const std::string wav = pcm16_wav_bytes(std::vector<std::int16_t>(16, 0), 16000);
  write_bytes(dir / "03a01Wa.wav", wav);
  write_bytes(dir / "16b10Td.wav", wav);
  write_bytes(dir / "03a01Xa.wav", wav);  // unknown emotion letter

  const CorpusScan scan = scan_corpus(dir);
  REQUIRE(scan.entries.size() == 2);
  REQUIRE(scan.warnings.size() == 1);
  CHECK(scan.warnings[0].find("03a01Xa") != std::string::npos);

  CHECK(scan.entries[0].speaker_id == "03");
  CHECK(scan.entries[0].text_id == "a01");
  CHECK(scan.entries[0].emotion == Emotion::anger);
  CHECK(scan.entries[0].version == 'a');
  CHECK(scan.entries[0].sample_rate == 16000);

  CHECK(scan.entries[1].speaker_id == "16");
  CHECK(scan.entries[1].text_id == "b10");
  CHECK(scan.entries[1].emotion == Emotion::sadness);
  CHECK(scan.entries[1].version == 'd');
}

TEST_CASE("scan_corpus is deterministic") {
  const fs::path dir = temp_dir("corpus-det");
  const std::string wav = pcm16_wav_bytes(std::vector<std::int16_t>(16, 0), 16000);
  for (const char* name : {"10a02Fb.wav", "03a01Na.wav", "08b09Lc.wav"}) {
    write_bytes(dir / name, wav);
  }
  const CorpusScan a = scan_corpus(dir);
  const CorpusScan b = scan_corpus(dir);
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].path == b.entries[i].path);
    CHECK(a.entries[i].emotion == b.entries[i].emotion);
  }
  // Sorted by path.
  CHECK(a.entries[0].path.filename() == "03a01Na.wav");
  CHECK(a.entries[1].path.filename() == "08b09Lc.wav");
  CHECK(a.entries[2].path.filename() == "10a02Fb.wav");
}

TEST_CASE("frame_signal counts and window application") {
  AudioSignal sig;
  sig.sample_rate = 16000;

  SUBCASE("480 samples give one frame") {
    sig.samples.assign(480, 0.5);
    const FrameSequence seq = frame_signal(sig, 30.0, 5.0);
    CHECK(seq.frames.size() == 1);
    CHECK(seq.window_length == 480);
    CHECK(seq.hop == 80);
  }
  SUBCASE("560 samples give two frames") {
    sig.samples.assign(560, 0.5);
    const FrameSequence seq = frame_signal(sig, 30.0, 5.0);
    CHECK(seq.frames.size() == 2);
  }
  SUBCASE("constant-one signal reproduces the Hamming window") {
    sig.samples.assign(480, 1.0);
    const FrameSequence seq = frame_signal(sig, 30.0, 5.0);
    const std::vector<double> w = hamming_window(480);
    REQUIRE(seq.frames[0].size() == w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(seq.frames[0][i] == doctest::Approx(w[i]).epsilon(1e-15));
    }
    CHECK(w[0] == doctest::Approx(0.08));
    CHECK(w[479 / 2 + 1] > 0.99);  // near-center sample close to 1
  }
  SUBCASE("short signal is a distinct error") {
    sig.samples.assign(100, 0.0);
    try {
      frame_signal(sig, 30.0, 5.0);
      FAIL("expected short_signal");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::short_signal);
      CHECK(std::string(e.what()).find("480") != std::string::npos);
      CHECK(std::string(e.what()).find("100") != std::string::npos);
    }
  }
}

TEST_CASE("frame count matches the closed form on random sizes") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const int window = 2 + static_cast<int>(rng.uniform_index(600));
    const int hop = 1 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(window)));
    const long n = window + static_cast<long>(rng.uniform_index(5000));
    AudioSignal sig;
    sig.sample_rate = 1000;  // 1 ms per sample keeps ms == samples
    sig.samples.assign(static_cast<std::size_t>(n), 0.25);
    const FrameSequence seq =
        frame_signal(sig, static_cast<double>(window), static_cast<double>(hop));
    const long expected = (n - window) / hop + 1;
    CHECK(static_cast<long>(seq.frames.size()) == expected);
  }
}

TEST_CASE("emotion letter table") {
  CHECK(emotion_from_code('W') == Emotion::anger);
  CHECK(emotion_from_code('L') == Emotion::boredom);
  CHECK(emotion_from_code('E') == Emotion::disgust);
  CHECK(emotion_from_code('A') == Emotion::fear);
  CHECK(emotion_from_code('F') == Emotion::happiness);
  CHECK(emotion_from_code('T') == Emotion::sadness);
  CHECK(emotion_from_code('N') == Emotion::neutral);
  CHECK(!emotion_from_code('Q').has_value());
  for (int e = 0; e < kNumEmotions; ++e) {
    const auto emotion = static_cast<Emotion>(e);
    CHECK(emotion_from_code(emotion_code(emotion)) == emotion);
    CHECK(emotion_from_name(emotion_name(emotion)) == emotion);
  }
}
