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

#ifndef LSER_HASH_HPP_
#define LSER_HASH_HPP_

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace lser {

// FNV-1a, used for content-addressed cache keys and stream seeding.
class Fnv1a64 {
 public:
  Fnv1a64& update(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }

  Fnv1a64& update(std::string_view s) { return update(s.data(), s.size()); }

  Fnv1a64& update(std::uint64_t v) {
    unsigned char b[8];
    std::memcpy(b, &v, 8);
    return update(b, 8);
  }

  std::uint64_t digest() const { return state_; }

  std::string hex() const {
    static const char* k = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t v = state_;
    for (int i = 15; i >= 0; --i) {
      out[static_cast<std::size_t>(i)] = k[v & 0xf];
      v >>= 4;
    }
    return out;
  }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a64(std::string_view s) {
  return Fnv1a64().update(s).digest();
}

// Derives an independent seed for a named substream of a master seed.
inline std::uint64_t substream_seed(std::uint64_t master, std::string_view name,
                                    std::uint64_t index = 0) {
  return Fnv1a64().update(master).update(name).update(index).digest();
}

}  // namespace lser

#endif  // LSER_HASH_HPP_
