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

#ifndef LSER_ERRORS_HPP_
#define LSER_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace lser {

// Error categories carried by every lser::Error. Kept in sync with the
// lser_status codes of the public C API (see include/lser/lser.h).
enum class Errc {
  ok = 0,
  file_not_found,
  malformed_riff,
  unsupported_encoding,
  short_signal,
  bad_argument,
  silent_frame,
  degenerate_frame,
  dimension_mismatch,
  missing_cache,
  io_error,
  bad_config,
  numeric_fault,
  internal,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace lser

#endif  // LSER_ERRORS_HPP_
