// Copyright (c) 2026 The BIP Authors
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

#ifndef BIP_COMMON_ERROR_H_
#define BIP_COMMON_ERROR_H_

#include <sstream>
#include <stdexcept>
#include <string>

namespace bip {

// Coarse error classes. Values 2/3/4 double as CLI exit codes.
enum class ErrorCode {
  kUsage = 2,     // bad arguments, invalid config, shape mismatch
  kData = 3,      // unreadable/inconsistent data, unknown symbols
  kNumeric = 4,   // diverged or non-finite computation
  kIo = 5,        // filesystem failures
  kState = 6,     // checkpoint/version mismatch, corrupt files
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Throw(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace bip

// Internal invariant check. Message stream syntax:
//   BIP_CHECK(cond) << "context " << value;
#define BIP_CHECK(cond)                                        \
  if (!(cond))                                                 \
  ::bip::internal::CheckFailure(__FILE__, __LINE__, #cond).stream()

namespace bip::internal {

class CheckFailure {
 public:
  CheckFailure(const char* file, int line, const char* cond) {
    stream_ << file << ":" << line << " check failed: " << cond << " ";
  }
  [[noreturn]] ~CheckFailure() noexcept(false) {
    throw Error(ErrorCode::kUsage, stream_.str());
  }
  std::ostream& stream() { return stream_; }

 private:
  std::ostringstream stream_;
};

}  // namespace bip::internal

#endif  // BIP_COMMON_ERROR_H_
