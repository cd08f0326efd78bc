// Copyright 2026 The PLR Authors
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

#ifndef PLR_ERROR_H_
#define PLR_ERROR_H_

#include <stdexcept>
#include <string>

namespace plr {

enum class ErrorCode {
  kConfig,       // invalid configuration or specification
  kInput,        // shape or range mismatch on a call
  kMissingData,  // dataset files absent
  kUnavailable,  // requested facility not enabled
  kIo,           // filesystem or serialization failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline Error ConfigError(const std::string& what) {
  return Error(ErrorCode::kConfig, "configuration error: " + what);
}
inline Error InputError(const std::string& what) {
  return Error(ErrorCode::kInput, "input error: " + what);
}
inline Error MissingDataError(const std::string& what) {
  return Error(ErrorCode::kMissingData, "missing data: " + what);
}
inline Error UnavailableError(const std::string& what) {
  return Error(ErrorCode::kUnavailable, "unavailable: " + what);
}
inline Error IoError(const std::string& what) {
  return Error(ErrorCode::kIo, "i/o error: " + what);
}

}  // namespace plr

#endif  // PLR_ERROR_H_
