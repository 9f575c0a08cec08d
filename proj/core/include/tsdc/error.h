// Copyright 2026 The tsdc Authors
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

#ifndef TSDC_ERROR_H_
#define TSDC_ERROR_H_

#include <sstream>
#include <stdexcept>
#include <string>

namespace tsdc {

// Thrown when a caller breaks a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Base class for recoverable runtime failures (I/O, parsing, divergence).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN or Inf reached a place where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed or incompatible on-disk artifact.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class FingerprintError : public FormatError {
 public:
  using FormatError::FormatError;
};

namespace internal {

template <typename... Args>
std::string StrCat(const Args&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

}  // namespace internal
}  // namespace tsdc

#define TSDC_CHECK(cond, ...)                                      \
  do {                                                             \
    if (!(cond)) {                                                 \
      throw ::tsdc::ContractViolation(                             \
          ::tsdc::internal::StrCat(#cond, ": ", __VA_ARGS__));     \
    }                                                              \
  } while (false)

#endif  // TSDC_ERROR_H_
