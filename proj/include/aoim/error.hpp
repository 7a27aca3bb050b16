// Copyright 2026 The aoi-maintain Authors
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

#ifndef AOIM_ERROR_HPP_
#define AOIM_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace aoim {

// Numeric values are mirrored by aoim_status in aoim.h.
enum class ErrorCode : int {
  kConfig = 1,
  kUsage = 2,
  kCapability = 3,
  kNumerical = 4,
  kStatistics = 5,
  kIo = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Invalid configuration; the message names the offending field.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCode::kConfig, what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what)
      : Error(ErrorCode::kUsage, what) {}
};

class CapabilityError : public Error {
 public:
  explicit CapabilityError(const std::string& what)
      : Error(ErrorCode::kCapability, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorCode::kNumerical, what) {}
};

class StatisticsError : public Error {
 public:
  explicit StatisticsError(const std::string& what)
      : Error(ErrorCode::kStatistics, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::kIo, what) {}
};

}  // namespace aoim

#endif  // AOIM_ERROR_HPP_
