// Copyright 2026 The Muskwheel Authors
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

#ifndef MUSKWHEEL_CORE_ERRORS_H_
#define MUSKWHEEL_CORE_ERRORS_H_

#include <stdexcept>
#include <string>

namespace muskwheel {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input outside the domain an operation is defined on (e.g. joint limits).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Caller violated an interface contract (bad dimensions, unknown mask).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Iterative solver gave up; carries the last residual norm.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// NaN or inf appeared during time integration.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

// Training loss became non-finite.
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Control optimization produced a non-finite loss.
class OptimizationError : public Error {
 public:
  using Error::Error;
};

// Malformed, truncated or version-mismatched file or message.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Configuration rejected (unknown key, missing seed, bad value).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace muskwheel

#endif  // MUSKWHEEL_CORE_ERRORS_H_
