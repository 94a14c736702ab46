// Copyright 2026 The ramsemcom Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace ramsemcom {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or configuration value.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Data refers to something that does not exist (unknown patch id, scene mismatch).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// A block violates the wire constraints and cannot be encoded.
class EncodingError : public Error {
 public:
  using Error::Error;
};

/// Wire data has a bad magic or unsupported format version.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Wire data failed its CRC check.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// Wire data ended before the declared content.
class LengthError : public Error {
 public:
  using Error::Error;
};

/// An experiment or environment configuration that cannot be realised.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a documented precondition (e.g. an action outside the action set).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Numerical training failure (divergence, persistent non-finite values).
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure in the harness.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ramsemcom
