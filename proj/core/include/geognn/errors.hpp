// Copyright 2026 The GeoGNN Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace geognn {

// Malformed input data (molecule files, JSON records, feature vocabularies).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parse failure that can be pinned to a 1-based line of the input.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& message)
      : DataError("line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// NaN/Inf produced by a computation, or a divergent training run.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or incompatible checkpoint.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace geognn
