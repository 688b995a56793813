// Copyright 2026 The ngramkit Authors.
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

#ifndef NGRAMKIT_ERROR_HPP_
#define NGRAMKIT_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ngramkit {

// Base of everything the library throws. The CLI maps ConfigError to exit
// code 1 and every other Error to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter outside its documented range (budget below floor, bad weights).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data that violates a precondition (empty lexicon, empty corpus, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// Malformed text input; carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ngramkit

#endif  // NGRAMKIT_ERROR_HPP_
