/*
 *  Copyright 2026 The FedAwS Simulator Authors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fedaws {

enum class ErrorCode {
  kZeroNorm,
  kDimensionMismatch,
  kNotNormalized,
  kVocabOutOfRange,
  kShapeMismatch,
  kClassOutOfRange,
  kMarginOutOfTheoryRange,
  kKTooLarge,
  kEmptyShard,
  kDuplicateClient,
  kUnknownClass,
  kCountOutOfRange,
  kParseError,
  kIndexOutOfRange,
  kSingleClass,
  kRhoZero,
  kUnbalancedShards,
  kInvalidArgument,
  kNumericFailure,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// All library failures are reported through this type; `code()` identifies
// the contract that was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Parse failures also carry the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : Error(ErrorCode::kParseError,
              "line " + std::to_string(line) + ": " + reason),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace fedaws
