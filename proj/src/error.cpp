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

#include "fedaws/error.hpp"

namespace fedaws {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kZeroNorm: return "ZeroNorm";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNotNormalized: return "NotNormalized";
    case ErrorCode::kVocabOutOfRange: return "VocabOutOfRange";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kClassOutOfRange: return "ClassOutOfRange";
    case ErrorCode::kMarginOutOfTheoryRange: return "MarginOutOfTheoryRange";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kEmptyShard: return "EmptyShard";
    case ErrorCode::kDuplicateClient: return "DuplicateClient";
    case ErrorCode::kUnknownClass: return "UnknownClass";
    case ErrorCode::kCountOutOfRange: return "CountOutOfRange";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kRhoZero: return "RhoZero";
    case ErrorCode::kUnbalancedShards: return "UnbalancedShards";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNumericFailure: return "NumericFailure";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace fedaws
