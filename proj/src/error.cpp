// Copyright 2026 The tumorloc Authors. All Rights Reserved.
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

#include "tumorloc/error.hpp"

namespace tumorloc {

std::string_view ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kCorruptImage: return "CorruptImage";
    case ErrorCode::kEmptyImage: return "EmptyImage";
    case ErrorCode::kNoTiles: return "NoTiles";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kInsufficientTissue: return "InsufficientTissue";
    case ErrorCode::kDegenerateStains: return "DegenerateStains";
    case ErrorCode::kSingularStainMatrix: return "SingularStainMatrix";
    case ErrorCode::kModelLoadError: return "ModelLoadError";
    case ErrorCode::kInferenceError: return "InferenceError";
    case ErrorCode::kShapeError: return "ShapeError";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kDuplicateTile: return "DuplicateTile";
    case ErrorCode::kCoordOutOfGrid: return "CoordOutOfGrid";
    case ErrorCode::kInvalidRing: return "InvalidRing";
    case ErrorCode::kUnknownColormap: return "UnknownColormap";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kOneClassOnly: return "OneClassOnly";
    case ErrorCode::kUndefinedMetric: return "UndefinedMetric";
    case ErrorCode::kInsufficientClass: return "InsufficientClass";
    case ErrorCode::kMissingPatientId: return "MissingPatientId";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace tumorloc
