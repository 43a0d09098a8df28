//
// Copyright 2026 The privagg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "privagg/error.hpp"

namespace privagg {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidSpec: return "invalid-spec";
    case ErrorCode::kRggUnconnectable: return "rgg-unconnectable";
    case ErrorCode::kNotAnEdge: return "not-an-edge";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kMissingObservation: return "missing-observation";
    case ErrorCode::kInsufficientTrials: return "insufficient-trials";
    case ErrorCode::kConfig: return "config-error";
    case ErrorCode::kIo: return "io-error";
  }
  return "unknown";
}

}  // namespace privagg
