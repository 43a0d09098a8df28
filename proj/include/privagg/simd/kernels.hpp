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

// Distance kernels behind the k-nearest-neighbour MI estimators. Each kernel
// has a scalar reference and vector variants; the vector variants perform the
// same IEEE operations lane by lane, so results are bitwise identical.

#ifndef PRIVAGG_SIMD_KERNELS_HPP_
#define PRIVAGG_SIMD_KERNELS_HPP_

#include <cstddef>
#include <string_view>
#include <vector>

namespace privagg::simd {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view IsaName(Isa isa);

struct Kernels {
  Isa isa;
  // dist[j] = |col[j] - v|
  void (*abs_diff)(const double* col, double v, double* dist, std::size_t n);
  // dist[j] = max(dist[j], |col[j] - v|)
  void (*abs_diff_max)(const double* col, double v, double* dist, std::size_t n);
  // out[j] = max(a[j], b[j])
  void (*elementwise_max)(const double* a, const double* b, double* out, std::size_t n);
  // #{j : dist[j] < r}
  std::size_t (*count_below)(const double* dist, std::size_t n, double r);
};

const Kernels& ScalarKernels();

// Variants compiled into this binary and usable on this CPU.
std::vector<const Kernels*> AvailableKernels();

// Best available variant; PRIVAGG_SIMD=scalar in the environment pins the
// scalar path.
const Kernels& ActiveKernels();

}  // namespace privagg::simd

#endif  // PRIVAGG_SIMD_KERNELS_HPP_
