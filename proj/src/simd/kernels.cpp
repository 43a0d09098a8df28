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

#include "privagg/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define PRIVAGG_HAVE_X86 1
#endif
#if defined(__aarch64__) && defined(__ARM_NEON)
#include <arm_neon.h>
#define PRIVAGG_HAVE_NEON 1
#endif

namespace privagg::simd {

namespace {

void AbsDiffScalar(const double* col, double v, double* dist, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) dist[j] = std::fabs(col[j] - v);
}

void AbsDiffMaxScalar(const double* col, double v, double* dist, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double d = std::fabs(col[j] - v);
    dist[j] = d > dist[j] ? d : dist[j];
  }
}

void ElementwiseMaxScalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) out[j] = b[j] > a[j] ? b[j] : a[j];
}

std::size_t CountBelowScalar(const double* dist, std::size_t n, double r) {
  std::size_t count = 0;
  for (std::size_t j = 0; j < n; ++j) count += dist[j] < r;
  return count;
}

#ifdef PRIVAGG_HAVE_X86

#define PRIVAGG_AVX2 __attribute__((target("avx2")))

// Clearing the sign bit is exactly fabs.
PRIVAGG_AVX2 inline __m256d Abs256(__m256d x) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x);
}

// _mm256_max_pd(a, b) returns b when either is NaN or they compare equal,
// which matches the scalar "d > dist ? d : dist" with a = d, b = dist.
PRIVAGG_AVX2 void AbsDiffAvx2(const double* col, double v, double* dist, std::size_t n) {
  const __m256d vv = _mm256_set1_pd(v);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    _mm256_storeu_pd(dist + j, Abs256(_mm256_sub_pd(_mm256_loadu_pd(col + j), vv)));
  }
  AbsDiffScalar(col + j, v, dist + j, n - j);
}

PRIVAGG_AVX2 void AbsDiffMaxAvx2(const double* col, double v, double* dist, std::size_t n) {
  const __m256d vv = _mm256_set1_pd(v);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d d = Abs256(_mm256_sub_pd(_mm256_loadu_pd(col + j), vv));
    _mm256_storeu_pd(dist + j, _mm256_max_pd(d, _mm256_loadu_pd(dist + j)));
  }
  AbsDiffMaxScalar(col + j, v, dist + j, n - j);
}

PRIVAGG_AVX2 void ElementwiseMaxAvx2(const double* a, const double* b, double* out,
                                     std::size_t n) {
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    _mm256_storeu_pd(out + j, _mm256_max_pd(_mm256_loadu_pd(b + j), _mm256_loadu_pd(a + j)));
  }
  ElementwiseMaxScalar(a + j, b + j, out + j, n - j);
}

PRIVAGG_AVX2 std::size_t CountBelowAvx2(const double* dist, std::size_t n, double r) {
  const __m256d vr = _mm256_set1_pd(r);
  std::size_t count = 0;
  std::size_t j = 0;
  for (; j + 16 <= n; j += 16) {
    const int m0 = _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(dist + j), vr, _CMP_LT_OQ));
    const int m1 =
        _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(dist + j + 4), vr, _CMP_LT_OQ));
    const int m2 =
        _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(dist + j + 8), vr, _CMP_LT_OQ));
    const int m3 =
        _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(dist + j + 12), vr, _CMP_LT_OQ));
    count += __builtin_popcount(static_cast<unsigned>(m0 | m1 << 4 | m2 << 8 | m3 << 12));
  }
  for (; j + 4 <= n; j += 4) {
    const int m = _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(dist + j), vr, _CMP_LT_OQ));
    count += __builtin_popcount(static_cast<unsigned>(m));
  }
  return count + CountBelowScalar(dist + j, n - j, r);
}

#undef PRIVAGG_AVX2

const Kernels kAvx2{Isa::kAvx2, AbsDiffAvx2, AbsDiffMaxAvx2, ElementwiseMaxAvx2, CountBelowAvx2};

bool CpuHasAvx2() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
}

#endif  // PRIVAGG_HAVE_X86

#ifdef PRIVAGG_HAVE_NEON

void AbsDiffNeon(const double* col, double v, double* dist, std::size_t n) {
  const float64x2_t vv = vdupq_n_f64(v);
  std::size_t j = 0;
  for (; j + 2 <= n; j += 2) vst1q_f64(dist + j, vabdq_f64(vld1q_f64(col + j), vv));
  AbsDiffScalar(col + j, v, dist + j, n - j);
}

// vbslq keeps the scalar tie and NaN behaviour that vmaxq would not.
void AbsDiffMaxNeon(const double* col, double v, double* dist, std::size_t n) {
  const float64x2_t vv = vdupq_n_f64(v);
  std::size_t j = 0;
  for (; j + 2 <= n; j += 2) {
    const float64x2_t d = vabdq_f64(vld1q_f64(col + j), vv);
    const float64x2_t cur = vld1q_f64(dist + j);
    vst1q_f64(dist + j, vbslq_f64(vcgtq_f64(d, cur), d, cur));
  }
  AbsDiffMaxScalar(col + j, v, dist + j, n - j);
}

void ElementwiseMaxNeon(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t j = 0;
  for (; j + 2 <= n; j += 2) {
    const float64x2_t va = vld1q_f64(a + j);
    const float64x2_t vb = vld1q_f64(b + j);
    vst1q_f64(out + j, vbslq_f64(vcgtq_f64(vb, va), vb, va));
  }
  ElementwiseMaxScalar(a + j, b + j, out + j, n - j);
}

std::size_t CountBelowNeon(const double* dist, std::size_t n, double r) {
  const float64x2_t vr = vdupq_n_f64(r);
  uint64x2_t acc = vdupq_n_u64(0);
  std::size_t j = 0;
  for (; j + 2 <= n; j += 2) {
    acc = vsubq_u64(acc, vcltq_f64(vld1q_f64(dist + j), vr));
  }
  return vgetq_lane_u64(acc, 0) + vgetq_lane_u64(acc, 1) + CountBelowScalar(dist + j, n - j, r);
}

const Kernels kNeon{Isa::kNeon, AbsDiffNeon, AbsDiffMaxNeon, ElementwiseMaxNeon, CountBelowNeon};

#endif  // PRIVAGG_HAVE_NEON

const Kernels kScalar{Isa::kScalar, AbsDiffScalar, AbsDiffMaxScalar, ElementwiseMaxScalar,
                      CountBelowScalar};

const Kernels& Select() {
  const char* pin = std::getenv("PRIVAGG_SIMD");
  if (pin != nullptr && std::strcmp(pin, "scalar") == 0) return kScalar;
  return *AvailableKernels().back();
}

}  // namespace

std::string_view IsaName(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

const Kernels& ScalarKernels() { return kScalar; }

std::vector<const Kernels*> AvailableKernels() {
  std::vector<const Kernels*> out{&kScalar};
#ifdef PRIVAGG_HAVE_X86
  if (CpuHasAvx2()) out.push_back(&kAvx2);
#endif
#ifdef PRIVAGG_HAVE_NEON
  out.push_back(&kNeon);
#endif
  return out;
}

const Kernels& ActiveKernels() {
  static const Kernels& active = Select();
  return active;
}

}  // namespace privagg::simd
