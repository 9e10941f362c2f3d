#include "concal/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#endif

namespace concal::kernels {

namespace {

std::atomic<bool> g_force_scalar{false};

bool env_force_scalar() {
  const char* v = std::getenv("CONCAL_FORCE_SCALAR");
  return v != nullptr && v[0] == '1';
}

const bool g_env_force = env_force_scalar();

}  // namespace

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

void set_force_scalar(bool force) { g_force_scalar.store(force, std::memory_order_relaxed); }

bool force_scalar() { return g_env_force || g_force_scalar.load(std::memory_order_relaxed); }

const char* active_backend() {
  return (!force_scalar() && cpu_has_avx2()) ? "avx2" : "scalar";
}

namespace {
inline bool use_avx2() {
  static const bool has = cpu_has_avx2();
  return has && !force_scalar();
}
}  // namespace

// ---------------------------------------------------------------------------
// scalar reference kernels
// ---------------------------------------------------------------------------

namespace scalar {

void neg_sq_score(const double* grid, std::size_t n, double y_hat, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = grid[i] - y_hat;
    out[i] = -(d * d);
  }
}

void min_sq_dist_score(const double* grid, std::size_t n, const double* samples, std::size_t m,
                       double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      const double d = grid[i] - samples[j];
      const double sq = d * d;
      if (sq < best) best = sq;
    }
    out[i] = -best;
  }
}

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

std::size_t mask_ge(const double* v, std::size_t n, double threshold, std::uint8_t* mask) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t in = v[i] >= threshold ? 1 : 0;
    mask[i] = in;
    count += in;
  }
  return count;
}

double masked_max(const double* v, const std::uint8_t* mask, std::size_t n) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i] && v[i] > best) best = v[i];
  }
  return best;
}

std::size_t argmax(const double* v, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

void ema_update(double* ema, const double* obs, std::size_t n, double decay) {
  const double w = 1.0 - decay;
  for (std::size_t i = 0; i < n; ++i) ema[i] = std::fma(w, obs[i], decay * ema[i]);
}

void axpy(double* y, const double* x, double a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

}  // namespace scalar

// ---------------------------------------------------------------------------
// AVX2 kernels (runtime-dispatched; compiled with per-function target attrs)
// ---------------------------------------------------------------------------

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {

namespace {

__attribute__((target("avx2,fma"))) inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

}  // namespace

__attribute__((target("avx2,fma"))) void neg_sq_score(const double* grid, std::size_t n,
                                                      double y_hat, double* out) {
  const __m256d yh = _mm256_set1_pd(y_hat);
  const __m256d sign = _mm256_set1_pd(-0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grid + i);
    const __m256d d = _mm256_sub_pd(g, yh);
    const __m256d sq = _mm256_mul_pd(d, d);
    _mm256_storeu_pd(out + i, _mm256_xor_pd(sq, sign));
  }
  for (; i < n; ++i) {
    const double d = grid[i] - y_hat;
    out[i] = -(d * d);
  }
}

__attribute__((target("avx2,fma"))) void min_sq_dist_score(const double* grid, std::size_t n,
                                                           const double* samples, std::size_t m,
                                                           double* out) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grid + i);
    __m256d best = _mm256_set1_pd(std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < m; ++j) {
      const __m256d s = _mm256_set1_pd(samples[j]);
      const __m256d d = _mm256_sub_pd(g, s);
      best = _mm256_min_pd(best, _mm256_mul_pd(d, d));
    }
    _mm256_storeu_pd(out + i, _mm256_xor_pd(best, sign));
  }
  for (; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      const double d = grid[i] - samples[j];
      const double sq = d * d;
      if (sq < best) best = sq;
    }
    out[i] = -best;
  }
}

__attribute__((target("avx2,fma"))) double sum_sq_diff(const double* a, const double* b,
                                                       std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

__attribute__((target("avx2,fma"))) double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

__attribute__((target("avx2,fma"))) std::size_t mask_ge(const double* v, std::size_t n,
                                                        double threshold, std::uint8_t* mask) {
  const __m256d t = _mm256_set1_pd(threshold);
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d cmp = _mm256_cmp_pd(_mm256_loadu_pd(v + i), t, _CMP_GE_OQ);
    const int bits = _mm256_movemask_pd(cmp);
    mask[i] = bits & 1;
    mask[i + 1] = (bits >> 1) & 1;
    mask[i + 2] = (bits >> 2) & 1;
    mask[i + 3] = (bits >> 3) & 1;
    count += static_cast<std::size_t>(__builtin_popcount(bits));
  }
  for (; i < n; ++i) {
    const std::uint8_t in = v[i] >= threshold ? 1 : 0;
    mask[i] = in;
    count += in;
  }
  return count;
}

__attribute__((target("avx2,fma"))) double masked_max(const double* v, const std::uint8_t* mask,
                                                      std::size_t n) {
  const __m256d ninf = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  __m256d best = ninf;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    std::uint32_t m4;
    __builtin_memcpy(&m4, mask + i, 4);
    const __m128i bytes = _mm_cvtsi32_si128(static_cast<int>(m4));
    const __m256i wide = _mm256_cvtepu8_epi64(bytes);
    const __m256d sel = _mm256_castsi256_pd(
        _mm256_cmpgt_epi64(wide, _mm256_setzero_si256()));
    const __m256d masked = _mm256_blendv_pd(ninf, _mm256_loadu_pd(v + i), sel);
    best = _mm256_max_pd(best, masked);
  }
  double out = -std::numeric_limits<double>::infinity();
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, best);
  for (double lane : lanes) {
    if (lane > out) out = lane;
  }
  for (; i < n; ++i) {
    if (mask[i] && v[i] > out) out = v[i];
  }
  return out;
}

__attribute__((target("avx2,fma"))) std::size_t argmax(const double* v, std::size_t n) {
  // Vector lanes keep their own running (max, index) with strict-greater
  // updates; the horizontal pass prefers the lowest index on ties.
  std::size_t i = 0;
  double best = v[0];
  std::size_t best_idx = 0;
  if (n >= 8) {
    __m256d vmax = _mm256_loadu_pd(v);
    __m256i vidx = _mm256_set_epi64x(3, 2, 1, 0);
    __m256i idx = vidx;
    const __m256i four = _mm256_set1_epi64x(4);
    for (i = 4; i + 4 <= n; i += 4) {
      idx = _mm256_add_epi64(idx, four);
      const __m256d vals = _mm256_loadu_pd(v + i);
      const __m256d gt = _mm256_cmp_pd(vals, vmax, _CMP_GT_OQ);
      vmax = _mm256_blendv_pd(vmax, vals, gt);
      vidx = _mm256_blendv_epi8(vidx, idx, _mm256_castpd_si256(gt));
    }
    alignas(32) double lane_vals[4];
    alignas(32) long long lane_idx[4];
    _mm256_store_pd(lane_vals, vmax);
    _mm256_store_si256(reinterpret_cast<__m256i*>(lane_idx), vidx);
    best = lane_vals[0];
    best_idx = static_cast<std::size_t>(lane_idx[0]);
    for (int k = 1; k < 4; ++k) {
      const auto ki = static_cast<std::size_t>(lane_idx[k]);
      if (lane_vals[k] > best || (lane_vals[k] == best && ki < best_idx)) {
        best = lane_vals[k];
        best_idx = ki;
      }
    }
  }
  for (; i < n; ++i) {
    if (v[i] > best) {
      best = v[i];
      best_idx = i;
    }
  }
  return best_idx;
}

__attribute__((target("avx2,fma"))) void ema_update(double* ema, const double* obs, std::size_t n,
                                                    double decay) {
  const __m256d d = _mm256_set1_pd(decay);
  const __m256d w = _mm256_set1_pd(1.0 - decay);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d scaled = _mm256_mul_pd(d, _mm256_loadu_pd(ema + i));
    _mm256_storeu_pd(ema + i, _mm256_fmadd_pd(w, _mm256_loadu_pd(obs + i), scaled));
  }
  const double ws = 1.0 - decay;
  for (; i < n; ++i) ema[i] = std::fma(ws, obs[i], decay * ema[i]);
}

__attribute__((target("avx2,fma"))) void axpy(double* y, const double* x, double a,
                                              std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

}  // namespace avx2
#endif  // x86_64

// ---------------------------------------------------------------------------
// dispatched entry points
// ---------------------------------------------------------------------------

#if defined(__x86_64__) || defined(_M_X64)
#define CONCAL_DISPATCH(fn, ...) \
  return use_avx2() ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__)
#else
#define CONCAL_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

void neg_sq_score(const double* grid, std::size_t n, double y_hat, double* out) {
  CONCAL_DISPATCH(neg_sq_score, grid, n, y_hat, out);
}

void min_sq_dist_score(const double* grid, std::size_t n, const double* samples, std::size_t m,
                       double* out) {
  CONCAL_DISPATCH(min_sq_dist_score, grid, n, samples, m, out);
}

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
  CONCAL_DISPATCH(sum_sq_diff, a, b, n);
}

double dot(const double* a, const double* b, std::size_t n) { CONCAL_DISPATCH(dot, a, b, n); }

std::size_t mask_ge(const double* v, std::size_t n, double threshold, std::uint8_t* mask) {
  CONCAL_DISPATCH(mask_ge, v, n, threshold, mask);
}

double masked_max(const double* v, const std::uint8_t* mask, std::size_t n) {
  CONCAL_DISPATCH(masked_max, v, mask, n);
}

std::size_t argmax(const double* v, std::size_t n) { CONCAL_DISPATCH(argmax, v, n); }

void ema_update(double* ema, const double* obs, std::size_t n, double decay) {
  CONCAL_DISPATCH(ema_update, ema, obs, n, decay);
}

void axpy(double* y, const double* x, double a, std::size_t n) {
  CONCAL_DISPATCH(axpy, y, x, a, n);
}

#undef CONCAL_DISPATCH

}  // namespace concal::kernels
