#pragma once

#include <cstddef>
#include <cstdint>

// Data-parallel inner loops of the toolkit: candidate-grid scoring, threshold
// masks, masked reductions, EMA updates and small vector ops. Each kernel has
// a scalar reference implementation and an AVX2 variant; entry points at
// kernels:: level dispatch at runtime (CPU feature detection, overridable via
// set_force_scalar or CONCAL_FORCE_SCALAR=1).
//
// Exactness contract, relied on by the equivalence tests:
//   - neg_sq_score, min_sq_dist_score, mask_ge, masked_max, argmax,
//     ema_update, axpy: bitwise identical between backends (elementwise ops,
//     fixed rounding per element; ema/axpy use fused multiply-add in both).
//   - dot, sum_sq_diff: reduction order differs between backends; results
//     agree to relative 1e-12.

namespace concal::kernels {

bool cpu_has_avx2();
void set_force_scalar(bool force);
bool force_scalar();
// "avx2" or "scalar", as currently dispatched.
const char* active_backend();

namespace scalar {
void neg_sq_score(const double* grid, std::size_t n, double y_hat, double* out);
void min_sq_dist_score(const double* grid, std::size_t n, const double* samples, std::size_t m,
                       double* out);
double sum_sq_diff(const double* a, const double* b, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
std::size_t mask_ge(const double* v, std::size_t n, double threshold, std::uint8_t* mask);
double masked_max(const double* v, const std::uint8_t* mask, std::size_t n);
std::size_t argmax(const double* v, std::size_t n);
void ema_update(double* ema, const double* obs, std::size_t n, double decay);
void axpy(double* y, const double* x, double a, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
void neg_sq_score(const double* grid, std::size_t n, double y_hat, double* out);
void min_sq_dist_score(const double* grid, std::size_t n, const double* samples, std::size_t m,
                       double* out);
double sum_sq_diff(const double* a, const double* b, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
std::size_t mask_ge(const double* v, std::size_t n, double threshold, std::uint8_t* mask);
double masked_max(const double* v, const std::uint8_t* mask, std::size_t n);
std::size_t argmax(const double* v, std::size_t n);
void ema_update(double* ema, const double* obs, std::size_t n, double decay);
void axpy(double* y, const double* x, double a, std::size_t n);
}  // namespace avx2
#endif

// Dispatched entry points.

// out[i] = -(grid[i] - y_hat)^2
void neg_sq_score(const double* grid, std::size_t n, double y_hat, double* out);

// out[i] = -min_j (grid[i] - samples[j])^2; m >= 1
void min_sq_dist_score(const double* grid, std::size_t n, const double* samples, std::size_t m,
                       double* out);

// sum_i (a[i]-b[i])^2
double sum_sq_diff(const double* a, const double* b, std::size_t n);

double dot(const double* a, const double* b, std::size_t n);

// mask[i] = v[i] >= threshold; returns count of set entries
std::size_t mask_ge(const double* v, std::size_t n, double threshold, std::uint8_t* mask);

// max over v[i] with mask[i] != 0; -inf when mask is empty
double masked_max(const double* v, const std::uint8_t* mask, std::size_t n);

// index of maximum, ties to the lowest index; n >= 1
std::size_t argmax(const double* v, std::size_t n);

// ema[i] = decay*ema[i] + (1-decay)*obs[i]
void ema_update(double* ema, const double* obs, std::size_t n, double decay);

// y[i] += a*x[i]
void axpy(double* y, const double* x, double a, std::size_t n);

}  // namespace concal::kernels
