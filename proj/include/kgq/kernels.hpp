#pragma once

#include <cstddef>

// Arithmetic inner loops used by the encoder, scorer, optimizer, and
// evaluator. Each kernel has a scalar reference implementation and, where
// the host supports it, a SIMD variant (AVX2+FMA on x86-64, NEON on
// aarch64) selected once at startup. Complex vectors use a split layout:
// the first d doubles are real parts, the next d are imaginary parts.

namespace kgq::kernels {

enum class Backend { Scalar, Avx2, Neon };

struct KernelTable {
    double (*dot)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    double (*diff_norm2)(const double*, const double*, std::size_t);
    double (*rotate_residual_norm2)(const double*, const double*, const double*,
                                    const double*, std::size_t);
    void (*adam_update)(double*, double*, double*, const double*, std::size_t,
                        double, double, double, double, double, double);
};

const KernelTable& scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table();
#endif
#if defined(__aarch64__)
const KernelTable& neon_table();
#endif

// Backend chosen for this process (best available unless forced).
Backend active();
const char* backend_name(Backend b);
bool backend_available(Backend b);

// Force a specific backend; returns false and leaves the selection
// untouched if the host cannot run it. Used by equivalence tests.
bool force_backend(Backend b);

// --- dispatched entry points -------------------------------------------

// sum_i a[i]*b[i]
double dot(const double* a, const double* b, std::size_t n);

// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);

// sum_i (a[i]-b[i])^2
double diff_norm2(const double* a, const double* b, std::size_t n);

// sum_i |h_i * r_i - t_i|^2 over d complex components, with r_i given as
// (cos, sin) of its phase; h and t are split-layout arrays of 2d doubles.
double rotate_residual_norm2(const double* h, const double* t,
                             const double* cos_r, const double* sin_r,
                             std::size_t d);

// One adaptive-moment step over n parameters:
//   m = b1*m + (1-b1)*g;  v = b2*v + (1-b2)*g^2
//   p -= lr * (m*bc1) / (sqrt(v*bc2) + eps)
// bc1/bc2 are the precomputed bias corrections 1/(1-b^step).
void adam_update(double* p, double* m, double* v, const double* g,
                 std::size_t n, double lr, double b1, double b2, double eps,
                 double bc1, double bc2);

}  // namespace kgq::kernels
