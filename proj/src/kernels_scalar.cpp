#include "kgq/kernels.hpp"

#include <cmath>

// Reference kernels. Plain loops, no pragmas: these define the semantics
// the SIMD variants are equivalence-tested against.

namespace kgq::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double diff_norm2_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

double rotate_residual_norm2_scalar(const double* h, const double* t,
                                    const double* cos_r, const double* sin_r,
                                    std::size_t d) {
    const double* h_re = h;
    const double* h_im = h + d;
    const double* t_re = t;
    const double* t_im = t + d;
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double re = h_re[i] * cos_r[i] - h_im[i] * sin_r[i] - t_re[i];
        const double im = h_re[i] * sin_r[i] + h_im[i] * cos_r[i] - t_im[i];
        acc += re * re + im * im;
    }
    return acc;
}

void adam_update_scalar(double* p, double* m, double* v, const double* g,
                        std::size_t n, double lr, double b1, double b2,
                        double eps, double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        p[i] -= lr * (m[i] * bc1) / (std::sqrt(v[i] * bc2) + eps);
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{dot_scalar, axpy_scalar, diff_norm2_scalar,
                                   rotate_residual_norm2_scalar,
                                   adam_update_scalar};
    return table;
}

}  // namespace kgq::kernels
