#include "kgq/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

// NEON variants (float64x2). NEON is baseline on aarch64, so no runtime
// feature check is needed beyond the architecture itself.

namespace kgq::kernels {
namespace {

inline double hsum128(float64x2_t v) { return vaddvq_f64(v); }

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
    }
    double sum = hsum128(acc);
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t vy = vld1q_f64(y + i);
        vy = vfmaq_f64(vy, va, vld1q_f64(x + i));
        vst1q_f64(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double diff_norm2_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        acc = vfmaq_f64(acc, d, d);
    }
    double sum = hsum128(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

double rotate_residual_norm2_neon(const double* h, const double* t,
                                  const double* cos_r, const double* sin_r,
                                  std::size_t d) {
    const double* h_re = h;
    const double* h_im = h + d;
    const double* t_re = t;
    const double* t_im = t + d;
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= d; i += 2) {
        const float64x2_t hre = vld1q_f64(h_re + i);
        const float64x2_t him = vld1q_f64(h_im + i);
        const float64x2_t c = vld1q_f64(cos_r + i);
        const float64x2_t s = vld1q_f64(sin_r + i);
        float64x2_t re = vmulq_f64(hre, c);
        re = vfmsq_f64(re, him, s);
        re = vsubq_f64(re, vld1q_f64(t_re + i));
        float64x2_t im = vmulq_f64(hre, s);
        im = vfmaq_f64(im, him, c);
        im = vsubq_f64(im, vld1q_f64(t_im + i));
        acc = vfmaq_f64(acc, re, re);
        acc = vfmaq_f64(acc, im, im);
    }
    double sum = hsum128(acc);
    for (; i < d; ++i) {
        const double re = h_re[i] * cos_r[i] - h_im[i] * sin_r[i] - t_re[i];
        const double im = h_re[i] * sin_r[i] + h_im[i] * cos_r[i] - t_im[i];
        sum += re * re + im * im;
    }
    return sum;
}

void adam_update_neon(double* p, double* m, double* v, const double* g,
                      std::size_t n, double lr, double b1, double b2,
                      double eps, double bc1, double bc2) {
    const float64x2_t vb1 = vdupq_n_f64(b1);
    const float64x2_t vb2 = vdupq_n_f64(b2);
    const float64x2_t vr1 = vdupq_n_f64(1.0 - b1);
    const float64x2_t vr2 = vdupq_n_f64(1.0 - b2);
    const float64x2_t veps = vdupq_n_f64(eps);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t vg = vld1q_f64(g + i);
        float64x2_t vm = vld1q_f64(m + i);
        float64x2_t vv = vld1q_f64(v + i);
        vm = vfmaq_f64(vmulq_f64(vr1, vg), vb1, vm);
        vv = vfmaq_f64(vmulq_f64(vr2, vmulq_f64(vg, vg)), vb2, vv);
        vst1q_f64(m + i, vm);
        vst1q_f64(v + i, vv);
        const float64x2_t denom =
            vaddq_f64(vsqrtq_f64(vmulq_n_f64(vv, bc2)), veps);
        const float64x2_t step =
            vdivq_f64(vmulq_n_f64(vmulq_n_f64(vm, bc1), lr), denom);
        vst1q_f64(p + i, vsubq_f64(vld1q_f64(p + i), step));
    }
    for (; i < n; ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        p[i] -= lr * (m[i] * bc1) / (std::sqrt(v[i] * bc2) + eps);
    }
}

}  // namespace

const KernelTable& neon_table() {
    static const KernelTable table{dot_neon, axpy_neon, diff_norm2_neon,
                                   rotate_residual_norm2_neon,
                                   adam_update_neon};
    return table;
}

}  // namespace kgq::kernels

#endif  // aarch64
