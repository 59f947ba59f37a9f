#include "kgq/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

// AVX2+FMA variants. This translation unit is compiled with -mavx2 -mfma;
// it must only be entered after the runtime feature check in dispatch.

namespace kgq::kernels {
namespace {

inline double hsum256(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                              acc);
    }
    double sum = hsum256(acc);
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double diff_norm2_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double sum = hsum256(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

double rotate_residual_norm2_avx2(const double* h, const double* t,
                                  const double* cos_r, const double* sin_r,
                                  std::size_t d) {
    const double* h_re = h;
    const double* h_im = h + d;
    const double* t_re = t;
    const double* t_im = t + d;
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= d; i += 4) {
        const __m256d hre = _mm256_loadu_pd(h_re + i);
        const __m256d him = _mm256_loadu_pd(h_im + i);
        const __m256d c = _mm256_loadu_pd(cos_r + i);
        const __m256d s = _mm256_loadu_pd(sin_r + i);
        // re = hre*c - him*s - tre ; im = hre*s + him*c - tim
        __m256d re = _mm256_fmsub_pd(hre, c, _mm256_mul_pd(him, s));
        re = _mm256_sub_pd(re, _mm256_loadu_pd(t_re + i));
        __m256d im = _mm256_fmadd_pd(hre, s, _mm256_mul_pd(him, c));
        im = _mm256_sub_pd(im, _mm256_loadu_pd(t_im + i));
        acc = _mm256_fmadd_pd(re, re, acc);
        acc = _mm256_fmadd_pd(im, im, acc);
    }
    double sum = hsum256(acc);
    for (; i < d; ++i) {
        const double re = h_re[i] * cos_r[i] - h_im[i] * sin_r[i] - t_re[i];
        const double im = h_re[i] * sin_r[i] + h_im[i] * cos_r[i] - t_im[i];
        sum += re * re + im * im;
    }
    return sum;
}

void adam_update_avx2(double* p, double* m, double* v, const double* g,
                      std::size_t n, double lr, double b1, double b2,
                      double eps, double bc1, double bc2) {
    const __m256d vb1 = _mm256_set1_pd(b1);
    const __m256d vb2 = _mm256_set1_pd(b2);
    const __m256d vr1 = _mm256_set1_pd(1.0 - b1);
    const __m256d vr2 = _mm256_set1_pd(1.0 - b2);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vbc1 = _mm256_set1_pd(bc1);
    const __m256d vbc2 = _mm256_set1_pd(bc2);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vg = _mm256_loadu_pd(g + i);
        __m256d vm = _mm256_loadu_pd(m + i);
        __m256d vv = _mm256_loadu_pd(v + i);
        vm = _mm256_fmadd_pd(vb1, vm, _mm256_mul_pd(vr1, vg));
        vv = _mm256_fmadd_pd(vb2, vv, _mm256_mul_pd(vr2, _mm256_mul_pd(vg, vg)));
        _mm256_storeu_pd(m + i, vm);
        _mm256_storeu_pd(v + i, vv);
        const __m256d denom =
            _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vv, vbc2)), veps);
        const __m256d step =
            _mm256_div_pd(_mm256_mul_pd(vlr, _mm256_mul_pd(vm, vbc1)), denom);
        _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
    }
    for (; i < n; ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        p[i] -= lr * (m[i] * bc1) / (std::sqrt(v[i] * bc2) + eps);
    }
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{dot_avx2, axpy_avx2, diff_norm2_avx2,
                                   rotate_residual_norm2_avx2,
                                   adam_update_avx2};
    return table;
}

}  // namespace kgq::kernels

#endif  // x86-64
