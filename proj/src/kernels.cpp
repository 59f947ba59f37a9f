#include "kgq/kernels.hpp"

namespace kgq::kernels {
namespace {

const KernelTable* g_active_table = nullptr;
Backend g_active_backend = Backend::Scalar;

Backend detect_best() {
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        return Backend::Avx2;
    return Backend::Scalar;
#elif defined(__aarch64__)
    return Backend::Neon;
#else
    return Backend::Scalar;
#endif
}

const KernelTable* table_for(Backend b) {
    switch (b) {
        case Backend::Scalar:
            return &scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
        case Backend::Avx2:
            return &avx2_table();
#endif
#if defined(__aarch64__)
        case Backend::Neon:
            return &neon_table();
#endif
        default:
            return nullptr;
    }
}

void ensure_selected() {
    if (g_active_table == nullptr) {
        g_active_backend = detect_best();
        g_active_table = table_for(g_active_backend);
    }
}

}  // namespace

bool backend_available(Backend b) {
    if (b == Backend::Scalar) return true;
#if defined(__x86_64__) || defined(_M_X64)
    if (b == Backend::Avx2)
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#endif
#if defined(__aarch64__)
    if (b == Backend::Neon) return true;
#endif
    return false;
}

Backend active() {
    ensure_selected();
    return g_active_backend;
}

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::Scalar:
            return "scalar";
        case Backend::Avx2:
            return "avx2";
        case Backend::Neon:
            return "neon";
    }
    return "unknown";
}

bool force_backend(Backend b) {
    if (!backend_available(b)) return false;
    g_active_backend = b;
    g_active_table = table_for(b);
    return true;
}

double dot(const double* a, const double* b, std::size_t n) {
    ensure_selected();
    return g_active_table->dot(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    ensure_selected();
    g_active_table->axpy(alpha, x, y, n);
}

double diff_norm2(const double* a, const double* b, std::size_t n) {
    ensure_selected();
    return g_active_table->diff_norm2(a, b, n);
}

double rotate_residual_norm2(const double* h, const double* t,
                             const double* cos_r, const double* sin_r,
                             std::size_t d) {
    ensure_selected();
    return g_active_table->rotate_residual_norm2(h, t, cos_r, sin_r, d);
}

void adam_update(double* p, double* m, double* v, const double* g,
                 std::size_t n, double lr, double b1, double b2, double eps,
                 double bc1, double bc2) {
    ensure_selected();
    g_active_table->adam_update(p, m, v, g, n, lr, b1, b2, eps, bc1, bc2);
}

}  // namespace kgq::kernels
