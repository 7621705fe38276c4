// AVX2/FMA variants of the kernel table. This translation unit is compiled
// with -mavx2 -mfma and must only be entered after a runtime cpuid check;
// nothing here is inlined into other TUs.

#include "kernels_detail.hpp"

#if defined(__x86_64__) || defined(__i386__) || defined(_M_X64)
#define M2_X86 1
#else
#define M2_X86 0
#endif

#if M2_X86 && defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace m2::kernels::detail {
namespace {

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double r = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_avx2(double* x, double alpha, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

void add_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

double sum_avx2(const double* x, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
        acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    double r = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) r += x[i];
    return r;
}

// 4x8 register-blocked FMA kernel, B rows broadcast-free (A broadcast).
void gemm_nn_avx2(std::size_t m, std::size_t n, std::size_t k, double alpha,
                  const double* a, std::size_t lda,
                  const double* b, std::size_t ldb,
                  double beta, double* c, std::size_t ldc) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * ldc;
        if (beta == 0.0) {
            for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
        } else if (beta != 1.0) {
            scale_avx2(crow, beta, n);
        }
    }
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
        const double* a0 = a + (i + 0) * lda;
        const double* a1 = a + (i + 1) * lda;
        const double* a2 = a + (i + 2) * lda;
        const double* a3 = a + (i + 3) * lda;
        double* c0 = c + (i + 0) * ldc;
        double* c1 = c + (i + 1) * ldc;
        double* c2 = c + (i + 2) * ldc;
        double* c3 = c + (i + 3) * ldc;
        std::size_t j = 0;
        for (; j + 8 <= n; j += 8) {
            __m256d r00 = _mm256_loadu_pd(c0 + j), r01 = _mm256_loadu_pd(c0 + j + 4);
            __m256d r10 = _mm256_loadu_pd(c1 + j), r11 = _mm256_loadu_pd(c1 + j + 4);
            __m256d r20 = _mm256_loadu_pd(c2 + j), r21 = _mm256_loadu_pd(c2 + j + 4);
            __m256d r30 = _mm256_loadu_pd(c3 + j), r31 = _mm256_loadu_pd(c3 + j + 4);
            for (std::size_t p = 0; p < k; ++p) {
                const double* brow = b + p * ldb + j;
                const __m256d b0 = _mm256_loadu_pd(brow);
                const __m256d b1 = _mm256_loadu_pd(brow + 4);
                __m256d av;
                av = _mm256_set1_pd(alpha * a0[p]);
                r00 = _mm256_fmadd_pd(av, b0, r00);
                r01 = _mm256_fmadd_pd(av, b1, r01);
                av = _mm256_set1_pd(alpha * a1[p]);
                r10 = _mm256_fmadd_pd(av, b0, r10);
                r11 = _mm256_fmadd_pd(av, b1, r11);
                av = _mm256_set1_pd(alpha * a2[p]);
                r20 = _mm256_fmadd_pd(av, b0, r20);
                r21 = _mm256_fmadd_pd(av, b1, r21);
                av = _mm256_set1_pd(alpha * a3[p]);
                r30 = _mm256_fmadd_pd(av, b0, r30);
                r31 = _mm256_fmadd_pd(av, b1, r31);
            }
            _mm256_storeu_pd(c0 + j, r00);
            _mm256_storeu_pd(c0 + j + 4, r01);
            _mm256_storeu_pd(c1 + j, r10);
            _mm256_storeu_pd(c1 + j + 4, r11);
            _mm256_storeu_pd(c2 + j, r20);
            _mm256_storeu_pd(c2 + j + 4, r21);
            _mm256_storeu_pd(c3 + j, r30);
            _mm256_storeu_pd(c3 + j + 4, r31);
        }
        for (; j < n; ++j) {
            double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
            for (std::size_t p = 0; p < k; ++p) {
                const double bv = b[p * ldb + j];
                s0 += a0[p] * bv;
                s1 += a1[p] * bv;
                s2 += a2[p] * bv;
                s3 += a3[p] * bv;
            }
            c0[j] += alpha * s0;
            c1[j] += alpha * s1;
            c2[j] += alpha * s2;
            c3[j] += alpha * s3;
        }
    }
    for (; i < m; ++i) {
        const double* arow = a + i * lda;
        double* crow = c + i * ldc;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = alpha * arow[p];
            if (aip == 0.0) continue;
            axpy_avx2(aip, b + p * ldb, crow, n);
        }
    }
}

const Ops avx2_table = {
    &dot_avx2, &axpy_avx2, &scale_avx2, &add_avx2, &sum_avx2, &gemm_nn_avx2,
};

} // namespace

const Ops* avx2_ops() { return &avx2_table; }

bool cpu_has_avx2() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

} // namespace m2::kernels::detail

#else // no AVX2 support in this build target

namespace m2::kernels::detail {

const Ops* avx2_ops() { return nullptr; }
bool cpu_has_avx2() { return false; }

} // namespace m2::kernels::detail

#endif
