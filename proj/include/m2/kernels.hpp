#pragma once

#include <cstddef>

// Dense double-precision primitives backing the hot loops (im2col GEMM in the
// CNNs, covariance assembly, CCA products, SVM updates). Two backends: a plain
// scalar reference and an AVX2/FMA variant, selected once at startup from
// cpuid. The M2_KERNELS environment variable ("scalar" or "avx2") overrides
// the automatic pick. Backends may differ in the last bits (reassociated
// reductions); equivalence is asserted by tests at 1e-11 relative.

namespace m2::kernels {

enum class Backend { scalar, avx2 };

Backend active_backend();
bool backend_available(Backend b);
void set_backend(Backend b); // throws m2::input_error if unavailable
const char* backend_name(Backend b);

double dot(const double* a, const double* b, std::size_t n);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);

// x *= alpha
void scale(double* x, double alpha, std::size_t n);

// out = a + b
void add(const double* a, const double* b, double* out, std::size_t n);

double sum(const double* x, std::size_t n);

// Row-major GEMM: C = alpha * op(A) * op(B) + beta * C where op(A) is m x k,
// op(B) is k x n and C is m x n. lda/ldb are the leading dimensions of the
// stored (untransposed) A and B.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          double alpha, const double* a, std::size_t lda,
          const double* b, std::size_t ldb,
          double beta, double* c, std::size_t ldc);

} // namespace m2::kernels
