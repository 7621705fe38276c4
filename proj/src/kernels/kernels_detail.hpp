#pragma once

#include <cstddef>

namespace m2::kernels::detail {

// One dispatch table per backend. gemm_nn is the no-transpose core; the
// public gemm() driver materializes transposed operands before calling it.
struct Ops {
    double (*dot)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scale)(double*, double, std::size_t);
    void (*add)(const double*, const double*, double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, double alpha,
                    const double* a, std::size_t lda,
                    const double* b, std::size_t ldb,
                    double beta, double* c, std::size_t ldc);
};

extern const Ops scalar_ops;

// Null when the build target has no AVX2 compiler support.
const Ops* avx2_ops();
bool cpu_has_avx2();

} // namespace m2::kernels::detail
