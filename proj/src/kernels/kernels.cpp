#include "m2/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "m2/error.hpp"
#include "kernels_detail.hpp"

namespace m2::kernels {

namespace {

namespace sc {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double* x, double alpha, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void add(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

// Reference i-k-j loop; unit-stride on the innermost axis.
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, double alpha,
             const double* a, std::size_t lda,
             const double* b, std::size_t ldb,
             double beta, double* c, std::size_t ldc) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * ldc;
        if (beta == 0.0) {
            for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
        } else if (beta != 1.0) {
            for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
        }
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = alpha * a[i * lda + p];
            if (aip == 0.0) continue;
            const double* brow = b + p * ldb;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
}

} // namespace sc

Backend pick_default() {
    if (const char* env = std::getenv("M2_KERNELS")) {
        std::string v(env);
        if (v == "scalar") return Backend::scalar;
        if (v == "avx2") {
            if (!backend_available(Backend::avx2))
                throw input_error("M2_KERNELS=avx2 but AVX2 is unavailable on this CPU/build");
            return Backend::avx2;
        }
        throw input_error("unknown M2_KERNELS value: " + v + " (expected scalar or avx2)");
    }
    return backend_available(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}

struct State {
    Backend backend;
    const detail::Ops* ops;
    State() : backend(pick_default()), ops(backend == Backend::avx2 ? detail::avx2_ops() : &detail::scalar_ops) {}
};

State& state() {
    static State s;
    return s;
}

} // namespace

Backend active_backend() { return state().backend; }

bool backend_available(Backend b) {
    if (b == Backend::scalar) return true;
    return detail::avx2_ops() != nullptr && detail::cpu_has_avx2();
}

void set_backend(Backend b) {
    if (!backend_available(b))
        throw input_error(std::string("kernel backend unavailable: ") + backend_name(b));
    state().backend = b;
    state().ops = b == Backend::avx2 ? detail::avx2_ops() : &detail::scalar_ops;
}

const char* backend_name(Backend b) {
    return b == Backend::avx2 ? "avx2" : "scalar";
}

double dot(const double* a, const double* b, std::size_t n) { return state().ops->dot(a, b, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { state().ops->axpy(alpha, x, y, n); }
void scale(double* x, double alpha, std::size_t n) { state().ops->scale(x, alpha, n); }
void add(const double* a, const double* b, double* out, std::size_t n) { state().ops->add(a, b, out, n); }
double sum(const double* x, std::size_t n) { return state().ops->sum(x, n); }

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          double alpha, const double* a, std::size_t lda,
          const double* b, std::size_t ldb,
          double beta, double* c, std::size_t ldc) {
    // Materialize transposed operands so both backends run one contiguous
    // no-transpose core. O(mk + kn) copies against an O(mnk) product.
    std::vector<double> abuf, bbuf;
    const double* ap = a;
    std::size_t alead = lda;
    if (trans_a) {
        abuf.resize(m * k);
        for (std::size_t p = 0; p < k; ++p)
            for (std::size_t i = 0; i < m; ++i)
                abuf[i * k + p] = a[p * lda + i];
        ap = abuf.data();
        alead = k;
    }
    const double* bp = b;
    std::size_t blead = ldb;
    if (trans_b) {
        bbuf.resize(k * n);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t p = 0; p < k; ++p)
                bbuf[p * n + j] = b[j * ldb + p];
        bp = bbuf.data();
        blead = n;
    }
    state().ops->gemm_nn(m, n, k, alpha, ap, alead, bp, blead, beta, c, ldc);
}

namespace detail {

const Ops scalar_ops = {
    &sc::dot, &sc::axpy, &sc::scale, &sc::add, &sc::sum, &sc::gemm_nn,
};

} // namespace detail

} // namespace m2::kernels
