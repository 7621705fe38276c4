#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "m2/kernels.hpp"
#include "m2/rng.hpp"

namespace k = m2::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& g) {
    std::vector<double> v(n);
    for (double& x : v) x = m2::rng::uniform(g, -2.0, 2.0);
    return v;
}

// Plain loops, written independently of the kernel backends.
double ref_dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void ref_gemm(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t kk, double alpha,
              const std::vector<double>& a, std::size_t lda, const std::vector<double>& b,
              std::size_t ldb, double beta, std::vector<double>& c, std::size_t ldc) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0;
            for (std::size_t p = 0; p < kk; ++p) {
                const double av = ta ? a[p * lda + i] : a[i * lda + p];
                const double bv = tb ? b[j * ldb + p] : b[p * ldb + j];
                acc += av * bv;
            }
            c[i * ldc + j] = alpha * acc + beta * c[i * ldc + j];
        }
}

bool close(double a, double b, double tol) {
    return std::fabs(a - b) <= tol * (1.0 + std::max(std::fabs(a), std::fabs(b)));
}

struct BackendGuard {
    k::Backend saved;
    BackendGuard() : saved(k::active_backend()) {}
    ~BackendGuard() { k::set_backend(saved); }
};

} // namespace

TEST_CASE("scalar backend is always available") {
    CHECK(k::backend_available(k::Backend::scalar));
}

TEST_CASE("dot/axpy/sum/add/scale agree with plain loops on the active backend") {
    std::mt19937_64 g(17);
    for (std::size_t n : {std::size_t{1}, std::size_t{3}, std::size_t{4}, std::size_t{7},
                          std::size_t{8}, std::size_t{64}, std::size_t{257}}) {
        const auto a = random_vec(n, g);
        const auto b = random_vec(n, g);
        CHECK(close(k::dot(a.data(), b.data(), n), ref_dot(a, b), 1e-12));

        auto y = b;
        k::axpy(0.37, a.data(), y.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(close(y[i], b[i] + 0.37 * a[i], 1e-14));

        double s_ref = 0;
        for (double v : a) s_ref += v;
        CHECK(close(k::sum(a.data(), n), s_ref, 1e-12));

        std::vector<double> out(n);
        k::add(a.data(), b.data(), out.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == a[i] + b[i]);

        auto x = a;
        k::scale(x.data(), -1.5, n);
        for (std::size_t i = 0; i < n; ++i) CHECK(x[i] == a[i] * -1.5);
    }
}

TEST_CASE("gemm matches the reference for all transpose combinations") {
    std::mt19937_64 g(23);
    const std::size_t m = 7, n = 13, kk = 9;
    for (bool ta : {false, true}) {
        for (bool tb : {false, true}) {
            const std::size_t lda = ta ? m : kk;
            const std::size_t ldb = tb ? kk : n;
            const auto a = random_vec((ta ? kk : m) * lda, g);
            const auto b = random_vec((tb ? n : kk) * ldb, g);
            for (double alpha : {1.0, 0.5}) {
                for (double beta : {0.0, 1.0, -2.0}) {
                    auto c = random_vec(m * n, g);
                    auto c_ref = c;
                    k::gemm(ta, tb, m, n, kk, alpha, a.data(), lda, b.data(), ldb, beta,
                            c.data(), n);
                    ref_gemm(ta, tb, m, n, kk, alpha, a, lda, b, ldb, beta, c_ref, n);
                    for (std::size_t i = 0; i < m * n; ++i) CHECK(close(c[i], c_ref[i], 1e-12));
                }
            }
        }
    }
}

TEST_CASE("avx2 and scalar backends are numerically equivalent") {
    if (!k::backend_available(k::Backend::avx2)) {
        MESSAGE("AVX2 unavailable; equivalence not exercised on this host");
        return;
    }
    BackendGuard guard;
    std::mt19937_64 g(41);

    for (std::size_t n : {std::size_t{5}, std::size_t{32}, std::size_t{1000}}) {
        const auto a = random_vec(n, g);
        const auto b = random_vec(n, g);
        k::set_backend(k::Backend::scalar);
        const double d_s = k::dot(a.data(), b.data(), n);
        const double s_s = k::sum(a.data(), n);
        k::set_backend(k::Backend::avx2);
        const double d_v = k::dot(a.data(), b.data(), n);
        const double s_v = k::sum(a.data(), n);
        CHECK(close(d_s, d_v, 1e-11));
        CHECK(close(s_s, s_v, 1e-11));
    }

    const std::size_t m = 33, n = 29, kk = 61; // deliberately off the block sizes
    const auto a = random_vec(m * kk, g);
    const auto b = random_vec(kk * n, g);
    std::vector<double> c_s(m * n, 0.1), c_v(m * n, 0.1);
    k::set_backend(k::Backend::scalar);
    k::gemm(false, false, m, n, kk, 1.3, a.data(), kk, b.data(), n, 0.7, c_s.data(), n);
    k::set_backend(k::Backend::avx2);
    k::gemm(false, false, m, n, kk, 1.3, a.data(), kk, b.data(), n, 0.7, c_v.data(), n);
    for (std::size_t i = 0; i < m * n; ++i) CHECK(close(c_s[i], c_v[i], 1e-11));
}

TEST_CASE("backend selection is sticky and reports a name") {
    BackendGuard guard;
    k::set_backend(k::Backend::scalar);
    CHECK(k::active_backend() == k::Backend::scalar);
    CHECK(std::string(k::backend_name(k::active_backend())) == "scalar");
}
