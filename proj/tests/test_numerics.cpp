#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "m2/error.hpp"
#include "m2/matrix.hpp"
#include "m2/numerics.hpp"
#include "m2/rng.hpp"

using m2::Matrix;
namespace num = m2::numerics;

namespace {

Matrix random_symmetric(std::size_t n, std::mt19937_64& g) {
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) s(i, j) = s(j, i) = m2::rng::uniform(g, -1.0, 1.0);
    return s;
}

Matrix random_spd(std::size_t n, std::mt19937_64& g) {
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = m2::rng::uniform(g, -1.0, 1.0);
    Matrix s = matmul(a, a, false, true);
    for (std::size_t i = 0; i < n; ++i) s(i, i) += 0.5; // keep it well conditioned
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) s(j, i) = s(i, j);
    return s;
}

// Direct (non-separable) Keys a=-0.5 kernel sum. Valid only where no tap
// clamps, which is all this oracle is used for.
double keys(double t) {
    t = std::fabs(t);
    if (t < 1.0) return ((1.5 * t - 2.5) * t) * t + 1.0;
    if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
    return 0.0;
}

double bicubic_oracle_at(const Matrix& img, double sy, double sx) {
    const long by = static_cast<long>(std::floor(sy));
    const long bx = static_cast<long>(std::floor(sx));
    double acc = 0.0;
    for (long i = -1; i <= 2; ++i)
        for (long j = -1; j <= 2; ++j) {
            const double w = keys(sy - static_cast<double>(by + i)) *
                             keys(sx - static_cast<double>(bx + j));
            acc += w * img(static_cast<std::size_t>(by + i), static_cast<std::size_t>(bx + j));
        }
    return acc;
}

} // namespace

TEST_CASE("covariances: hand-computed 1x3 example") {
    const Matrix x = {{1.0, 2.0, 3.0}};
    const num::CovarianceSet c = num::covariances(x, x, 0.0);
    // sample variance of {1,2,3} = (1+0+1)/2 = 1
    CHECK(c.sxx(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(c.syy(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(c.sxy(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("covariances: identical columns give a zero matrix") {
    Matrix x(3, 5);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 5; ++c) x(r, c) = static_cast<double>(r) + 0.25;
    const num::CovarianceSet c = num::covariances(x, x, 0.0);
    for (std::size_t i = 0; i < c.sxx.size(); ++i) CHECK(c.sxx.data()[i] == 0.0);
}

TEST_CASE("covariances: ridge adds lambda on the diagonal only") {
    std::mt19937_64 g(5);
    Matrix x(4, 9), y(3, 9);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = m2::rng::uniform(g, -1, 1);
    for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] = m2::rng::uniform(g, -1, 1);
    const num::CovarianceSet plain = num::covariances(x, y, 0.0);
    const num::CovarianceSet ridged = num::covariances(x, y, 0.1);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            const double expect = plain.sxx(i, j) + (i == j ? 0.1 : 0.0);
            CHECK(ridged.sxx(i, j) == doctest::Approx(expect).epsilon(1e-15));
        }
    for (std::size_t i = 0; i < ridged.sxy.size(); ++i)
        CHECK(ridged.sxy.data()[i] == plain.sxy.data()[i]);
}

TEST_CASE("covariances: sxx and sxy coincide exactly for (x, x, 0)") {
    std::mt19937_64 g(7);
    Matrix x(5, 12);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = m2::rng::uniform(g, -3, 3);
    const num::CovarianceSet c = num::covariances(x, x, 0.0);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) CHECK(c.sxx(i, j) == c.sxy(i, j));
}

TEST_CASE("covariances: symmetry is exact and errors are reported") {
    std::mt19937_64 g(11);
    Matrix x(6, 20), y(4, 20);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = m2::rng::uniform(g, -1, 1);
    for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] = m2::rng::uniform(g, -1, 1);
    const num::CovarianceSet c = num::covariances(x, y, 0.0);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) CHECK(c.sxx(i, j) == c.sxx(j, i));

    Matrix bad(4, 7);
    CHECK_THROWS_AS(num::covariances(x, bad, 0.0), m2::input_error);
    Matrix one_col(3, 1, 1.0);
    CHECK_THROWS_AS(num::covariances(one_col, one_col, 0.0), m2::input_error);
    CHECK_THROWS_AS(num::covariances(x, y, -1.0), m2::input_error);
}

TEST_CASE("sym_eig: diagonal and hand-solved 2x2") {
    const num::EigenDecomposition d = num::sym_eig(Matrix{{3, 0}, {0, 1}});
    CHECK(d.values[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(d.values[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(d.vectors(0, 0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(d.vectors(1, 1)) == doctest::Approx(1.0).epsilon(1e-12));

    // [[2,1],[1,2]]: det(A - tI) = (2-t)^2 - 1 -> t = 3, 1
    const num::EigenDecomposition e = num::sym_eig(Matrix{{2, 1}, {1, 2}});
    CHECK(e.values[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(e.values[1] == doctest::Approx(1.0).epsilon(1e-12));

    const num::EigenDecomposition i4 = num::sym_eig(Matrix::identity(4));
    for (double v : i4.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("sym_eig: reconstruction, orthonormality, trace over random symmetric inputs") {
    std::mt19937_64 g(13);
    for (std::size_t n : {std::size_t{1}, std::size_t{2}, std::size_t{5}, std::size_t{16},
                          std::size_t{33}}) {
        const Matrix s = random_symmetric(n, g);
        const num::EigenDecomposition e = num::sym_eig(s);

        for (std::size_t i = 0; i + 1 < n; ++i) CHECK(e.values[i] >= e.values[i + 1]);

        double trace = 0.0, vsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) trace += s(i, i);
        for (double v : e.values) vsum += v;
        CHECK(vsum == doctest::Approx(trace).epsilon(1e-8));

        // V diag(l) V^T reconstruction within 1e-8 relative Frobenius
        Matrix scaled = e.vectors;
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) scaled(i, j) *= e.values[j];
        const Matrix rec = matmul(scaled, e.vectors, false, true);
        double err = 0.0, ref = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            err += (rec.data()[i] - s.data()[i]) * (rec.data()[i] - s.data()[i]);
            ref += s.data()[i] * s.data()[i];
        }
        CHECK(std::sqrt(err) <= 1e-8 * std::max(1.0, std::sqrt(ref)));

        const Matrix vtv = matmul(e.vectors, e.vectors, true, false);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                CHECK(vtv(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-8));

        // eigenpair residual: ||S v - l v|| small relative to |l|
        for (std::size_t j = 0; j < n; ++j) {
            double rnorm = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double sv = 0.0;
                for (std::size_t k2 = 0; k2 < n; ++k2) sv += s(i, k2) * e.vectors(k2, j);
                const double r = sv - e.values[j] * e.vectors(i, j);
                rnorm += r * r;
            }
            CHECK(std::sqrt(rnorm) <= 1e-8 * std::max(1.0, std::fabs(e.values[j])));
        }
    }
}

TEST_CASE("sym_eig rejects non-symmetric and non-square input") {
    CHECK_THROWS_AS(num::sym_eig(Matrix{{1, 2}, {3, 4}}), m2::input_error);
    CHECK_THROWS_AS(num::sym_eig(Matrix(2, 3)), m2::input_error);
}

TEST_CASE("inv_sqrt: identity, hand-computed diagonal, clamping") {
    const Matrix id = num::inv_sqrt(Matrix::identity(3), 1e-12);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(id(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));

    const Matrix d = num::inv_sqrt(Matrix{{4, 0}, {0, 9}}, 1e-12);
    CHECK(d(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(d(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(d(0, 1) == doctest::Approx(0.0).epsilon(1e-12));

    // rank-deficient: the zero eigenvalue clamps to eps -> 1/sqrt(1e-6) = 1000
    const Matrix c = num::inv_sqrt(Matrix{{1, 0}, {0, 0}}, 1e-6);
    CHECK(c(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(c(1, 1) == doctest::Approx(1000.0).epsilon(1e-9));

    CHECK_THROWS_AS(num::inv_sqrt(Matrix{{1, 0}, {0, -1}}, 1e-6), m2::numeric_error);
    CHECK_THROWS_AS(num::inv_sqrt(Matrix::identity(2), 0.0), m2::input_error);
}

TEST_CASE("inv_sqrt: whitening property on random SPD matrices") {
    std::mt19937_64 g(19);
    for (std::size_t n : {std::size_t{2}, std::size_t{6}, std::size_t{12}}) {
        const Matrix s = random_spd(n, g);
        const Matrix w = num::inv_sqrt(s, 1e-14);
        const Matrix probe = matmul(matmul(w, s), w);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                CHECK(probe(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-6));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) CHECK(w(i, j) == w(j, i));
    }
}

TEST_CASE("bicubic: constant image resizes exactly, both ways") {
    const Matrix c(10, 10, 7.0);
    const Matrix down = num::bicubic_resize(c, 5, 5);
    REQUIRE(down.rows() == 5);
    REQUIRE(down.cols() == 5);
    for (std::size_t i = 0; i < down.size(); ++i) CHECK(down.data()[i] == 7.0);
    const Matrix up = num::bicubic_resize(down, 10, 10);
    for (std::size_t i = 0; i < up.size(); ++i) CHECK(up.data()[i] == 7.0);
}

TEST_CASE("bicubic: identity-size resize is a no-op") {
    std::mt19937_64 g(23);
    Matrix img(7, 9);
    for (std::size_t i = 0; i < img.size(); ++i) img.data()[i] = m2::rng::uniform(g, 0, 1);
    const Matrix out = num::bicubic_resize(img, 7, 9);
    for (std::size_t i = 0; i < img.size(); ++i)
        CHECK(std::fabs(out.data()[i] - img.data()[i]) <= 1e-12);
}

TEST_CASE("bicubic: linear ramp survives 2x downsampling away from borders") {
    Matrix img(20, 20);
    for (std::size_t r = 0; r < 20; ++r)
        for (std::size_t c = 0; c < 20; ++c) img(r, c) = static_cast<double>(c);
    const Matrix out = num::bicubic_resize(img, 10, 10);
    for (std::size_t r = 2; r < 8; ++r)
        for (std::size_t c = 2; c < 8; ++c) {
            const double src_x = (static_cast<double>(c) + 0.5) * 2.0 - 0.5;
            CHECK(out(r, c) == doctest::Approx(src_x).epsilon(1e-6));
        }
}

TEST_CASE("bicubic: interior pixels match the direct kernel-sum oracle") {
    std::mt19937_64 g(29);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix img(12, 15);
        for (std::size_t i = 0; i < img.size(); ++i)
            img.data()[i] = std::floor(m2::rng::uniform(g, 0, 100));
        const std::size_t oh = 7, ow = 9;
        const Matrix out = num::bicubic_resize(img, oh, ow);
        const double sy_scale = 12.0 / oh, sx_scale = 15.0 / ow;
        for (std::size_t r = 0; r < oh; ++r)
            for (std::size_t c = 0; c < ow; ++c) {
                const double sy = (static_cast<double>(r) + 0.5) * sy_scale - 0.5;
                const double sx = (static_cast<double>(c) + 0.5) * sx_scale - 0.5;
                const bool interior = std::floor(sy) >= 1 && std::floor(sy) + 2 <= 11 &&
                                      std::floor(sx) >= 1 && std::floor(sx) + 2 <= 14;
                if (!interior) continue;
                CHECK(out(r, c) == doctest::Approx(bicubic_oracle_at(img, sy, sx)).epsilon(1e-9));
            }
    }
}

TEST_CASE("bicubic rejects empty outputs") {
    CHECK_THROWS_AS(num::bicubic_resize(Matrix(2, 2, 1.0), 0, 3), m2::input_error);
}

TEST_CASE("matrix file round-trip and validation") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "m2_numerics_test";
    fs::create_directories(dir);
    std::mt19937_64 g(31);
    Matrix m(6, 11);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = m2::rng::uniform(g, -5, 5);
    const fs::path f = dir / "m.m2fm";
    m2::save_matrix(f, m);
    const Matrix back = m2::load_matrix(f);
    REQUIRE(back.rows() == 6);
    REQUIRE(back.cols() == 11);
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(back.data()[i] == m.data()[i]);

    {
        std::ofstream bad(dir / "bad.m2fm", std::ios::binary);
        bad << "NOPE";
    }
    CHECK_THROWS_AS(m2::load_matrix(dir / "bad.m2fm"), m2::input_error);
    CHECK_THROWS_AS(m2::load_matrix(dir / "missing.m2fm"), m2::input_error);
    fs::remove_all(dir);
}

TEST_CASE("cubic_sample_1d is exact at integer positions and clamps outside") {
    const double data[6] = {3.0, -1.0, 4.0, 1.5, -9.2, 2.6};
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(num::cubic_sample_1d(data, 6, static_cast<double>(i)) == data[i]);
    CHECK(num::cubic_sample_1d(data, 6, -3.0) == data[0]);
    CHECK(num::cubic_sample_1d(data, 6, 99.0) == data[5]);
}
