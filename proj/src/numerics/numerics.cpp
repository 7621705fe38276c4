#include "m2/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "m2/error.hpp"
#include "m2/kernels.hpp"

namespace m2::numerics {

namespace {

Matrix centered_rows(const Matrix& x) {
    Matrix c = x;
    const std::size_t n = x.cols();
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double mean = kernels::sum(x.row(r), n) / static_cast<double>(n);
        double* row = c.row(r);
        for (std::size_t j = 0; j < n; ++j) row[j] -= mean;
    }
    return c;
}

double max_abs(const Matrix& m) {
    double v = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) v = std::max(v, std::fabs(m.data()[i]));
    return v;
}

} // namespace

CovarianceSet covariances(const Matrix& x, const Matrix& y, double lambda) {
    if (x.rows() == 0 || y.rows() == 0) throw input_error("covariances: empty feature set");
    if (x.cols() != y.cols()) throw input_error("covariances: sample counts differ");
    if (x.cols() < 2) throw input_error("covariances: need at least 2 samples");
    if (lambda < 0.0) throw input_error("covariances: negative regularization");
    if (!x.all_finite() || !y.all_finite()) throw input_error("covariances: non-finite input");

    const double inv = 1.0 / static_cast<double>(x.cols() - 1);
    const std::size_t n = x.cols();
    const Matrix xc = centered_rows(x);
    const Matrix yc = centered_rows(y);

    // Entry-wise row dots rather than one GEMM: dot(a, b) is bitwise equal to
    // dot(b, a), which makes sxx/syy symmetric by construction and keeps
    // covariances(x, x, 0).sxx identical to .sxy.
    const auto gram = [n, inv](const Matrix& a, const Matrix& b) {
        Matrix out(a.rows(), b.rows());
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < b.rows(); ++j)
                out(i, j) = kernels::dot(a.row(i), b.row(j), n) * inv;
        return out;
    };

    CovarianceSet out;
    out.regularization = lambda;
    out.sxx = gram(xc, xc);
    out.syy = gram(yc, yc);
    out.sxy = gram(xc, yc);
    for (std::size_t i = 0; i < out.sxx.rows(); ++i) out.sxx(i, i) += lambda;
    for (std::size_t i = 0; i < out.syy.rows(); ++i) out.syy(i, i) += lambda;
    return out;
}

EigenDecomposition sym_eig(const Matrix& s) {
    const std::size_t n = s.rows();
    if (n == 0 || s.cols() != n) throw input_error("sym_eig: matrix must be square");
    const double scale = std::max(1.0, max_abs(s));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::fabs(s(i, j) - s(j, i)) > 1e-10 * scale)
                throw input_error("sym_eig: input not symmetric within 1e-10");

    Matrix a = s;
    Matrix v = Matrix::identity(n);
    const double norm0 = a.frobenius_norm();
    const double thresh = 1e-12 * std::max(norm0, 1e-300);

    auto off_norm = [&a, n]() {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) acc += a(i, j) * a(i, j);
        return std::sqrt(2.0 * acc);
    };

    constexpr int kMaxSweeps = 100;
    bool converged = off_norm() <= thresh;
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                // Rutishauser rotation (Golub & Van Loan, Alg. 8.4.1).
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = a(p, k) = c * akp - sn * akq;
                    a(k, q) = a(q, k) = sn * akp + c * akq;
                }
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
        converged = off_norm() <= thresh;
    }
    if (!converged)
        throw numeric_error("sym_eig: Jacobi did not converge within 100 sweeps");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&a](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

Matrix inv_sqrt(const Matrix& s, double eps) {
    if (eps <= 0.0) throw input_error("inv_sqrt: eps must be positive");
    const EigenDecomposition eig = sym_eig(s);
    for (double lam : eig.values)
        if (lam < -1e-8)
            throw numeric_error("inv_sqrt: eigenvalue " + std::to_string(lam) +
                                " below -1e-8; input is not PSD");
    const std::size_t n = s.rows();
    Matrix scaled = eig.vectors; // columns scaled by lambda^{-1/2}
    for (std::size_t j = 0; j < n; ++j) {
        const double w = 1.0 / std::sqrt(std::max(eig.values[j], eps));
        for (std::size_t i = 0; i < n; ++i) scaled(i, j) *= w;
    }
    Matrix out = matmul(scaled, eig.vectors, false, true);
    // The product is symmetric up to roundoff; make it exact.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            out(i, j) = out(j, i) = 0.5 * (out(i, j) + out(j, i));
    return out;
}

double default_ridge(const Matrix& s) {
    if (s.rows() == 0) return 0.0;
    return 1e-4 * s.trace() / static_cast<double>(s.rows());
}

} // namespace m2::numerics
