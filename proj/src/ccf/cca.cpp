#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "m2/ccf.hpp"
#include "m2/error.hpp"
#include "m2/kernels.hpp"
#include "m2/numerics.hpp"

namespace m2::ccf {

namespace {

std::vector<double> row_means(const Matrix& m) {
    std::vector<double> means(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r)
        means[r] = kernels::sum(m.row(r), m.cols()) / static_cast<double>(m.cols());
    return means;
}

Matrix centered(const Matrix& m, const std::vector<double>& means) {
    Matrix c = m;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double* row = c.row(r);
        for (std::size_t j = 0; j < m.cols(); ++j) row[j] -= means[r];
    }
    return c;
}

void check_feature_matrix(const FeatureMatrix& f, const char* which) {
    if (f.data.rows() != f.dim || f.data.cols() != f.samples)
        throw input_error(std::string("fit_cca: inconsistent FeatureMatrix ") + which);
    if (f.dim == 0 || f.samples == 0)
        throw input_error(std::string("fit_cca: empty FeatureMatrix ") + which);
    if (!f.data.all_finite())
        throw input_error(std::string("fit_cca: non-finite features in ") + which);
}

} // namespace

CcaTransform fit_cca(const FeatureMatrix& x, const FeatureMatrix& y, double lambda,
                     std::size_t d) {
    check_feature_matrix(x, "x");
    check_feature_matrix(y, "y");
    if (x.samples != y.samples) throw input_error("fit_cca: sample counts differ");
    if (x.samples < 2) throw input_error("fit_cca: need at least 2 samples");
    const std::size_t p = x.dim, q = y.dim;
    const std::size_t dmax = std::min(p, q);
    if (d > dmax) throw input_error("fit_cca: d exceeds min(p, q)");

    numerics::CovarianceSet cov = numerics::covariances(x.data, y.data, 0.0);
    if (lambda < 0.0)
        lambda = std::max(numerics::default_ridge(cov.sxx), numerics::default_ridge(cov.syy));
    for (std::size_t i = 0; i < p; ++i) cov.sxx(i, i) += lambda;
    for (std::size_t i = 0; i < q; ++i) cov.syy(i, i) += lambda;
    cov.regularization = lambda;

    // Rank-deficiency guard: with no ridge, whitening a singular covariance
    // amplifies noise into the canonical directions.
    if (lambda == 0.0) {
        const auto check_rank = [](const Matrix& s, const char* name) {
            const numerics::EigenDecomposition e = numerics::sym_eig(s);
            const double lmax = std::max(e.values.front(), 0.0);
            if (e.values.back() <= 1e-12 * std::max(lmax, 1e-300))
                throw numeric_error(std::string("fit_cca: ") + name +
                                    " is rank deficient with lambda = 0; pass lambda > 0");
        };
        check_rank(cov.sxx, "Sigma_xx");
        check_rank(cov.syy, "Sigma_yy");
    }

    const double eps_x = std::max(1e-14 * std::fabs(cov.sxx.trace()) / static_cast<double>(p), 1e-300);
    const double eps_y = std::max(1e-14 * std::fabs(cov.syy.trace()) / static_cast<double>(q), 1e-300);
    const Matrix wx = numerics::inv_sqrt(cov.sxx, eps_x);
    const Matrix wy = numerics::inv_sqrt(cov.syy, eps_y);
    const Matrix m = matmul(matmul(wx, cov.sxy), wy); // p x q

    // Singular pairs of M from the smaller Gram matrix; the other side is
    // reconstructed as M^T u / sigma, which fixes the sign so that
    // corr(x'_i, y'_i) >= 0.
    Matrix u, v;
    std::vector<double> sigma;
    if (p <= q) {
        const numerics::EigenDecomposition e = numerics::sym_eig(matmul(m, m, false, true));
        sigma.resize(p);
        for (std::size_t i = 0; i < p; ++i) sigma[i] = std::sqrt(std::max(e.values[i], 0.0));
        u = e.vectors;
        const Matrix mtu = matmul(m, u, true, false); // q x p
        v = Matrix(q, p);
        for (std::size_t j = 0; j < p; ++j) {
            const double inv = sigma[j] > 0.0 ? 1.0 / sigma[j] : 0.0;
            for (std::size_t i = 0; i < q; ++i) v(i, j) = mtu(i, j) * inv;
        }
    } else {
        const numerics::EigenDecomposition e = numerics::sym_eig(matmul(m, m, true, false));
        sigma.resize(q);
        for (std::size_t i = 0; i < q; ++i) sigma[i] = std::sqrt(std::max(e.values[i], 0.0));
        v = e.vectors;
        const Matrix mv = matmul(m, v); // p x q
        u = Matrix(p, q);
        for (std::size_t j = 0; j < q; ++j) {
            const double inv = sigma[j] > 0.0 ? 1.0 / sigma[j] : 0.0;
            for (std::size_t i = 0; i < p; ++i) u(i, j) = mv(i, j) * inv;
        }
    }

    const double smax = sigma.empty() ? 0.0 : sigma.front();
    std::size_t rank = 0;
    while (rank < sigma.size() && sigma[rank] > 1e-10 * std::max(smax, 1e-300)) ++rank;
    const std::size_t d_eff = std::min(d == 0 ? dmax : d, rank);
    if (d_eff == 0)
        throw numeric_error("fit_cca: no correlated directions above the rank threshold");

    CcaTransform t;
    t.d = d_eff;
    t.correlations.resize(d_eff);
    for (std::size_t i = 0; i < d_eff; ++i)
        t.correlations[i] = std::clamp(sigma[i], 0.0, 1.0);
    Matrix ud(p, d_eff), vd(q, d_eff);
    for (std::size_t j = 0; j < d_eff; ++j) {
        for (std::size_t i = 0; i < p; ++i) ud(i, j) = u(i, j);
        for (std::size_t i = 0; i < q; ++i) vd(i, j) = v(i, j);
    }
    t.a = matmul(wx, ud);
    t.b = matmul(wy, vd);
    t.mean_x = row_means(x.data);
    t.mean_y = row_means(y.data);
    return t;
}

std::pair<Matrix, Matrix> transform(const CcaTransform& t, const FeatureMatrix& x,
                                    const FeatureMatrix& y) {
    if (x.dim != t.a.rows() || y.dim != t.b.rows())
        throw input_error("cca transform: feature dimensions do not match the transform");
    if (x.samples != y.samples) throw input_error("cca transform: sample counts differ");
    const Matrix xc = centered(x.data, t.mean_x);
    const Matrix yc = centered(y.data, t.mean_y);
    return {matmul(t.a, xc, true, false), matmul(t.b, yc, true, false)};
}

FusedFeatures fuse_sum(const Matrix& xp, const Matrix& yp) {
    if (!xp.same_shape(yp)) throw input_error("fuse_sum: shape mismatch");
    FusedFeatures f;
    f.z = Matrix(xp.rows(), xp.cols());
    kernels::add(xp.data(), yp.data(), f.z.data(), f.z.size());
    return f;
}

FeatureMatrix fuse_concat(const FeatureMatrix& f1, const FeatureMatrix& f2) {
    if (f1.samples != f2.samples && f1.dim != 0 && f2.dim != 0)
        throw input_error("fuse_concat: sample counts differ");
    if (f1.dim == 0) return f2;
    if (f2.dim == 0) return f1;
    FeatureMatrix out;
    out.dim = f1.dim + f2.dim;
    out.samples = f1.samples;
    out.source_layer = f1.source_layer + "+" + f2.source_layer;
    out.data = Matrix(out.dim, out.samples);
    std::memcpy(out.data.data(), f1.data.data(), f1.data.size() * sizeof(double));
    std::memcpy(out.data.data() + f1.data.size(), f2.data.data(), f2.data.size() * sizeof(double));
    return out;
}

namespace {
constexpr char kMagic[4] = {'M', '2', 'F', 'C'};
}

void save_transform(const std::filesystem::path& path, const CcaTransform& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw input_error("save_transform: cannot open " + path.string());
    os.write(kMagic, 4);
    const std::uint32_t dims[3] = {static_cast<std::uint32_t>(t.a.rows()),
                                   static_cast<std::uint32_t>(t.b.rows()),
                                   static_cast<std::uint32_t>(t.d)};
    os.write(reinterpret_cast<const char*>(dims), sizeof dims);
    write_matrix(os, t.a);
    write_matrix(os, t.b);
    Matrix corr(t.d, 1);
    for (std::size_t i = 0; i < t.d; ++i) corr(i, 0) = t.correlations[i];
    write_matrix(os, corr);
    Matrix mx(t.mean_x.size(), 1), my(t.mean_y.size(), 1);
    for (std::size_t i = 0; i < t.mean_x.size(); ++i) mx(i, 0) = t.mean_x[i];
    for (std::size_t i = 0; i < t.mean_y.size(); ++i) my(i, 0) = t.mean_y[i];
    write_matrix(os, mx);
    write_matrix(os, my);
    if (!os) throw input_error("save_transform: write failed for " + path.string());
}

CcaTransform load_transform(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw input_error("load_transform: cannot open " + path.string());
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw input_error("load_transform: bad magic in " + path.string());
    std::uint32_t dims[3] = {};
    is.read(reinterpret_cast<char*>(dims), sizeof dims);
    if (!is) throw input_error("load_transform: truncated header");
    CcaTransform t;
    t.d = dims[2];
    t.a = read_matrix(is);
    t.b = read_matrix(is);
    const Matrix corr = read_matrix(is);
    const Matrix mx = read_matrix(is);
    const Matrix my = read_matrix(is);
    if (t.a.rows() != dims[0] || t.b.rows() != dims[1] || t.a.cols() != t.d ||
        t.b.cols() != t.d || corr.rows() != t.d)
        throw input_error("load_transform: inconsistent dimensions in " + path.string());
    t.correlations.assign(corr.data(), corr.data() + corr.size());
    t.mean_x.assign(mx.data(), mx.data() + mx.size());
    t.mean_y.assign(my.data(), my.data() + my.size());
    return t;
}

} // namespace m2::ccf
