#include "m2/matrix.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "m2/error.hpp"
#include "m2/kernels.hpp"

static_assert(std::endian::native == std::endian::little,
              "matrix file format is little-endian; big-endian hosts need byte swaps");

namespace m2 {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (rows == 0 || cols == 0) {
        // Degenerate shapes are permitted only as concatenation identities;
        // keep the dimensions but hold no storage.
        data_.clear();
        data_.shrink_to_fit();
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw input_error("Matrix initializer rows have unequal lengths");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c)
            t(c, r) = (*this)(r, c);
    return t;
}

double Matrix::trace() const {
    const std::size_t n = rows_ < cols_ ? rows_ : cols_;
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) t += (*this)(i, i);
    return t;
}

double Matrix::frobenius_norm() const {
    return std::sqrt(kernels::dot(data(), data(), size()));
}

std::vector<double> Matrix::col(std::size_t c) const {
    std::vector<double> v(rows_);
    for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
    return v;
}

void Matrix::set_col(std::size_t c, const std::vector<double>& v) {
    if (v.size() != rows_) throw input_error("set_col: length mismatch");
    for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
}

Matrix matmul(const Matrix& a, const Matrix& b, bool trans_a, bool trans_b) {
    const std::size_t m = trans_a ? a.cols() : a.rows();
    const std::size_t ka = trans_a ? a.rows() : a.cols();
    const std::size_t kb = trans_b ? b.cols() : b.rows();
    const std::size_t n = trans_b ? b.rows() : b.cols();
    if (ka != kb) throw input_error("matmul: inner dimensions disagree");
    Matrix c(m, n);
    if (m == 0 || n == 0) return c;
    if (ka == 0) return c;
    kernels::gemm(trans_a, trans_b, m, n, ka, 1.0, a.data(), a.cols(), b.data(), b.cols(),
                  0.0, c.data(), n);
    return c;
}

namespace {

constexpr char kMagic[4] = {'M', '2', 'F', 'M'};

void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

} // namespace

void write_matrix(std::ostream& os, const Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0)
        throw input_error("write_matrix: refusing to write an empty matrix");
    os.write(kMagic, 4);
    write_u32(os, static_cast<std::uint32_t>(m.rows()));
    write_u32(os, static_cast<std::uint32_t>(m.cols()));
    os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

Matrix read_matrix(std::istream& is) {
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw input_error("read_matrix: bad magic");
    const std::uint32_t rows = read_u32(is);
    const std::uint32_t cols = read_u32(is);
    if (!is || rows == 0 || cols == 0) throw input_error("read_matrix: bad header");
    Matrix m(rows, cols);
    is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!is) throw input_error("read_matrix: truncated record");
    if (!m.all_finite()) throw input_error("read_matrix: non-finite entries");
    return m;
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw input_error("save_matrix: cannot open " + path.string());
    write_matrix(os, m);
    if (!os) throw input_error("save_matrix: write failed for " + path.string());
}

Matrix load_matrix(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw input_error("load_matrix: cannot open " + path.string());
    try {
        return read_matrix(is);
    } catch (const input_error& e) {
        throw input_error(std::string(e.what()) + " in " + path.string());
    }
}

} // namespace m2
