#pragma once

#include <cstddef>
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <vector>

namespace m2 {

// Dense row-major matrix of 64-bit floats. The shared feature/image container
// across all modules; columns are samples wherever a matrix holds features.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool all_finite() const;

    Matrix transposed() const;
    double trace() const;
    double frobenius_norm() const;

    // Copies column c into / out of a contiguous vector.
    std::vector<double> col(std::size_t c) const;
    void set_col(std::size_t c, const std::vector<double>& v);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// C = op(A) * op(B) through the kernel backend.
Matrix matmul(const Matrix& a, const Matrix& b, bool trans_a = false, bool trans_b = false);

// Binary matrix file: magic "M2FM", u32 rows, u32 cols, rows*cols f64,
// everything little-endian, row-major.
void save_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix(const std::filesystem::path& path);

// Same record embedded in a larger stream (model/transform containers).
void write_matrix(std::ostream& os, const Matrix& m);
Matrix read_matrix(std::istream& is);

} // namespace m2
