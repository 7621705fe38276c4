#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "m2/features.hpp"
#include "m2/matrix.hpp"

namespace m2::ccf {

// Canonical correlation transform: X' = A^T (X - mean_x), Y' = B^T (Y - mean_y).
// On the training set the variates have unit variance and corr(x'_i, y'_i) =
// correlations[i] >= 0.
struct CcaTransform {
    Matrix a; // p x d
    Matrix b; // q x d
    std::size_t d = 0;
    std::vector<double> correlations; // descending, clamped to [0,1]
    std::vector<double> mean_x, mean_y;
};

struct FusedFeatures {
    Matrix z; // d x n
};

// Whitening + eigendecomposition route: M = Sxx^(-1/2) Sxy Syy^(-1/2), the
// top-d singular pairs of M give A and B. lambda < 0 picks the default ridge
// (1e-4 * trace/m); lambda = 0 on rank-deficient data raises numeric_error.
// d = 0 keeps min(p, q) capped at the numerical rank of M.
CcaTransform fit_cca(const FeatureMatrix& x, const FeatureMatrix& y, double lambda,
                     std::size_t d = 0);

std::pair<Matrix, Matrix> transform(const CcaTransform& t, const FeatureMatrix& x,
                                    const FeatureMatrix& y);

// Z = X' + Y'
FusedFeatures fuse_sum(const Matrix& xp, const Matrix& yp);

// Row-stacked [f1; f2], column order preserved. A 0 x n operand is the
// identity element.
FeatureMatrix fuse_concat(const FeatureMatrix& f1, const FeatureMatrix& f2);

// "M2FC": u32 p, q, d, then A, B, correlations, means as embedded matrices.
void save_transform(const std::filesystem::path& path, const CcaTransform& t);
CcaTransform load_transform(const std::filesystem::path& path);

} // namespace m2::ccf
