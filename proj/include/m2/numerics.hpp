#pragma once

#include <vector>

#include "m2/matrix.hpp"

namespace m2::numerics {

struct CovarianceSet {
    Matrix sxx;            // p x p, symmetric
    Matrix syy;            // q x q, symmetric
    Matrix sxy;            // p x q; Sigma_yx is its transpose
    double regularization; // ridge added to sxx/syy diagonals
};

struct EigenDecomposition {
    std::vector<double> values; // descending
    Matrix vectors;             // columns are unit-norm eigenvectors
};

// Sample covariances of two column-per-sample sets with shared n. Columns are
// mean-centered internally; normalization 1/(n-1); lambda*I is added to both
// within-set blocks. sxx/syy symmetry is exact by construction.
CovarianceSet covariances(const Matrix& x, const Matrix& y, double lambda);

// Cyclic Jacobi for symmetric matrices: threshold 1e-12 on the off-diagonal
// norm relative to the input norm, 100-sweep cap. Values sorted descending.
EigenDecomposition sym_eig(const Matrix& s);

// V diag(max(lambda_i, eps))^(-1/2) V^T. Rejects eigenvalues below -1e-8.
Matrix inv_sqrt(const Matrix& s, double eps);

// Keys bicubic (a = -0.5), pixel-center alignment, replicate padding.
// Constant images resize exactly; identity sizes are a no-op.
Matrix bicubic_resize(const Matrix& img, std::size_t out_h, std::size_t out_w);

// Same kernel in one dimension: cubic sample of data[0..n) at a fractional
// position (clamped ends). Integer positions return the sample bit-exactly.
double cubic_sample_1d(const double* data, std::size_t n, double pos);

// Default ridge used by callers that do not pick one: 1e-4 * trace(S) / m.
double default_ridge(const Matrix& s);

} // namespace m2::numerics
