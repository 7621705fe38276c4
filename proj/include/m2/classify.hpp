#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "m2/features.hpp"
#include "m2/matrix.hpp"

namespace m2::classify {

// One-vs-all linear SVMs over standardized features.
struct SvmModel {
    Matrix weights; // classes x d
    std::vector<double> biases;
    double c = 1.0;
    std::size_t classes = 0;
    std::vector<double> feat_mean, feat_std; // per-feature standardization
};

struct ScoreVector {
    std::vector<double> scores;
    bool normalized = false;
};

// Per-class solver state at termination.
struct SvmDiagnostics {
    std::vector<double> duality_gap;
    std::vector<double> kkt_violation; // max projected-gradient magnitude
    std::vector<double> alpha_min, alpha_max;
};

// L1-hinge dual coordinate descent (Hsieh et al., ICML 2008) per class with a
// seeded permutation order; stops early once the primal-dual gap falls below
// 1e-6. Features are standardized internally; the statistics are stored.
SvmModel train_svm(const FeatureMatrix& z, const std::vector<int>& labels, double c = 1.0,
                   std::size_t epochs = 1000, std::uint64_t seed = 0,
                   SvmDiagnostics* diag = nullptr);

// Raw margins w_k . z_std + b_k.
ScoreVector predict_scores(const SvmModel& m, const std::vector<double>& z);
int predict(const SvmModel& m, const std::vector<double>& z);

ScoreVector softmax_normalize(const ScoreVector& s);

// argmax_k max(s1[k], s2[k]); ties resolved toward the lowest class index.
// Both inputs must be normalized.
int max_fuse(const ScoreVector& s1, const ScoreVector& s2);

// "M2FS": u32 classes, u32 d, then weights, biases, standardization stats.
void save_svm(const std::filesystem::path& path, const SvmModel& m);
SvmModel load_svm(const std::filesystem::path& path);

} // namespace m2::classify
