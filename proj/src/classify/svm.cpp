#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <set>
#include <string>

#include "m2/classify.hpp"
#include "m2/error.hpp"
#include "m2/kernels.hpp"
#include "m2/rng.hpp"

namespace m2::classify {

namespace {

// Binary L1-loss SVM dual coordinate descent with projected-gradient
// shrinking, Algorithm 3 of Hsieh et al., ICML 2008. Samples carry an
// implicit trailing 1 for the (regularized) bias. w has d+1 entries.
struct BinarySolveStats {
    double duality_gap = 0.0;
    double kkt_violation = 0.0;
    double alpha_min = 0.0, alpha_max = 0.0;
};

BinarySolveStats solve_binary(const Matrix& x /* samples x (d+1), row per sample */,
                              const std::vector<signed char>& y, double c,
                              std::size_t max_sweeps, std::uint64_t seed,
                              std::vector<double>& w) {
    const std::size_t l = x.rows();
    const std::size_t dim = x.cols();
    constexpr double kInf = 1e308;

    std::vector<double> alpha(l, 0.0);
    std::vector<double> qd(l);
    std::vector<std::size_t> index(l);
    for (std::size_t i = 0; i < l; ++i) {
        qd[i] = kernels::dot(x.row(i), x.row(i), dim);
        index[i] = i;
    }
    w.assign(dim, 0.0);

    std::mt19937_64 g(seed);
    std::size_t active = l;
    double pg_max_old = kInf, pg_min_old = -kInf;

    const auto duality_gap = [&]() {
        // primal 0.5||w||^2 + C sum hinge; dual sum(alpha) - 0.5||w||^2
        const double wtw = kernels::dot(w.data(), w.data(), dim);
        double hinge = 0.0, asum = 0.0;
        for (std::size_t i = 0; i < l; ++i) {
            hinge += std::max(0.0, 1.0 - y[i] * kernels::dot(w.data(), x.row(i), dim));
            asum += alpha[i];
        }
        const double primal = 0.5 * wtw + c * hinge;
        const double dual = asum - 0.5 * wtw;
        return std::pair{primal - dual, primal};
    };

    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double pg_max_new = -kInf, pg_min_new = kInf;
        // seeded permutation of the active set
        for (std::size_t i = 0; i + 1 < active; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(g() % (active - i));
            std::swap(index[i], index[j]);
        }
        for (std::size_t s = 0; s < active; ++s) {
            const std::size_t i = index[s];
            const double yi = y[i];
            const double grad = yi * kernels::dot(w.data(), x.row(i), dim) - 1.0;
            double pg = 0.0;
            if (alpha[i] == 0.0) {
                if (grad > pg_max_old) {
                    --active;
                    std::swap(index[s], index[active]);
                    --s;
                    continue;
                }
                if (grad < 0.0) pg = grad;
            } else if (alpha[i] == c) {
                if (grad < pg_min_old) {
                    --active;
                    std::swap(index[s], index[active]);
                    --s;
                    continue;
                }
                if (grad > 0.0) pg = grad;
            } else {
                pg = grad;
            }
            pg_max_new = std::max(pg_max_new, pg);
            pg_min_new = std::min(pg_min_new, pg);
            if (std::fabs(pg) > 1e-12) {
                const double old = alpha[i];
                alpha[i] = std::min(std::max(old - grad / qd[i], 0.0), c);
                kernels::axpy((alpha[i] - old) * yi, x.row(i), w.data(), dim);
            }
        }

        const auto [gap, primal] = duality_gap();
        if (gap <= 1e-6 * std::max(1.0, std::fabs(primal))) break;

        if (pg_max_new - pg_min_new <= 1e-12 && active < l) {
            // active set converged; restart on the full problem
            active = l;
            pg_max_old = kInf;
            pg_min_old = -kInf;
            continue;
        }
        pg_max_old = pg_max_new <= 0.0 ? kInf : pg_max_new;
        pg_min_old = pg_min_new >= 0.0 ? -kInf : pg_min_new;
    }

    BinarySolveStats stats;
    const auto [gap, primal] = duality_gap();
    (void)primal;
    stats.duality_gap = gap;
    stats.alpha_min = *std::min_element(alpha.begin(), alpha.end());
    stats.alpha_max = *std::max_element(alpha.begin(), alpha.end());
    for (std::size_t i = 0; i < l; ++i) {
        const double grad = y[i] * kernels::dot(w.data(), x.row(i), dim) - 1.0;
        double viol;
        if (alpha[i] <= 0.0)
            viol = std::max(0.0, -grad);
        else if (alpha[i] >= c)
            viol = std::max(0.0, grad);
        else
            viol = std::fabs(grad);
        stats.kkt_violation = std::max(stats.kkt_violation, viol);
    }
    return stats;
}

} // namespace

SvmModel train_svm(const FeatureMatrix& z, const std::vector<int>& labels, double c,
                   std::size_t epochs, std::uint64_t seed, SvmDiagnostics* diag) {
    if (z.data.rows() != z.dim || z.data.cols() != z.samples)
        throw input_error("train_svm: inconsistent FeatureMatrix");
    if (z.samples != labels.size()) throw input_error("train_svm: label count mismatch");
    if (!z.data.all_finite()) throw input_error("train_svm: non-finite features");
    if (c <= 0.0) throw input_error("train_svm: C must be > 0");

    int max_label = -1;
    for (int lbl : labels) {
        if (lbl < 0) throw input_error("train_svm: negative label");
        max_label = std::max(max_label, lbl);
    }
    const std::size_t classes = static_cast<std::size_t>(max_label) + 1;
    if (classes < 2) throw input_error("train_svm: all labels identical (single-class data)");
    std::vector<std::size_t> per_class(classes, 0);
    for (int lbl : labels) ++per_class[static_cast<std::size_t>(lbl)];
    for (std::size_t k = 0; k < classes; ++k)
        if (per_class[k] == 0)
            throw input_error("train_svm: label gap, class " + std::to_string(k) + " has no samples");
    if (z.samples < classes) throw input_error("train_svm: fewer samples than classes");

    const std::size_t d = z.dim;
    const std::size_t n = z.samples;

    SvmModel m;
    m.c = c;
    m.classes = classes;
    m.feat_mean.resize(d);
    m.feat_std.resize(d);
    for (std::size_t r = 0; r < d; ++r) {
        const double mean = kernels::sum(z.data.row(r), n) / static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double dv = z.data(r, j) - mean;
            var += dv * dv;
        }
        var /= static_cast<double>(n > 1 ? n - 1 : 1);
        m.feat_mean[r] = mean;
        m.feat_std[r] = var > 1e-24 ? std::sqrt(var) : 1.0;
    }

    // standardized samples as rows, plus the bias column
    Matrix xs(n, d + 1);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t r = 0; r < d; ++r)
            xs(j, r) = (z.data(r, j) - m.feat_mean[r]) / m.feat_std[r];
        xs(j, d) = 1.0;
    }

    m.weights = Matrix(classes, d);
    m.biases.assign(classes, 0.0);
    std::vector<signed char> y(n);
    std::vector<double> w;
    for (std::size_t k = 0; k < classes; ++k) {
        for (std::size_t j = 0; j < n; ++j)
            y[j] = labels[j] == static_cast<int>(k) ? 1 : -1;
        const BinarySolveStats st = solve_binary(xs, y, c, epochs, rng::mix(seed, k), w);
        for (std::size_t r = 0; r < d; ++r) m.weights(k, r) = w[r];
        m.biases[k] = w[d];
        if (diag) {
            diag->duality_gap.push_back(st.duality_gap);
            diag->kkt_violation.push_back(st.kkt_violation);
            diag->alpha_min.push_back(st.alpha_min);
            diag->alpha_max.push_back(st.alpha_max);
        }
    }
    return m;
}

ScoreVector predict_scores(const SvmModel& m, const std::vector<double>& z) {
    const std::size_t d = m.weights.cols();
    if (z.size() != d) throw input_error("predict_scores: feature dimension mismatch");
    std::vector<double> std_z(d);
    for (std::size_t r = 0; r < d; ++r) std_z[r] = (z[r] - m.feat_mean[r]) / m.feat_std[r];
    ScoreVector s;
    s.scores.resize(m.classes);
    for (std::size_t k = 0; k < m.classes; ++k)
        s.scores[k] = kernels::dot(m.weights.row(k), std_z.data(), d) + m.biases[k];
    s.normalized = false;
    return s;
}

int predict(const SvmModel& m, const std::vector<double>& z) {
    const ScoreVector s = predict_scores(m, z);
    std::size_t best = 0;
    for (std::size_t k = 1; k < s.scores.size(); ++k)
        if (s.scores[k] > s.scores[best]) best = k;
    return static_cast<int>(best);
}

ScoreVector softmax_normalize(const ScoreVector& s) {
    if (s.normalized) throw input_error("softmax_normalize: scores already normalized");
    if (s.scores.empty()) throw input_error("softmax_normalize: empty score vector");
    ScoreVector out;
    out.scores.resize(s.scores.size());
    const double mx = *std::max_element(s.scores.begin(), s.scores.end());
    double z = 0.0;
    for (std::size_t k = 0; k < s.scores.size(); ++k) {
        out.scores[k] = std::exp(s.scores[k] - mx);
        z += out.scores[k];
    }
    for (double& v : out.scores) v /= z;
    out.normalized = true;
    return out;
}

int max_fuse(const ScoreVector& s1, const ScoreVector& s2) {
    if (!s1.normalized || !s2.normalized)
        throw input_error("max_fuse: inputs must be normalized score vectors");
    if (s1.scores.size() != s2.scores.size())
        throw input_error("max_fuse: class counts differ");
    if (s1.scores.empty()) throw input_error("max_fuse: empty score vectors");
    std::size_t best = 0;
    double best_v = std::max(s1.scores[0], s2.scores[0]);
    for (std::size_t k = 1; k < s1.scores.size(); ++k) {
        const double v = std::max(s1.scores[k], s2.scores[k]);
        if (v > best_v) { // strict: ties keep the lowest class index
            best_v = v;
            best = k;
        }
    }
    return static_cast<int>(best);
}

namespace {
constexpr char kMagic[4] = {'M', '2', 'F', 'S'};
}

void save_svm(const std::filesystem::path& path, const SvmModel& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw input_error("save_svm: cannot open " + path.string());
    os.write(kMagic, 4);
    const std::uint32_t dims[2] = {static_cast<std::uint32_t>(m.classes),
                                   static_cast<std::uint32_t>(m.weights.cols())};
    os.write(reinterpret_cast<const char*>(dims), sizeof dims);
    os.write(reinterpret_cast<const char*>(&m.c), sizeof m.c);
    write_matrix(os, m.weights);
    const std::size_t d = m.weights.cols();
    Matrix aux(3, std::max(d, m.classes), 0.0);
    for (std::size_t k = 0; k < m.classes; ++k) aux(0, k) = m.biases[k];
    for (std::size_t r = 0; r < d; ++r) {
        aux(1, r) = m.feat_mean[r];
        aux(2, r) = m.feat_std[r];
    }
    write_matrix(os, aux);
    if (!os) throw input_error("save_svm: write failed for " + path.string());
}

SvmModel load_svm(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw input_error("load_svm: cannot open " + path.string());
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw input_error("load_svm: bad magic in " + path.string());
    std::uint32_t dims[2] = {};
    is.read(reinterpret_cast<char*>(dims), sizeof dims);
    SvmModel m;
    is.read(reinterpret_cast<char*>(&m.c), sizeof m.c);
    if (!is) throw input_error("load_svm: truncated header");
    m.classes = dims[0];
    m.weights = read_matrix(is);
    const Matrix aux = read_matrix(is);
    const std::size_t d = dims[1];
    if (m.weights.rows() != m.classes || m.weights.cols() != d ||
        aux.cols() < std::max(d, m.classes))
        throw input_error("load_svm: inconsistent dimensions in " + path.string());
    m.biases.resize(m.classes);
    m.feat_mean.resize(d);
    m.feat_std.resize(d);
    for (std::size_t k = 0; k < m.classes; ++k) m.biases[k] = aux(0, k);
    for (std::size_t r = 0; r < d; ++r) {
        m.feat_mean[r] = aux(1, r);
        m.feat_std[r] = aux(2, r);
    }
    return m;
}

} // namespace m2::classify
