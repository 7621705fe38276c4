#include <algorithm>
#include <cmath>
#include <random>

#include "m2/error.hpp"
#include "m2/imaging.hpp"
#include "m2/numerics.hpp"
#include "m2/rng.hpp"

namespace m2::imaging {

namespace {

double channel_std(const Matrix& channels, std::size_t ch) {
    const std::size_t n = channels.cols();
    const double* row = channels.row(ch);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += row[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (row[i] - mean) * (row[i] - mean);
    return std::sqrt(var / static_cast<double>(n > 1 ? n - 1 : 1));
}

InertialSequence jittered(const InertialSequence& seq, double sigma_ratio, std::mt19937_64& g) {
    InertialSequence out = seq;
    for (std::size_t ch = 0; ch < 6; ++ch) {
        const double sigma = sigma_ratio * channel_std(seq.channels, ch);
        double* row = out.channels.row(ch);
        for (std::size_t i = 0; i < out.channels.cols(); ++i)
            row[i] += sigma * rng::gaussian(g);
    }
    return out;
}

InertialSequence scaled(const InertialSequence& seq, double sigma, std::mt19937_64& g) {
    InertialSequence out = seq;
    for (std::size_t ch = 0; ch < 6; ++ch) {
        const double factor = 1.0 + sigma * rng::gaussian(g);
        double* row = out.channels.row(ch);
        for (std::size_t i = 0; i < out.channels.cols(); ++i) row[i] *= factor;
    }
    return out;
}

// Monotone warp of the time axis: local speed 1 + s(t), |s| <= max_stretch,
// s from a Catmull-Rom curve over a few mean-centered random knots. Channels
// are resampled at the warped positions with the shared cubic kernel.
InertialSequence warped(const InertialSequence& seq, double max_stretch, std::mt19937_64& g) {
    const std::size_t t_len = seq.channels.cols();
    constexpr std::size_t kKnots = 6;
    double knots[kKnots];
    double mean = 0.0;
    for (double& v : knots) {
        v = rng::uniform(g, -1.0, 1.0);
        mean += v;
    }
    mean /= kKnots;
    for (double& v : knots) v -= mean;

    const auto knot_at = [&](long i) {
        if (i < 0) i = 0;
        if (i >= static_cast<long>(kKnots)) i = kKnots - 1;
        return knots[i];
    };
    const auto speed_offset = [&](double t01) {
        const double x = t01 * (kKnots - 1);
        const long i = static_cast<long>(std::floor(x));
        const double u = x - std::floor(x);
        const double p0 = knot_at(i - 1), p1 = knot_at(i), p2 = knot_at(i + 1), p3 = knot_at(i + 2);
        const double cr = p1 + 0.5 * u * (p2 - p0 + u * (2 * p0 - 5 * p1 + 4 * p2 - p3 +
                                                         u * (3 * (p1 - p2) + p3 - p0)));
        const double s = max_stretch * cr;
        return std::clamp(s, -max_stretch, max_stretch);
    };

    std::vector<double> pos(t_len);
    pos[0] = 0.0;
    for (std::size_t t = 1; t < t_len; ++t) {
        const double t01 = static_cast<double>(t - 1) / static_cast<double>(t_len - 1);
        pos[t] = pos[t - 1] + 1.0 + speed_offset(t01);
    }

    InertialSequence out = seq;
    for (std::size_t ch = 0; ch < 6; ++ch) {
        const double* src = seq.channels.row(ch);
        double* dst = out.channels.row(ch);
        for (std::size_t t = 0; t < t_len; ++t)
            dst[t] = numerics::cubic_sample_1d(src, t_len, pos[t]);
    }
    return out;
}

} // namespace

std::vector<InertialSequence> augment(const InertialSequence& seq, const AugmentConfig& cfg,
                                      std::uint64_t seed) {
    if (seq.channels.rows() != 6) throw input_error("augment: expected 6 channels");
    if (cfg.jitter_copies < 0 || cfg.scale_copies < 0 || cfg.warp_copies < 0)
        throw input_error("augment: negative copy count");
    std::mt19937_64 g(seed);
    std::vector<InertialSequence> out;
    out.reserve(static_cast<std::size_t>(cfg.jitter_copies + cfg.scale_copies + cfg.warp_copies));
    for (int i = 0; i < cfg.jitter_copies; ++i) out.push_back(jittered(seq, cfg.jitter_sigma, g));
    for (int i = 0; i < cfg.scale_copies; ++i) out.push_back(scaled(seq, cfg.scale_sigma, g));
    for (int i = 0; i < cfg.warp_copies; ++i) out.push_back(warped(seq, cfg.warp_max_stretch, g));
    return out;
}

} // namespace m2::imaging
