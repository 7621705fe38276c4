#include <cmath>
#include <cstddef>
#include <vector>

#include "m2/error.hpp"
#include "m2/numerics.hpp"

namespace m2::numerics {

namespace {

// Keys (1981) cubic convolution kernel with a = -0.5.
double keys(double t) {
    t = std::fabs(t);
    if (t < 1.0) return ((1.5 * t - 2.5) * t) * t + 1.0;
    if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
    return 0.0;
}

struct Tap {
    std::size_t idx[4]; // clamped source indices
    double w[4];        // weights, normalized to sum 1
};

std::vector<Tap> make_taps(std::size_t in_len, std::size_t out_len) {
    std::vector<Tap> taps(out_len);
    const double scale = static_cast<double>(in_len) / static_cast<double>(out_len);
    const auto clamp = [in_len](long i) {
        if (i < 0) return std::size_t{0};
        if (i >= static_cast<long>(in_len)) return in_len - 1;
        return static_cast<std::size_t>(i);
    };
    for (std::size_t o = 0; o < out_len; ++o) {
        const double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
        const double base = std::floor(src);
        const double f = src - base;
        const long b = static_cast<long>(base);
        Tap& t = taps[o];
        t.idx[0] = clamp(b - 1);
        t.idx[1] = clamp(b);
        t.idx[2] = clamp(b + 1);
        t.idx[3] = clamp(b + 2);
        t.w[0] = keys(1.0 + f);
        t.w[1] = keys(f);
        t.w[2] = keys(1.0 - f);
        t.w[3] = keys(2.0 - f);
        const double s = t.w[0] + t.w[1] + t.w[2] + t.w[3];
        for (double& w : t.w) w /= s;
    }
    return taps;
}

// Anchored form of the normalized 4-tap sum: algebraically identical to
// sum(w_i * p_i) but returns p1 exactly when all taps are equal, which keeps
// constant images bit-exact through the resize.
double apply(const Tap& t, double p0, double p1, double p2, double p3) {
    return p1 + t.w[0] * (p0 - p1) + t.w[2] * (p2 - p1) + t.w[3] * (p3 - p1);
}

} // namespace

double cubic_sample_1d(const double* data, std::size_t n, double pos) {
    if (n == 0) throw input_error("cubic_sample_1d: empty data");
    if (pos < 0.0) pos = 0.0;
    if (pos > static_cast<double>(n - 1)) pos = static_cast<double>(n - 1);
    const double base = std::floor(pos);
    const double f = pos - base;
    const long b = static_cast<long>(base);
    const auto clamp = [n](long i) {
        if (i < 0) return std::size_t{0};
        if (i >= static_cast<long>(n)) return n - 1;
        return static_cast<std::size_t>(i);
    };
    Tap t;
    t.idx[0] = clamp(b - 1);
    t.idx[1] = clamp(b);
    t.idx[2] = clamp(b + 1);
    t.idx[3] = clamp(b + 2);
    t.w[0] = keys(1.0 + f);
    t.w[1] = keys(f);
    t.w[2] = keys(1.0 - f);
    t.w[3] = keys(2.0 - f);
    const double s = t.w[0] + t.w[1] + t.w[2] + t.w[3];
    for (double& w : t.w) w /= s;
    return apply(t, data[t.idx[0]], data[t.idx[1]], data[t.idx[2]], data[t.idx[3]]);
}

Matrix bicubic_resize(const Matrix& img, std::size_t out_h, std::size_t out_w) {
    if (img.rows() == 0 || img.cols() == 0) throw input_error("bicubic_resize: empty image");
    if (out_h == 0 || out_w == 0) throw input_error("bicubic_resize: zero output size");

    const std::vector<Tap> wt = make_taps(img.cols(), out_w);
    const std::vector<Tap> ht = make_taps(img.rows(), out_h);

    Matrix mid(img.rows(), out_w);
    for (std::size_t r = 0; r < img.rows(); ++r) {
        const double* src = img.row(r);
        double* dst = mid.row(r);
        for (std::size_t o = 0; o < out_w; ++o) {
            const Tap& t = wt[o];
            dst[o] = apply(t, src[t.idx[0]], src[t.idx[1]], src[t.idx[2]], src[t.idx[3]]);
        }
    }

    Matrix out(out_h, out_w);
    for (std::size_t o = 0; o < out_h; ++o) {
        const Tap& t = ht[o];
        const double* r0 = mid.row(t.idx[0]);
        const double* r1 = mid.row(t.idx[1]);
        const double* r2 = mid.row(t.idx[2]);
        const double* r3 = mid.row(t.idx[3]);
        double* dst = out.row(o);
        for (std::size_t c = 0; c < out_w; ++c)
            dst[c] = apply(t, r0[c], r1[c], r2[c], r3[c]);
    }
    return out;
}

} // namespace m2::numerics
