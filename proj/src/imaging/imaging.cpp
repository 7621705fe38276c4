#include "m2/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "m2/error.hpp"

namespace m2::imaging {

const std::array<int, 24>& stacking_order() {
    static const std::array<int, 24> order = {1, 2, 3, 4, 5, 6, 1, 3, 5, 2, 4, 6,
                                              1, 4, 2, 5, 3, 6, 1, 5, 2, 6, 1, 6};
    return order;
}

const Matrix& prewitt_kernel() {
    static const Matrix h = {{1, 1, 1}, {0, 0, 0}, {-1, -1, -1}};
    return h;
}

std::vector<std::size_t> window_starts(std::size_t samples) {
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + kSignalCols <= samples; s += 26) starts.push_back(s);
    return starts;
}

Matrix rescale01(const Matrix& img) {
    if (img.empty()) throw input_error("rescale01: empty image");
    const double* d = img.data();
    double lo = d[0], hi = d[0];
    for (std::size_t i = 1; i < img.size(); ++i) {
        lo = std::min(lo, d[i]);
        hi = std::max(hi, d[i]);
    }
    Matrix out(img.rows(), img.cols());
    if (hi > lo) {
        const double inv = 1.0 / (hi - lo);
        for (std::size_t i = 0; i < img.size(); ++i) out.data()[i] = (d[i] - lo) * inv;
    }
    return out; // constant image -> all zeros
}

SignalImage make_signal_image(const InertialSequence& seq, std::size_t start) {
    if (seq.channels.rows() != 6)
        throw input_error("make_signal_image: expected exactly 6 channels, got " +
                          std::to_string(seq.channels.rows()));
    if (start + kSignalCols > seq.channels.cols())
        throw input_error("make_signal_image: window [" + std::to_string(start) + ", " +
                          std::to_string(start + kSignalCols) + ") exceeds " +
                          std::to_string(seq.channels.cols()) + " samples");
    Matrix img(kSignalRows, kSignalCols);
    const auto& order = stacking_order();
    for (std::size_t r = 0; r < kSignalRows; ++r) {
        const std::size_t ch = static_cast<std::size_t>(order[r] - 1);
        for (std::size_t c = 0; c < kSignalCols; ++c)
            img(r, c) = seq.channels(ch, start + c);
    }
    return SignalImage{rescale01(img)};
}

std::vector<SfiImage> make_sfi(const DepthSequence& depth, std::size_t segments,
                               double motion_threshold) {
    const std::size_t f = depth.frames.size();
    if (segments == 0) throw input_error("make_sfi: segment count must be >= 1");
    if (f < segments + 1)
        throw input_error("make_sfi: need at least " + std::to_string(segments + 1) +
                          " frames, got " + std::to_string(f));
    if (motion_threshold < 0) throw input_error("make_sfi: negative motion threshold");
    for (std::size_t t = 1; t < f; ++t)
        if (!depth.frames[t].same_shape(depth.frames[0]))
            throw input_error("make_sfi: frames have mixed dimensions");

    const std::size_t h = depth.frames[0].rows();
    const std::size_t w = depth.frames[0].cols();
    Matrix energy(h, w, 0.0);
    std::vector<SfiImage> out;
    out.reserve(segments);
    std::size_t pair = 0; // next frame-difference index to accumulate
    for (std::size_t k = 0; k < segments; ++k) {
        const std::size_t end = ((k + 1) * f) / segments; // segment k covers frames [0, end)
        for (; pair + 1 < end; ++pair) {
            const double* a = depth.frames[pair].data();
            const double* b = depth.frames[pair + 1].data();
            for (std::size_t i = 0; i < h * w; ++i) {
                const double d = std::fabs(b[i] - a[i]);
                if (d > motion_threshold) energy.data()[i] += d;
            }
        }
        out.push_back(SfiImage{rescale01(energy), k});
    }
    return out;
}

Matrix prewitt(const Matrix& img) {
    const std::size_t h = img.rows(), w = img.cols();
    if (h < 3 || w < 3)
        throw input_error("prewitt: image must be at least 3x3, got " + std::to_string(h) +
                          "x" + std::to_string(w));
    const Matrix& k = prewitt_kernel();
    Matrix out(h, w);
    const auto clamp = [](long v, std::size_t n) {
        if (v < 0) return std::size_t{0};
        if (v >= static_cast<long>(n)) return n - 1;
        return static_cast<std::size_t>(v);
    };
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            double acc = 0.0;
            for (long i = -1; i <= 1; ++i) {
                const double* row = img.row(clamp(static_cast<long>(r) + i, h));
                const double* krow = k.row(static_cast<std::size_t>(i + 1));
                for (long j = -1; j <= 1; ++j)
                    acc += krow[j + 1] * row[clamp(static_cast<long>(c) + j, w)];
            }
            out(r, c) = acc;
        }
    }
    return out;
}

CompositeImage composite(const Matrix& base, const Matrix& filtered) {
    if (!base.same_shape(filtered))
        throw input_error("composite: image dimensions differ");
    return CompositeImage{base, filtered, base};
}

} // namespace m2::imaging
