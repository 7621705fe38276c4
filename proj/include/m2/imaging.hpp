#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "m2/matrix.hpp"

namespace m2::imaging {

inline constexpr std::size_t kSignalRows = 24;
inline constexpr std::size_t kSignalCols = 52;

// Six inertial channels: ax, ay, az in g; gx, gy, gz in deg/s. One column per
// time sample.
struct InertialSequence {
    Matrix channels; // 6 x T, T >= 52
    double rate_hz = 0.0;
};

struct SignalImage {
    Matrix pixels; // 24 x 52, [0,1]
};

struct DepthSequence {
    std::vector<Matrix> frames; // H x W depth in millimeters, >= 2 frames
};

struct SfiImage {
    Matrix pixels; // [0,1], same H x W as the source frames
    std::size_t segment_index = 0;
};

// Green-magenta false color: r = b = base, g = filtered.
struct CompositeImage {
    Matrix r, g, b;
};

// Row-stacking order of the six channels (1-based); every channel pair is
// adjacent somewhere in the 24 rows.
const std::array<int, 24>& stacking_order();

// 3x3 horizontal-edge kernel [[1,1,1],[0,0,0],[-1,-1,-1]].
const Matrix& prewitt_kernel();

// Length-52 window start offsets at stride 26: {0, 26, ...} while fitting.
std::vector<std::size_t> window_starts(std::size_t samples);

SignalImage make_signal_image(const InertialSequence& seq, std::size_t start);

// Cumulative thresholded |frame difference| energy over K prefix segments;
// segment K-1 covers the whole action. Each image min-max normalized.
std::vector<SfiImage> make_sfi(const DepthSequence& depth, std::size_t segments,
                               double motion_threshold);

// Correlation with prewitt_kernel(), replicate padding, same-size output,
// not renormalized (entries may be negative).
Matrix prewitt(const Matrix& img);

// Min-max to [0,1]; constant images map to all zeros.
Matrix rescale01(const Matrix& img);

CompositeImage composite(const Matrix& base, const Matrix& filtered);

struct AugmentConfig {
    int jitter_copies = 1;
    double jitter_sigma = 0.05; // in units of per-channel std
    int scale_copies = 1;
    double scale_sigma = 0.1;   // per-channel factor ~ N(1, scale_sigma)
    int warp_copies = 1;
    double warp_max_stretch = 0.1; // bound on |local time stretch - 1|
};

// Jittered, scaled and time-warped variants; deterministic given seed.
std::vector<InertialSequence> augment(const InertialSequence& seq,
                                      const AugmentConfig& cfg, std::uint64_t seed);

// CSV with one row per time sample, exactly 6 float columns, optional header.
InertialSequence load_inertial_csv(const std::filesystem::path& path, double rate_hz);
void save_inertial_csv(const std::filesystem::path& path, const InertialSequence& seq);

// Binary PGM (P5). 16-bit big-endian sample words hold depth millimeters;
// save_pgm8 exports a [0,1] image for inspection.
Matrix load_pgm(const std::filesystem::path& path);
void save_pgm16(const std::filesystem::path& path, const Matrix& depth_mm);
void save_pgm8(const std::filesystem::path& path, const Matrix& unit_image);

// All *.pgm files in the directory, lexicographically ordered.
DepthSequence load_depth_dir(const std::filesystem::path& dir);

} // namespace m2::imaging
