#include <cmath>
#include <cstdio>
#include <random>

#include "m2/error.hpp"
#include "m2/pipeline.hpp"
#include "m2/rng.hpp"

namespace m2::pipeline {

namespace {

constexpr std::size_t kFrames = 10;
constexpr std::size_t kFrameSize = 24; // square synthetic depth frames
constexpr std::size_t kTimeSteps = 52;
constexpr double kBackgroundMm = 1000.0;
constexpr double kBlobDepthMm = 400.0; // subtracted from the background

// Gaussian blob sweeping horizontally; the row band encodes the depth bit.
void render_frames(imaging::DepthSequence& depth, bool lower_band, double noise,
                   std::mt19937_64& g) {
    const double cy = (lower_band ? 17.0 : 6.0) + rng::uniform(g, -1.5, 1.5);
    const double cx0 = 4.0 + rng::uniform(g, -1.5, 1.5);
    const double speed = 1.5 + rng::uniform(g, -0.2, 0.2);
    depth.frames.clear();
    for (std::size_t t = 0; t < kFrames; ++t) {
        Matrix f(kFrameSize, kFrameSize, kBackgroundMm);
        const double cx = cx0 + speed * static_cast<double>(t);
        for (std::size_t r = 0; r < kFrameSize; ++r) {
            for (std::size_t c = 0; c < kFrameSize; ++c) {
                const double dy = static_cast<double>(r) - cy;
                const double dx = static_cast<double>(c) - cx;
                const double r2 = dx * dx + dy * dy;
                f(r, c) -= kBlobDepthMm * std::exp(-r2 / 8.0);
            }
        }
        if (noise > 0.0)
            for (std::size_t i = 0; i < f.size(); ++i)
                f.data()[i] = std::max(0.0, f.data()[i] + noise * 100.0 * rng::gaussian(g));
        depth.frames.push_back(std::move(f));
    }
}

// Six oscillating channels; the frequency encodes the inertial bit.
void render_inertial(imaging::InertialSequence& seq, bool fast, double noise,
                     std::mt19937_64& g) {
    static const double amp[6] = {1.0, 0.8, 0.6, 40.0, 30.0, 20.0};
    static const double chan_phase[6] = {0.0, 1.3, 2.1, 0.7, 2.9, 1.7};
    const double freq = fast ? 5.0 : 2.0; // Hz at 50 Hz sampling
    const double phase = rng::uniform(g, 0.0, 6.283185307179586);
    seq.rate_hz = 50.0;
    seq.channels = Matrix(6, kTimeSteps);
    for (std::size_t ch = 0; ch < 6; ++ch) {
        const double a = amp[ch] * (1.0 + rng::uniform(g, -0.1, 0.1));
        for (std::size_t t = 0; t < kTimeSteps; ++t) {
            const double arg =
                6.283185307179586 * freq * static_cast<double>(t) / 50.0 + phase + chan_phase[ch];
            double v = a * std::sin(arg);
            if (noise > 0.0) v += noise * amp[ch] * rng::gaussian(g);
            seq.channels(ch, t) = v;
        }
    }
}

} // namespace

LoadedDataset synth_dataset(const SynthConfig& cfg) {
    if (cfg.classes != 4)
        throw input_error("synth_dataset: classes must be 4 (two-bit construction)");
    if (cfg.samples_per_class < 25)
        throw input_error("synth_dataset: samples_per_class must be >= 25");
    if (cfg.noise < 0.0) throw input_error("synth_dataset: negative noise");

    std::mt19937_64 g(cfg.seed);
    LoadedDataset ds;
    ds.classes = 4;
    ds.class_names = {"low-top", "high-top", "low-bottom", "high-bottom"};
    ds.rate_hz = 50.0;
    for (int label = 0; label < 4; ++label) {
        const bool lower_band = (label & 2) != 0; // depth bit
        const bool fast = (label & 1) != 0;       // inertial bit
        for (std::size_t s = 0; s < cfg.samples_per_class; ++s) {
            LoadedSample ls;
            ls.label = label;
            ls.subject = static_cast<int>(s % 8) + 1;
            render_frames(ls.depth, lower_band, cfg.noise, g);
            render_inertial(ls.inertial, fast, cfg.noise, g);
            ds.samples.push_back(std::move(ls));
        }
    }
    return ds;
}

void write_dataset(const LoadedDataset& ds, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "samples");
    DatasetManifest m;
    m.rate_hz = ds.rate_hz;
    m.class_names = ds.class_names;
    char name[64];
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const LoadedSample& s = ds.samples[i];
        std::snprintf(name, sizeof name, "samples/si%04zu.csv", i);
        const std::string csv = name;
        std::snprintf(name, sizeof name, "samples/depth%04zu", i);
        const std::string ddir = name;
        imaging::save_inertial_csv(dir / csv, s.inertial);
        fs::create_directories(dir / ddir);
        for (std::size_t t = 0; t < s.depth.frames.size(); ++t) {
            std::snprintf(name, sizeof name, "frame%03zu.pgm", t);
            imaging::save_pgm16(dir / ddir / name, s.depth.frames[t]);
        }
        m.samples.push_back(ManifestSample{csv, ddir, s.subject, s.label});
    }
    write_manifest(dir / "manifest.txt", m);
}

} // namespace m2::pipeline
