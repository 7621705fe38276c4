#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "m2/error.hpp"
#include "m2/imaging.hpp"
#include "m2/rng.hpp"

using m2::Matrix;
namespace img = m2::imaging;

namespace {

img::InertialSequence constant_channels(std::size_t t_len) {
    // channel i holds the constant value i+1
    img::InertialSequence seq;
    seq.rate_hz = 50.0;
    seq.channels = Matrix(6, t_len);
    for (std::size_t ch = 0; ch < 6; ++ch)
        for (std::size_t t = 0; t < t_len; ++t) seq.channels(ch, t) = static_cast<double>(ch + 1);
    return seq;
}

img::InertialSequence random_sequence(std::size_t t_len, std::mt19937_64& g) {
    img::InertialSequence seq;
    seq.rate_hz = 50.0;
    seq.channels = Matrix(6, t_len);
    for (std::size_t i = 0; i < seq.channels.size(); ++i)
        seq.channels.data()[i] = m2::rng::uniform(g, -2.0, 2.0);
    return seq;
}

// Direct convolution-sum oracle for the fixed 3x3 kernel with replicate
// padding, written with explicit clamping and no shared code path.
Matrix prewitt_oracle(const Matrix& in) {
    const double kern[3][3] = {{1, 1, 1}, {0, 0, 0}, {-1, -1, -1}};
    Matrix out(in.rows(), in.cols());
    for (long r = 0; r < static_cast<long>(in.rows()); ++r)
        for (long c = 0; c < static_cast<long>(in.cols()); ++c) {
            double acc = 0;
            for (long i = -1; i <= 1; ++i)
                for (long j = -1; j <= 1; ++j) {
                    long rr = r + i, cc = c + j;
                    rr = std::max(0L, std::min(rr, static_cast<long>(in.rows()) - 1));
                    cc = std::max(0L, std::min(cc, static_cast<long>(in.cols()) - 1));
                    acc += kern[i + 1][j + 1] *
                           in(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
                }
            out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
        }
    return out;
}

} // namespace

TEST_CASE("stacking order: value, length, and all-pairs adjacency") {
    const auto& order = img::stacking_order();
    REQUIRE(order.size() == 24);
    const int expected[24] = {1, 2, 3, 4, 5, 6, 1, 3, 5, 2, 4, 6,
                              1, 4, 2, 5, 3, 6, 1, 5, 2, 6, 1, 6};
    for (std::size_t i = 0; i < 24; ++i) CHECK(order[i] == expected[i]);
    for (std::size_t i = 0; i < 6; ++i) CHECK(order[i] == static_cast<int>(i + 1));

    std::set<std::pair<int, int>> seen;
    for (std::size_t i = 0; i + 1 < 24; ++i) {
        const int a = std::min(order[i], order[i + 1]);
        const int b = std::max(order[i], order[i + 1]);
        if (a != b) seen.insert({a, b});
    }
    for (int a = 1; a <= 6; ++a)
        for (int b = a + 1; b <= 6; ++b) CHECK(seen.count({a, b}) == 1);
}

TEST_CASE("make_signal_image: constant channels reproduce the stacking permutation") {
    const img::SignalImage si = img::make_signal_image(constant_channels(60), 0);
    REQUIRE(si.pixels.rows() == 24);
    REQUIRE(si.pixels.cols() == 52);
    // min value 1 and max 6 map to (v-1)/5 after normalization
    const auto& order = img::stacking_order();
    for (std::size_t r = 0; r < 24; ++r) {
        const double expect = (static_cast<double>(order[r]) - 1.0) / 5.0;
        for (std::size_t c = 0; c < 52; ++c)
            CHECK(si.pixels(r, c) == doctest::Approx(expect).epsilon(1e-15));
    }
}

TEST_CASE("make_signal_image: output range, window selection, errors") {
    std::mt19937_64 g(3);
    const img::InertialSequence seq = random_sequence(130, g);
    const img::SignalImage a = img::make_signal_image(seq, 0);
    const img::SignalImage b = img::make_signal_image(seq, 26);
    double lo = 2, hi = -1;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        lo = std::min(lo, a.pixels.data()[i]);
        hi = std::max(hi, a.pixels.data()[i]);
    }
    CHECK(lo == 0.0);
    CHECK(hi == 1.0);
    // different windows produce different images on random data
    bool differ = false;
    for (std::size_t i = 0; i < a.pixels.size() && !differ; ++i)
        differ = a.pixels.data()[i] != b.pixels.data()[i];
    CHECK(differ);

    CHECK_THROWS_AS(img::make_signal_image(seq, 130 - 51), m2::input_error);
    img::InertialSequence five;
    five.channels = Matrix(5, 60);
    CHECK_THROWS_AS(img::make_signal_image(five, 0), m2::input_error);
}

TEST_CASE("make_signal_image: all-zero input maps to the all-zero image") {
    img::InertialSequence seq;
    seq.channels = Matrix(6, 52, 0.0);
    const img::SignalImage si = img::make_signal_image(seq, 0);
    for (std::size_t i = 0; i < si.pixels.size(); ++i) CHECK(si.pixels.data()[i] == 0.0);
}

TEST_CASE("window_starts: stride 26, length 52") {
    CHECK(img::window_starts(51).empty());
    CHECK(img::window_starts(52) == std::vector<std::size_t>{0});
    CHECK(img::window_starts(77) == std::vector<std::size_t>{0});
    CHECK(img::window_starts(78) == std::vector<std::size_t>{0, 26});
    CHECK(img::window_starts(104) == std::vector<std::size_t>{0, 26, 52});
}

TEST_CASE("make_sfi: static sequence gives an all-zero image") {
    img::DepthSequence d;
    for (int i = 0; i < 4; ++i) d.frames.push_back(Matrix(8, 8, 503.0));
    const auto sfis = img::make_sfi(d, 1, 10.0);
    REQUIRE(sfis.size() == 1);
    for (std::size_t i = 0; i < sfis[0].pixels.size(); ++i) CHECK(sfis[0].pixels.data()[i] == 0.0);
}

TEST_CASE("make_sfi: single changed pixel above threshold lights up alone") {
    img::DepthSequence d;
    d.frames.push_back(Matrix(6, 7, 100.0));
    Matrix second(6, 7, 100.0);
    second(2, 3) = 160.0; // |diff| = 60 > 10
    d.frames.push_back(second);
    const auto sfis = img::make_sfi(d, 1, 10.0);
    REQUIRE(sfis.size() == 1);
    for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t c = 0; c < 7; ++c)
            CHECK(sfis[0].pixels(r, c) == (r == 2 && c == 3 ? 1.0 : 0.0));
}

TEST_CASE("make_sfi: segmentation rule and cumulative monotonicity") {
    // 100 frames, K=5: segment k covers frames [0, 20(k+1))
    std::mt19937_64 g(9);
    img::DepthSequence d;
    Matrix cur(5, 5, 400.0);
    for (int t = 0; t < 100; ++t) {
        cur(static_cast<std::size_t>(g() % 5), static_cast<std::size_t>(g() % 5)) += 25.0;
        d.frames.push_back(cur);
    }
    const auto sfis = img::make_sfi(d, 5, 10.0);
    REQUIRE(sfis.size() == 5);
    for (std::size_t k = 0; k < 5; ++k) CHECK(sfis[k].segment_index == k);

    // oracle: accumulate thresholded |diffs| directly over the frame prefix
    std::vector<Matrix> oracle_energy;
    for (std::size_t k = 0; k < 5; ++k) {
        const std::size_t end = 20 * (k + 1);
        Matrix e(5, 5, 0.0);
        for (std::size_t t = 0; t + 1 < end; ++t)
            for (std::size_t i = 0; i < e.size(); ++i) {
                const double diff = std::fabs(d.frames[t + 1].data()[i] - d.frames[t].data()[i]);
                if (diff > 10.0) e.data()[i] += diff;
            }
        oracle_energy.push_back(e);
    }
    for (std::size_t k = 0; k < 5; ++k) {
        // pixelwise non-decreasing across segments before normalization
        if (k > 0)
            for (std::size_t i = 0; i < 25; ++i)
                CHECK(oracle_energy[k].data()[i] >= oracle_energy[k - 1].data()[i]);
        double lo = oracle_energy[k].data()[0], hi = lo;
        for (std::size_t i = 0; i < 25; ++i) {
            lo = std::min(lo, oracle_energy[k].data()[i]);
            hi = std::max(hi, oracle_energy[k].data()[i]);
        }
        for (std::size_t i = 0; i < 25; ++i) {
            const double expect = hi > lo ? (oracle_energy[k].data()[i] - lo) / (hi - lo) : 0.0;
            CHECK(sfis[k].pixels.data()[i] == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("make_sfi: errors on bad segment counts") {
    img::DepthSequence d;
    d.frames.assign(3, Matrix(4, 4, 1.0));
    CHECK_THROWS_AS(img::make_sfi(d, 0, 1.0), m2::input_error);
    CHECK_THROWS_AS(img::make_sfi(d, 3, 1.0), m2::input_error); // needs K+1 frames
    CHECK_THROWS_AS(img::make_sfi(d, 1, -2.0), m2::input_error);
}

TEST_CASE("prewitt: constant image maps to zero everywhere") {
    const Matrix out = img::prewitt(Matrix(9, 11, 42.0));
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == 0.0);
}

TEST_CASE("prewitt: horizontal step responds, vertical step is silent") {
    const std::size_t h = 10, w = 12;
    Matrix hstep(h, w);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) hstep(r, c) = r < h / 2 ? 0.0 : 1.0;
    const Matrix hout = img::prewitt(hstep);
    for (std::size_t r = 1; r + 1 < h; ++r)
        for (std::size_t c = 1; c + 1 < w; ++c) {
            const double expect = (r == h / 2 - 1 || r == h / 2) ? -3.0 : 0.0;
            CHECK(hout(r, c) == expect);
        }

    Matrix vstep(h, w);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) vstep(r, c) = c < w / 2 ? 0.0 : 1.0;
    const Matrix vout = img::prewitt(vstep);
    for (std::size_t r = 1; r + 1 < h; ++r)
        for (std::size_t c = 1; c + 1 < w; ++c) CHECK(vout(r, c) == 0.0);
}

TEST_CASE("prewitt: equals the nested-sum oracle exactly on random integer images") {
    std::mt19937_64 g(15);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t h = 3 + g() % 9, w = 3 + g() % 9;
        Matrix in(h, w);
        for (std::size_t i = 0; i < in.size(); ++i)
            in.data()[i] = std::floor(m2::rng::uniform(g, 0, 256));
        const Matrix a = img::prewitt(in);
        const Matrix b = prewitt_oracle(in);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data()[i] == b.data()[i]);
    }
}

TEST_CASE("prewitt: shift invariance and linearity") {
    std::mt19937_64 g(21);
    Matrix a(8, 9), b(8, 9);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a.data()[i] = m2::rng::uniform(g, -1, 1);
        b.data()[i] = m2::rng::uniform(g, -1, 1);
    }
    Matrix shifted = a;
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted.data()[i] += 17.25;
    const Matrix pa = img::prewitt(a);
    const Matrix ps = img::prewitt(shifted);
    for (std::size_t i = 0; i < pa.size(); ++i)
        CHECK(ps.data()[i] == doctest::Approx(pa.data()[i]).epsilon(1e-12));

    Matrix combo(8, 9);
    for (std::size_t i = 0; i < combo.size(); ++i)
        combo.data()[i] = 0.75 * a.data()[i] - 1.5 * b.data()[i];
    const Matrix pc = img::prewitt(combo);
    const Matrix pb = img::prewitt(b);
    for (std::size_t i = 0; i < pc.size(); ++i)
        CHECK(pc.data()[i] ==
              doctest::Approx(0.75 * pa.data()[i] - 1.5 * pb.data()[i]).epsilon(1e-12));

    CHECK_THROWS_AS(img::prewitt(Matrix(2, 8, 0.0)), m2::input_error);
}

TEST_CASE("prewitt kernel is the fixed horizontal-edge stencil") {
    const Matrix& k = img::prewitt_kernel();
    const double expect[3][3] = {{1, 1, 1}, {0, 0, 0}, {-1, -1, -1}};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(k(i, j) == expect[i][j]);
}

TEST_CASE("composite: channel mapping and gray equality") {
    Matrix base(4, 4), filt(4, 4);
    std::mt19937_64 g(27);
    for (std::size_t i = 0; i < base.size(); ++i) {
        base.data()[i] = m2::rng::uniform(g, 0, 1);
        filt.data()[i] = m2::rng::uniform(g, 0, 1);
    }
    base(1, 1) = filt(1, 1) = 0.4;  // equal pixel
    base(2, 2) = 0.0; filt(2, 2) = 1.0; // pure green
    base(3, 3) = 1.0; filt(3, 3) = 0.0; // pure magenta
    const img::CompositeImage c = img::composite(base, filt);
    for (std::size_t i = 0; i < base.size(); ++i) {
        CHECK(c.r.data()[i] == base.data()[i]);
        CHECK(c.g.data()[i] == filt.data()[i]);
        CHECK(c.b.data()[i] == base.data()[i]);
    }
    CHECK(c.r(1, 1) == c.g(1, 1));
    CHECK(c.g(1, 1) == c.b(1, 1));
    CHECK(c.r(2, 2) == 0.0);
    CHECK(c.g(2, 2) == 1.0);
    CHECK(c.b(2, 2) == 0.0);
    CHECK(c.r(3, 3) == 1.0);
    CHECK(c.g(3, 3) == 0.0);
    CHECK(c.b(3, 3) == 1.0);

    CHECK_THROWS_AS(img::composite(base, Matrix(4, 5)), m2::input_error);
}

TEST_CASE("composite(x, x) is gray everywhere") {
    std::mt19937_64 g(33);
    Matrix x(6, 5);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = m2::rng::uniform(g, 0, 1);
    const img::CompositeImage c = img::composite(x, x);
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(c.r.data()[i] == c.g.data()[i]);
        CHECK(c.g.data()[i] == c.b.data()[i]);
    }
}

TEST_CASE("augment: identity parameters reproduce the input bit-exactly") {
    std::mt19937_64 g(39);
    const img::InertialSequence seq = random_sequence(60, g);
    img::AugmentConfig cfg;
    cfg.jitter_sigma = 0.0;
    cfg.scale_sigma = 0.0;
    cfg.warp_max_stretch = 0.0;
    const auto out = img::augment(seq, cfg, 1234);
    REQUIRE(out.size() == 3);
    for (const auto& v : out)
        for (std::size_t i = 0; i < v.channels.size(); ++i)
            CHECK(v.channels.data()[i] == seq.channels.data()[i]);
}

TEST_CASE("augment: deterministic given the seed, different across seeds") {
    std::mt19937_64 g(41);
    const img::InertialSequence seq = random_sequence(70, g);
    img::AugmentConfig cfg; // defaults: one copy of each kind
    const auto a = img::augment(seq, cfg, 77);
    const auto b = img::augment(seq, cfg, 77);
    const auto c = img::augment(seq, cfg, 78);
    REQUIRE(a.size() == b.size());
    bool all_equal = true, any_diff_seed = false;
    for (std::size_t v = 0; v < a.size(); ++v)
        for (std::size_t i = 0; i < a[v].channels.size(); ++i) {
            if (a[v].channels.data()[i] != b[v].channels.data()[i]) all_equal = false;
            if (a[v].channels.data()[i] != c[v].channels.data()[i]) any_diff_seed = true;
        }
    CHECK(all_equal);
    CHECK(any_diff_seed);
}

TEST_CASE("augment: jitter variants stay within 5 sigma per sample") {
    std::mt19937_64 g(43);
    const img::InertialSequence seq = random_sequence(64, g);
    img::AugmentConfig cfg;
    cfg.jitter_copies = 3;
    cfg.jitter_sigma = 0.05;
    cfg.scale_copies = 0;
    cfg.warp_copies = 0;
    const auto out = img::augment(seq, cfg, 99);
    REQUIRE(out.size() == 3);
    for (std::size_t ch = 0; ch < 6; ++ch) {
        // per-channel sample std of the source
        double mean = 0, var = 0;
        for (std::size_t t = 0; t < 64; ++t) mean += seq.channels(ch, t);
        mean /= 64.0;
        for (std::size_t t = 0; t < 64; ++t) {
            const double d = seq.channels(ch, t) - mean;
            var += d * d;
        }
        const double sigma = 0.05 * std::sqrt(var / 63.0);
        for (const auto& v : out)
            for (std::size_t t = 0; t < 64; ++t)
                CHECK(std::fabs(v.channels(ch, t) - seq.channels(ch, t)) <= 5.0 * sigma);
    }
}

TEST_CASE("inertial CSV round-trip and channel-count validation") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "m2_imaging_test";
    fs::create_directories(dir);
    std::mt19937_64 g(47);
    const img::InertialSequence seq = random_sequence(55, g);
    img::save_inertial_csv(dir / "ok.csv", seq);
    const img::InertialSequence back = img::load_inertial_csv(dir / "ok.csv", 50.0);
    REQUIRE(back.channels.cols() == 55);
    for (std::size_t i = 0; i < seq.channels.size(); ++i)
        CHECK(back.channels.data()[i] == seq.channels.data()[i]);

    {
        std::ofstream bad(dir / "five.csv");
        bad << "a,b,c,d,e\n"; // header is tolerated...
        for (int t = 0; t < 60; ++t) bad << "1,2,3,4,5\n"; // ...five channels are not
    }
    try {
        img::load_inertial_csv(dir / "five.csv", 50.0);
        FAIL("expected input_error");
    } catch (const m2::input_error& e) {
        CHECK(std::string(e.what()).find("five.csv") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("PGM 16-bit round-trip preserves integer depth values") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "m2_pgm_test";
    fs::create_directories(dir);
    Matrix depth(5, 6);
    std::mt19937_64 g(51);
    for (std::size_t i = 0; i < depth.size(); ++i)
        depth.data()[i] = std::floor(m2::rng::uniform(g, 0, 5000));
    img::save_pgm16(dir / "d.pgm", depth);
    const Matrix back = img::load_pgm(dir / "d.pgm");
    REQUIRE(back.rows() == 5);
    REQUIRE(back.cols() == 6);
    for (std::size_t i = 0; i < depth.size(); ++i) CHECK(back.data()[i] == depth.data()[i]);

    img::DepthSequence ds;
    ds.frames.push_back(depth);
    CHECK_THROWS_AS(img::load_depth_dir(dir / "nope"), m2::input_error);
    fs::remove_all(dir);
}

TEST_CASE("rescale01 maps constants to zero and spans [0,1] otherwise") {
    const Matrix z = img::rescale01(Matrix(3, 3, 5.5));
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(z.data()[i] == 0.0);
    const Matrix r = img::rescale01(Matrix{{-2, 0}, {2, 1}});
    CHECK(r(0, 0) == 0.0);
    CHECK(r(1, 0) == 1.0);
    CHECK(r(0, 1) == 0.5);
}
