#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "m2/cnn.hpp"
#include "m2/error.hpp"
#include "cnn_internal.hpp"

namespace m2::cnn {

namespace {

constexpr char kMagic[4] = {'M', '2', 'F', 'N'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

std::uint64_t get_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

void put_doubles(std::ostream& os, const std::vector<double>& v) {
    put_u64(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& is) {
    const std::uint64_t n = get_u64(is);
    if (n > (1ull << 32)) throw input_error("model file: implausible tensor size");
    std::vector<double> v(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    return v;
}

} // namespace

void save_model(const std::filesystem::path& path, const CnnModel& model) {
    detail::validate_model(model);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw input_error("save_model: cannot open " + path.string());
    os.write(kMagic, 4);
    put_u32(os, kVersion);
    put_u32(os, static_cast<std::uint32_t>(model.classes));
    put_u32(os, static_cast<std::uint32_t>(model.input_shape.c));
    put_u32(os, static_cast<std::uint32_t>(model.input_shape.h));
    put_u32(os, static_cast<std::uint32_t>(model.input_shape.w));
    put_u32(os, static_cast<std::uint32_t>(model.layers.size()));
    for (const LayerSpec& s : model.layers) {
        put_u32(os, static_cast<std::uint32_t>(s.kind));
        put_u32(os, static_cast<std::uint32_t>(s.name.size()));
        os.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
        const std::uint32_t fields[5] = {
            static_cast<std::uint32_t>(s.out_c), static_cast<std::uint32_t>(s.kh),
            static_cast<std::uint32_t>(s.kw), static_cast<std::uint32_t>(s.pool_h),
            static_cast<std::uint32_t>(s.pool_w)};
        os.write(reinterpret_cast<const char*>(fields), sizeof fields);
        put_u32(os, static_cast<std::uint32_t>(s.fc_out));
    }
    for (const LayerParams& p : model.params) {
        put_doubles(os, p.w);
        put_doubles(os, p.b);
    }
    if (!os) throw input_error("save_model: write failed for " + path.string());
}

CnnModel load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw input_error("load_model: cannot open " + path.string());
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw input_error("load_model: bad magic in " + path.string());
    if (get_u32(is) != kVersion) throw input_error("load_model: unsupported version");
    CnnModel m;
    m.classes = get_u32(is);
    m.input_shape.c = get_u32(is);
    m.input_shape.h = get_u32(is);
    m.input_shape.w = get_u32(is);
    const std::uint32_t layer_count = get_u32(is);
    if (!is || layer_count == 0 || layer_count > 1024)
        throw input_error("load_model: bad layer count");

    Shape3 cur = m.input_shape;
    for (std::uint32_t i = 0; i < layer_count; ++i) {
        LayerSpec s;
        const std::uint32_t kind = get_u32(is);
        if (kind > static_cast<std::uint32_t>(LayerKind::softmax))
            throw input_error("load_model: bad layer kind");
        s.kind = static_cast<LayerKind>(kind);
        const std::uint32_t name_len = get_u32(is);
        if (name_len > 256) throw input_error("load_model: bad layer name length");
        s.name.resize(name_len);
        is.read(s.name.data(), name_len);
        std::uint32_t fields[5] = {};
        is.read(reinterpret_cast<char*>(fields), sizeof fields);
        s.out_c = fields[0];
        s.kh = fields[1];
        s.kw = fields[2];
        s.pool_h = fields[3];
        s.pool_w = fields[4];
        s.fc_out = get_u32(is);
        if (!is) throw input_error("load_model: truncated layer table");
        s.in_shape = cur;
        switch (s.kind) {
            case LayerKind::conv2d:
            case LayerKind::conv1d:
                if (cur.h < s.kh || cur.w < s.kw) throw input_error("load_model: invalid conv shape");
                s.out_shape = {s.out_c, cur.h - s.kh + 1, cur.w - s.kw + 1};
                break;
            case LayerKind::maxpool:
                if (s.pool_h == 0 || s.pool_w == 0) throw input_error("load_model: invalid pool");
                s.out_shape = {cur.c, cur.h / s.pool_h, cur.w / s.pool_w};
                break;
            case LayerKind::fully_connected:
                s.out_shape = {s.fc_out, 1, 1};
                break;
            case LayerKind::relu:
            case LayerKind::softmax:
                s.out_shape = cur;
                break;
        }
        cur = s.out_shape;
        m.layers.push_back(std::move(s));
    }
    for (std::uint32_t i = 0; i < layer_count; ++i) {
        LayerParams p;
        p.w = get_doubles(is);
        p.b = get_doubles(is);
        if (!is) throw input_error("load_model: truncated weights in " + path.string());
        m.params.push_back(std::move(p));
    }
    detail::validate_model(m);
    for (const LayerParams& p : m.params)
        for (double v : p.w)
            if (!std::isfinite(v)) throw input_error("load_model: non-finite weight");
    return m;
}

void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log) {
    std::ofstream os(path);
    if (!os) throw input_error("cannot write training log " + path.string());
    os << "epoch,lr,train_loss,train_accuracy\n";
    char buf[128];
    for (const EpochStats& e : log) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", e.epoch, e.lr, e.loss,
                      e.accuracy);
        os << buf;
    }
    if (!os) throw input_error("write failed for " + path.string());
}

} // namespace m2::cnn
