#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "m2/error.hpp"
#include "m2/imaging.hpp"

namespace m2::imaging {

namespace {

bool parse_row(const std::string& line, std::vector<double>& out) {
    out.clear();
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // also tolerate space/tab separated columns inside a cell-less line
        std::stringstream cs(cell);
        std::string tok;
        while (cs >> tok) {
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0') return false;
            out.push_back(v);
        }
    }
    return !out.empty();
}

} // namespace

InertialSequence load_inertial_csv(const std::filesystem::path& path, double rate_hz) {
    std::ifstream is(path);
    if (!is) throw input_error("cannot open inertial CSV " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        if (!parse_row(line, row)) {
            if (rows.empty()) continue; // optional header
            throw input_error(path.string() + ":" + std::to_string(lineno) +
                              ": unparseable CSV row");
        }
        if (row.size() != 6)
            throw input_error(path.string() + ":" + std::to_string(lineno) + ": expected 6 channels, got " +
                              std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.size() < kSignalCols)
        throw input_error(path.string() + ": needs at least " + std::to_string(kSignalCols) +
                          " samples, got " + std::to_string(rows.size()));
    InertialSequence seq;
    seq.rate_hz = rate_hz;
    seq.channels = Matrix(6, rows.size());
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t ch = 0; ch < 6; ++ch) {
            if (!std::isfinite(rows[t][ch]))
                throw input_error(path.string() + ": non-finite sample at row " + std::to_string(t));
            seq.channels(ch, t) = rows[t][ch];
        }
    return seq;
}

void save_inertial_csv(const std::filesystem::path& path, const InertialSequence& seq) {
    std::ofstream os(path);
    if (!os) throw input_error("cannot write inertial CSV " + path.string());
    char buf[32];
    for (std::size_t t = 0; t < seq.channels.cols(); ++t) {
        for (std::size_t ch = 0; ch < 6; ++ch) {
            std::snprintf(buf, sizeof buf, "%.17g", seq.channels(ch, t));
            os << buf << (ch + 1 < 6 ? "," : "\n");
        }
    }
    if (!os) throw input_error("write failed for " + path.string());
}

namespace {

int pgm_token(std::istream& is) {
    // skips whitespace and '#' comments per the PGM grammar
    int c = is.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = is.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = is.get();
    }
    if (c == EOF) throw input_error("truncated PGM header");
    int value = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = is.get();
    }
    if (!any) throw input_error("malformed PGM header");
    return value;
}

} // namespace

Matrix load_pgm(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw input_error("cannot open PGM " + path.string());
    char m0 = 0, m1 = 0;
    is.get(m0);
    is.get(m1);
    if (m0 != 'P' || m1 != '5') throw input_error(path.string() + ": not a binary PGM (P5)");
    const int w = pgm_token(is);
    const int h = pgm_token(is);
    const int maxval = pgm_token(is);
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
        throw input_error(path.string() + ": bad PGM dimensions/maxval");
    Matrix img(static_cast<std::size_t>(h), static_cast<std::size_t>(w));
    const std::size_t count = img.size();
    if (maxval < 256) {
        std::vector<std::uint8_t> buf(count);
        is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count));
        if (!is) throw input_error(path.string() + ": truncated PGM data");
        for (std::size_t i = 0; i < count; ++i) img.data()[i] = buf[i];
    } else {
        std::vector<std::uint8_t> buf(count * 2);
        is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count * 2));
        if (!is) throw input_error(path.string() + ": truncated PGM data");
        for (std::size_t i = 0; i < count; ++i)
            img.data()[i] = static_cast<double>((buf[2 * i] << 8) | buf[2 * i + 1]);
    }
    return img;
}

void save_pgm16(const std::filesystem::path& path, const Matrix& depth_mm) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw input_error("cannot write PGM " + path.string());
    os << "P5\n" << depth_mm.cols() << " " << depth_mm.rows() << "\n65535\n";
    std::vector<std::uint8_t> buf(depth_mm.size() * 2);
    for (std::size_t i = 0; i < depth_mm.size(); ++i) {
        double v = std::round(depth_mm.data()[i]);
        v = std::clamp(v, 0.0, 65535.0);
        const auto u = static_cast<std::uint16_t>(v);
        buf[2 * i] = static_cast<std::uint8_t>(u >> 8);
        buf[2 * i + 1] = static_cast<std::uint8_t>(u & 0xFF);
    }
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!os) throw input_error("write failed for " + path.string());
}

void save_pgm8(const std::filesystem::path& path, const Matrix& unit_image) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw input_error("cannot write PGM " + path.string());
    os << "P5\n" << unit_image.cols() << " " << unit_image.rows() << "\n255\n";
    std::vector<std::uint8_t> buf(unit_image.size());
    for (std::size_t i = 0; i < unit_image.size(); ++i) {
        const double v = std::clamp(std::round(unit_image.data()[i] * 255.0), 0.0, 255.0);
        buf[i] = static_cast<std::uint8_t>(v);
    }
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!os) throw input_error("write failed for " + path.string());
}

DepthSequence load_depth_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw input_error("depth directory missing: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.size() < 2)
        throw input_error("depth directory " + dir.string() + " needs at least 2 PGM frames");
    DepthSequence seq;
    seq.frames.reserve(files.size());
    for (const auto& f : files) {
        seq.frames.push_back(load_pgm(f));
        if (!seq.frames.back().same_shape(seq.frames.front()))
            throw input_error("depth frame size mismatch at " + f.string());
    }
    return seq;
}

} // namespace m2::imaging
