#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "m2/error.hpp"
#include "m2/pipeline.hpp"
#include "m2/rng.hpp"

namespace m2::pipeline {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

} // namespace

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw input_error("cannot open manifest " + path.string());
    DatasetManifest m;
    m.base_dir = path.parent_path();
    std::string line;
    bool in_samples = false;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t == "[samples]") {
            in_samples = true;
            continue;
        }
        if (!in_samples) {
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw input_error(path.string() + ":" + std::to_string(lineno) +
                                  ": expected key = value before [samples]");
            const std::string key = trim(t.substr(0, eq));
            const std::string val = trim(t.substr(eq + 1));
            if (key == "rate_hz") {
                m.rate_hz = std::strtod(val.c_str(), nullptr);
                if (m.rate_hz <= 0) throw input_error(path.string() + ": bad rate_hz");
            } else if (key == "classes") {
                m.class_names = split_list(val, ',');
            } else {
                throw input_error(path.string() + ": unknown manifest key: " + key);
            }
        } else {
            std::stringstream ss(t);
            ManifestSample s;
            if (!(ss >> s.inertial_csv >> s.depth_dir >> s.subject >> s.label))
                throw input_error(path.string() + ":" + std::to_string(lineno) +
                                  ": malformed sample row");
            m.samples.push_back(std::move(s));
        }
    }
    if (m.samples.empty()) throw input_error(path.string() + ": manifest has no samples");
    if (m.class_names.empty()) throw input_error(path.string() + ": manifest missing classes");
    return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
    std::ofstream os(path);
    if (!os) throw input_error("cannot write manifest " + path.string());
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", m.rate_hz);
    os << "rate_hz = " << buf << "\n";
    os << "classes = ";
    for (std::size_t i = 0; i < m.class_names.size(); ++i)
        os << m.class_names[i] << (i + 1 < m.class_names.size() ? "," : "");
    os << "\n[samples]\n";
    for (const ManifestSample& s : m.samples)
        os << s.inertial_csv << " " << s.depth_dir << " " << s.subject << " " << s.label << "\n";
    if (!os) throw input_error("write failed for " + path.string());
}

LoadedDataset load_dataset(const std::filesystem::path& manifest_path) {
    const DatasetManifest m = read_manifest(manifest_path);
    LoadedDataset ds;
    ds.classes = m.class_names.size();
    ds.class_names = m.class_names;
    ds.rate_hz = m.rate_hz;
    std::vector<std::size_t> per_class(ds.classes, 0);
    for (const ManifestSample& s : m.samples) {
        if (s.label < 0 || static_cast<std::size_t>(s.label) >= ds.classes)
            throw input_error("label " + std::to_string(s.label) + " outside [0, " +
                              std::to_string(ds.classes) + ") for " + s.inertial_csv);
        LoadedSample ls;
        ls.subject = s.subject;
        ls.label = s.label;
        ls.inertial = imaging::load_inertial_csv(m.base_dir / s.inertial_csv, m.rate_hz);
        ls.depth = imaging::load_depth_dir(m.base_dir / s.depth_dir);
        ++per_class[static_cast<std::size_t>(s.label)];
        ds.samples.push_back(std::move(ls));
    }
    for (std::size_t k = 0; k < ds.classes; ++k)
        if (per_class[k] == 0)
            throw input_error("label gap: class " + std::to_string(k) + " (" +
                              ds.class_names[k] + ") has no samples");
    return ds;
}

Split split(std::size_t sample_count, const SplitSpec& spec, std::size_t repeat_index) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw input_error("split: train_fraction must be in (0, 1)");
    if (spec.repeats < 1) throw input_error("split: repeats must be >= 1");
    if (repeat_index >= spec.repeats) throw input_error("split: repeat index out of range");
    std::mt19937_64 g(rng::mix(spec.seed, repeat_index));
    std::vector<std::size_t> order = rng::permutation(sample_count, g);
    const auto n_train = static_cast<std::size_t>(
        std::floor(spec.train_fraction * static_cast<double>(sample_count) + 1e-9));
    if (n_train == 0 || n_train >= sample_count)
        throw input_error("split: " + std::to_string(sample_count) +
                          " samples leave an empty train or test side");
    Split s;
    s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return s;
}

const char* framework_name(FrameworkKind k) {
    switch (k) {
        case FrameworkKind::multistage: return "multistage";
        case FrameworkKind::hybrid: return "hybrid";
        case FrameworkKind::efficient: return "efficient";
    }
    return "?";
}

FrameworkKind framework_from_name(const std::string& name) {
    if (name == "multistage") return FrameworkKind::multistage;
    if (name == "hybrid") return FrameworkKind::hybrid;
    if (name == "efficient") return FrameworkKind::efficient;
    throw input_error("unknown framework: " + name +
                      " (expected multistage, hybrid or efficient)");
}

} // namespace m2::pipeline
