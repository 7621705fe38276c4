#include <fstream>
#include <sstream>

#include <json.hpp>

#include "m2/error.hpp"
#include "m2/pipeline.hpp"

namespace m2::pipeline {

using nlohmann::json;

void write_report_json(const std::filesystem::path& path, const RunReport& r) {
    json j;
    j["framework"] = r.framework;
    j["classes"] = r.classes;
    j["seed"] = r.seed;
    j["repeats"] = r.per_repeat_accuracy.size();
    j["extractor_calls_per_sample"] = r.extractor_calls_per_sample;
    j["mean_accuracy"] = r.mean_accuracy;
    j["per_repeat_accuracy"] = r.per_repeat_accuracy;
    j["modality_mean_accuracy"] = r.modality_mean_accuracy;
    j["confusion"] = r.confusion;
    j["timing"] = {{"inference_us_per_sample", r.inference_us_per_sample}};
    std::ofstream os(path);
    if (!os) throw input_error("cannot write report " + path.string());
    os << j.dump(2) << "\n";
    if (!os) throw input_error("write failed for " + path.string());
}

RunReport read_report_json(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw input_error("cannot open report " + path.string());
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw input_error("malformed report " + path.string() + ": " + e.what());
    }
    RunReport r;
    try {
        r.framework = j.at("framework").get<std::string>();
        r.classes = j.at("classes").get<std::size_t>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.extractor_calls_per_sample = j.at("extractor_calls_per_sample").get<std::size_t>();
        r.mean_accuracy = j.at("mean_accuracy").get<double>();
        r.per_repeat_accuracy = j.at("per_repeat_accuracy").get<std::vector<double>>();
        r.modality_mean_accuracy =
            j.at("modality_mean_accuracy").get<std::map<std::string, double>>();
        r.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
        r.inference_us_per_sample =
            j.at("timing").at("inference_us_per_sample").get<double>();
    } catch (const json::exception& e) {
        throw input_error("report " + path.string() + " missing fields: " + e.what());
    }
    return r;
}

void write_confusion_csv(const std::filesystem::path& path, const RunReport& r) {
    std::ofstream os(path);
    if (!os) throw input_error("cannot write confusion CSV " + path.string());
    // rows: true label; columns: predicted label
    for (const auto& row : r.confusion) {
        for (std::size_t j = 0; j < row.size(); ++j)
            os << row[j] << (j + 1 < row.size() ? "," : "\n");
    }
    if (!os) throw input_error("write failed for " + path.string());
}

std::string report_summary(const RunReport& r) {
    std::ostringstream os;
    os << "framework:            " << r.framework << "\n";
    os << "classes:              " << r.classes << "\n";
    os << "repeats:              " << r.per_repeat_accuracy.size() << "\n";
    os << "seed:                 " << r.seed << "\n";
    os << "extractor calls:      " << r.extractor_calls_per_sample << " per sample\n";
    os << "mean accuracy:        " << r.mean_accuracy * 100.0 << "%\n";
    for (const auto& [name, acc] : r.modality_mean_accuracy)
        os << "  " << name << " alone:      " << acc * 100.0 << "%\n";
    os << "inference time:       " << r.inference_us_per_sample << " us/sample\n";
    os << "confusion (true rows x predicted cols):\n";
    for (const auto& row : r.confusion) {
        os << "  ";
        for (std::size_t j = 0; j < row.size(); ++j) os << row[j] << (j + 1 < row.size() ? " " : "\n");
    }
    return os.str();
}

} // namespace m2::pipeline
