#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "m2/cnn.hpp"
#include "m2/imaging.hpp"

namespace m2::pipeline {

struct ManifestSample {
    std::string inertial_csv;
    std::string depth_dir;
    int subject = 0;
    int label = 0;
};

// Plain-text manifest: "key = value" header lines, then a [samples] table of
// whitespace-separated columns: inertial_csv depth_dir subject label.
struct DatasetManifest {
    std::vector<ManifestSample> samples;
    std::vector<std::string> class_names;
    double rate_hz = 50.0;
    std::filesystem::path base_dir; // resolves relative sample paths
};

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);

struct LoadedSample {
    imaging::InertialSequence inertial;
    imaging::DepthSequence depth;
    int subject = 0;
    int label = 0;
};

struct LoadedDataset {
    std::vector<LoadedSample> samples;
    std::size_t classes = 0;
    std::vector<std::string> class_names;
    double rate_hz = 50.0;
};

LoadedDataset load_dataset(const std::filesystem::path& manifest_path);

struct SplitSpec {
    double train_fraction = 0.8;
    std::size_t repeats = 20;
    std::uint64_t seed = 0;
};

struct Split {
    std::vector<std::size_t> train, test;
};

// Seeded shuffle keyed by (seed, repeat_index); first 80% train, rest test.
Split split(std::size_t sample_count, const SplitSpec& spec, std::size_t repeat_index);

enum class FrameworkKind { multistage, hybrid, efficient };

const char* framework_name(FrameworkKind k);
FrameworkKind framework_from_name(const std::string& name);

struct PipelineConfig {
    SplitSpec split;
    cnn::TrainConfig signal_train = cnn::signal_branch_defaults();
    cnn::TrainConfig depth_train = cnn::depth_branch_defaults();
    std::size_t hidden_fc_inertial = 500;
    std::size_t hidden_fc_depth = 500;
    std::size_t sfi_segments = 5;
    double sfi_motion_threshold = 10.0; // millimeters
    std::size_t sfi_size = 64;          // SFIs resized square before the depth CNN
    double cca_lambda = -1.0;           // < 0 picks the default ridge
    std::size_t cca_dim = 0;            // 0 keeps min(p, q) capped at rank
    double svm_c = 1.0;
    std::size_t svm_epochs = 1000;
    bool train_on_all_segments = true; // depth CNNs also see non-final SFI segments
    bool train_on_all_windows = true;  // signal CNNs also see non-first windows
};

struct RepeatResult {
    double accuracy = 0.0;
    std::map<std::string, double> modality_accuracy; // "depth", "inertial"
    std::vector<std::vector<std::size_t>> confusion; // classes x classes, true x predicted
    double inference_us_per_sample = 0.0;
    std::size_t test_count = 0;
};

struct RunReport {
    std::string framework;
    std::size_t classes = 0;
    std::uint64_t seed = 0;
    std::vector<double> per_repeat_accuracy;
    double mean_accuracy = 0.0;
    std::map<std::string, double> modality_mean_accuracy;
    std::vector<std::vector<std::size_t>> confusion; // summed over repeats
    std::size_t extractor_calls_per_sample = 0;
    double inference_us_per_sample = 0.0; // mean over repeats
};

// Aggregates per-repeat results: averages accuracies and timing, sums
// confusion counts.
RunReport evaluate(FrameworkKind kind, std::size_t classes, std::uint64_t seed,
                   const std::vector<RepeatResult>& repeats);

// The three framework runners. Four extractors feed the first two; the
// efficient framework runs one composite-image CNN and one SFI CNN.
RunReport run_multistage(const LoadedDataset& data, const PipelineConfig& cfg);
RunReport run_hybrid(const LoadedDataset& data, const PipelineConfig& cfg);
RunReport run_efficient(const LoadedDataset& data, const PipelineConfig& cfg);
RunReport run_framework(FrameworkKind kind, const LoadedDataset& data, const PipelineConfig& cfg);

// Two-bit synthetic generator: the depth blob position encodes one label bit,
// the inertial oscillation frequency the other, so either modality alone tops
// out near 50% and fusion is required for high accuracy.
struct SynthConfig {
    std::size_t classes = 4;
    std::size_t samples_per_class = 50;
    double noise = 0.0;
    std::uint64_t seed = 0;
};

LoadedDataset synth_dataset(const SynthConfig& cfg);

// Materializes a dataset as manifest + per-sample CSV / 16-bit PGM files.
void write_dataset(const LoadedDataset& ds, const std::filesystem::path& dir);

void write_report_json(const std::filesystem::path& path, const RunReport& r);
RunReport read_report_json(const std::filesystem::path& path);
void write_confusion_csv(const std::filesystem::path& path, const RunReport& r);
std::string report_summary(const RunReport& r);

} // namespace m2::pipeline
