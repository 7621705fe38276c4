#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "m2/features.hpp"
#include "m2/matrix.hpp"

namespace m2::cnn {

enum class LayerKind { conv2d, conv1d, maxpool, fully_connected, relu, softmax };

const char* layer_kind_name(LayerKind k);

struct Shape3 {
    std::size_t c = 1, h = 1, w = 1;
    std::size_t count() const { return c * h * w; }
    bool operator==(const Shape3&) const = default;
};

struct LayerSpec {
    LayerKind kind;
    std::string name; // unique within a model
    // conv2d/conv1d: out_c kernels of kh x kw, valid padding, stride 1.
    std::size_t out_c = 0, kh = 0, kw = 0;
    // maxpool: window = stride (non-overlapping).
    std::size_t pool_h = 0, pool_w = 0;
    // fully_connected
    std::size_t fc_out = 0;
    // filled in by the builders from the shape chain
    Shape3 in_shape, out_shape;
};

struct LayerParams {
    std::vector<double> w; // conv: [out_c][in_c][kh][kw]; fc: [out][in]
    std::vector<double> b; // per output channel / unit
};

// Channel-major (c, h, w) sample. 1-D signals are carried as (c, 1, length).
struct Tensor {
    Shape3 shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(Shape3 s) : shape(s), data(s.count(), 0.0) {}
    static Tensor from_matrix(const Matrix& m);
    static Tensor from_planes(const std::vector<Matrix>& planes);
};

struct CnnModel {
    std::vector<LayerSpec> layers;
    std::vector<LayerParams> params; // parallel to layers; empty vectors for layers without weights
    Shape3 input_shape;
    std::size_t classes = 0;

    int layer_index(const std::string& name) const; // -1 if absent
    std::size_t parameter_count() const;
};

struct TrainConfig {
    double momentum = 0.9;
    double initial_lr = 0.001;
    double lr_drop_factor = 0.5;
    std::size_t lr_drop_period = 10; // epochs
    double l2 = 0.004;
    std::size_t max_epochs = 100;
    std::size_t minibatch = 64;
    std::uint64_t seed = 0;
};

// Depth-branch schedule (lr 0.005, 50 epochs, minibatch 128) and the signal
// CNN schedule (lr 0.001, 100 epochs, minibatch 64).
TrainConfig depth_branch_defaults();
TrainConfig signal_branch_defaults();

// initial_lr * drop_factor^floor(epoch / drop_period)
double learning_rate_at(const TrainConfig& cfg, std::size_t epoch);

struct LabeledSet {
    std::vector<Tensor> images;
    std::vector<int> labels;
};

struct EpochStats {
    std::size_t epoch;
    double lr;
    double loss;
    double accuracy;
};
using TrainLog = std::vector<EpochStats>;

// conv(50@5x5) -> relu -> pool2 -> conv(100@5x5) -> relu -> pool2 ->
// fc(hidden_fc, "fc1") -> relu -> fc(classes) -> softmax. Built with zero
// weights; train() draws the He-uniform init from its seed.
CnnModel build_signal_cnn(std::size_t input_h = 24, std::size_t input_w = 52,
                          std::size_t hidden_fc = 500, std::size_t classes = 27,
                          std::size_t in_channels = 1);

// conv1d(50@5) -> pool2 -> conv1d(100@5) -> pool2 -> fc(classes) -> softmax.
CnnModel build_1d_cnn(std::size_t timesteps = 52, std::size_t channels = 6,
                      std::size_t classes = 27);

// fc("fc1") -> softmax over a flat input; the smallest trainable model.
CnnModel build_linear_classifier(std::size_t inputs, std::size_t classes);

// He-uniform weights, zero biases, keyed to the seed.
void init_weights(CnnModel& model, std::uint64_t seed);

// One momentum update: v <- momentum*v - lr*(g/batch + l2*w); w += v.
// Biases carry no L2 term.
void sgd_momentum_step(std::vector<LayerParams>& params,
                       const std::vector<LayerParams>& grads,
                       std::vector<LayerParams>& velocity, double lr, double momentum,
                       double l2, double batch_size);

// SGD with classical momentum (v <- m*v - lr*grad, w <- w + v) on
// cross-entropy + (l2/2)*||W||^2; stepped lr schedule; bitwise deterministic
// given cfg.seed. Throws numeric_error naming the epoch if the loss leaves
// the finite range.
void train(CnnModel& model, const LabeledSet& data, const TrainConfig& cfg,
           TrainLog* log = nullptr);

// Forward the batch and collect the named layer's output, one column per
// sample.
FeatureMatrix extract_features(const CnnModel& model, const std::string& layer,
                               const std::vector<Tensor>& batch);

// Per-sample forward pass to the softmax output.
std::vector<double> predict_probabilities(const CnnModel& model, const Tensor& image);

// Max relative error between analytic and central-difference gradients over a
// seeded subsample of >= 200 weights per parametric layer. analytic_scale is
// test instrumentation (scales the analytic side before comparison).
double gradient_check(const CnnModel& model, const Tensor& image, int label, double step,
                      double analytic_scale = 1.0);

// "M2FN" container: layer table + raw weight tensors in declaration order.
void save_model(const std::filesystem::path& path, const CnnModel& model);
CnnModel load_model(const std::filesystem::path& path);

// epoch, lr, train_loss, train_accuracy
void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log);

} // namespace m2::cnn
