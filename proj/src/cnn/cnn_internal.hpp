#pragma once

#include <cstdint>
#include <vector>

#include "m2/cnn.hpp"

namespace m2::cnn::detail {

struct LayerCache {
    std::vector<double> out;           // output activation
    std::vector<double> col;           // im2col buffer (conv layers only)
    std::vector<std::uint32_t> argmax; // input flat indices (maxpool only)
};

// Scratch reused across samples; sized on first use for a given model.
struct Workspace {
    std::vector<LayerCache> layers;
    std::vector<double> dcur, dnext, dcol;
};

// Forward through layers [0, upto]. Input is one sample (input_shape.count()
// doubles). Fills ws.layers[i].out for i <= upto.
void forward(const CnnModel& m, const double* input, Workspace& ws, std::size_t upto);

// Softmax + cross-entropy backward over a full forward pass already in ws.
// Accumulates parameter gradients (+=) into grads. Returns the sample loss.
double backward(const CnnModel& m, const double* input, int label, Workspace& ws,
                std::vector<LayerParams>& grads);

double sample_loss(const CnnModel& m, const Tensor& image, int label, Workspace& ws);

// Shape-chain validation shared by builders and the model loader.
void validate_model(const CnnModel& m);

} // namespace m2::cnn::detail
