#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include "m2/cnn.hpp"
#include "m2/error.hpp"
#include "m2/kernels.hpp"
#include "m2/rng.hpp"
#include "cnn_internal.hpp"

namespace m2::cnn {

void init_weights(CnnModel& model, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        LayerParams& p = model.params[i];
        if (p.w.empty()) continue;
        const LayerSpec& s = model.layers[i];
        const std::size_t fan_in = s.kind == LayerKind::fully_connected
                                       ? s.in_shape.count()
                                       : s.in_shape.c * s.kh * s.kw;
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (double& w : p.w) w = rng::uniform(g, -limit, limit);
        std::fill(p.b.begin(), p.b.end(), 0.0);
    }
}

namespace {

void validate_train_inputs(const CnnModel& model, const LabeledSet& data,
                           const TrainConfig& cfg) {
    if (data.images.empty()) throw input_error("train: empty data set");
    if (data.images.size() != data.labels.size())
        throw input_error("train: image/label count mismatch");
    if (cfg.minibatch < 1) throw input_error("train: minibatch must be >= 1");
    if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
        throw input_error("train: momentum must be in [0, 1)");
    if (cfg.initial_lr <= 0.0) throw input_error("train: initial_lr must be > 0");
    if (!(cfg.lr_drop_factor > 0.0 && cfg.lr_drop_factor <= 1.0))
        throw input_error("train: lr_drop_factor must be in (0, 1]");
    if (cfg.lr_drop_period < 1) throw input_error("train: lr_drop_period must be >= 1");
    if (model.layers.back().kind != LayerKind::softmax)
        throw input_error("train: model must end in softmax");
    for (std::size_t i = 0; i < data.images.size(); ++i) {
        if (!(data.images[i].shape == model.input_shape))
            throw input_error("train: sample " + std::to_string(i) + " shape mismatch");
        if (data.labels[i] < 0 || static_cast<std::size_t>(data.labels[i]) >= model.classes)
            throw input_error("train: label out of range at sample " + std::to_string(i));
    }
}

std::size_t argmax(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

} // namespace

void sgd_momentum_step(std::vector<LayerParams>& params, const std::vector<LayerParams>& grads,
                       std::vector<LayerParams>& velocity, double lr, double momentum,
                       double l2, double batch_size) {
    const double inv_b = 1.0 / batch_size;
    for (std::size_t i = 0; i < params.size(); ++i) {
        LayerParams& p = params[i];
        if (p.w.empty()) continue;
        LayerParams& v = velocity[i];
        const LayerParams& g = grads[i];
        for (std::size_t j = 0; j < p.w.size(); ++j) {
            const double grad = g.w[j] * inv_b + l2 * p.w[j];
            v.w[j] = momentum * v.w[j] - lr * grad;
            p.w[j] += v.w[j];
        }
        for (std::size_t j = 0; j < p.b.size(); ++j) {
            const double grad = g.b[j] * inv_b;
            v.b[j] = momentum * v.b[j] - lr * grad;
            p.b[j] += v.b[j];
        }
    }
}

void train(CnnModel& model, const LabeledSet& data, const TrainConfig& cfg, TrainLog* log) {
    validate_train_inputs(model, data, cfg);
    init_weights(model, cfg.seed);

    std::vector<LayerParams> grads(model.params.size());
    std::vector<LayerParams> velocity(model.params.size());
    for (std::size_t i = 0; i < model.params.size(); ++i) {
        grads[i].w.assign(model.params[i].w.size(), 0.0);
        grads[i].b.assign(model.params[i].b.size(), 0.0);
        velocity[i].w.assign(model.params[i].w.size(), 0.0);
        velocity[i].b.assign(model.params[i].b.size(), 0.0);
    }

    const std::size_t n = data.images.size();
    std::mt19937_64 shuffle_rng(rng::mix(cfg.seed, 0x7368756666ull));
    detail::Workspace ws;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const double lr = learning_rate_at(cfg, epoch);
        rng::shuffle(order, shuffle_rng);
        double epoch_loss = 0.0;
        std::size_t correct = 0;

        for (std::size_t start = 0; start < n; start += cfg.minibatch) {
            const std::size_t stop = std::min(n, start + cfg.minibatch);
            const double batch_n = static_cast<double>(stop - start);
            for (auto& g : grads) {
                std::fill(g.w.begin(), g.w.end(), 0.0);
                std::fill(g.b.begin(), g.b.end(), 0.0);
            }
            double batch_loss = 0.0;
            for (std::size_t s = start; s < stop; ++s) {
                const std::size_t idx = order[s];
                const Tensor& img = data.images[idx];
                const int label = data.labels[idx];
                detail::forward(model, img.data.data(), ws, model.layers.size() - 1);
                if (argmax(ws.layers.back().out) == static_cast<std::size_t>(label)) ++correct;
                batch_loss += detail::backward(model, img.data.data(), label, ws, grads);
            }
            if (!std::isfinite(batch_loss))
                throw numeric_error("train: non-finite loss at epoch " + std::to_string(epoch));
            epoch_loss += batch_loss;

            sgd_momentum_step(model.params, grads, velocity, lr, cfg.momentum, cfg.l2, batch_n);
        }

        if (log)
            log->push_back(EpochStats{epoch, lr, epoch_loss / static_cast<double>(n),
                                      static_cast<double>(correct) / static_cast<double>(n)});
    }
}

double gradient_check(const CnnModel& model_in, const Tensor& image, int label, double step,
                      double analytic_scale) {
    if (!(step > 0.0 && step <= 1e-2))
        throw input_error("gradient_check: step must be in (0, 1e-2]");
    if (label < 0 || static_cast<std::size_t>(label) >= model_in.classes)
        throw input_error("gradient_check: label out of range");

    CnnModel model = model_in;
    detail::Workspace ws;
    std::vector<LayerParams> grads(model.params.size());
    for (std::size_t i = 0; i < model.params.size(); ++i) {
        grads[i].w.assign(model.params[i].w.size(), 0.0);
        grads[i].b.assign(model.params[i].b.size(), 0.0);
    }
    detail::forward(model, image.data.data(), ws, model.layers.size() - 1);
    detail::backward(model, image.data.data(), label, ws, grads);

    std::mt19937_64 g(0x6D326763ull); // fixed subsample stream
    double max_err = 0.0;
    constexpr std::size_t kPerLayer = 200;
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const std::size_t count = model.params[li].w.size() + model.params[li].b.size();
        if (count == 0) continue;
        std::set<std::size_t> picked;
        const std::size_t want = std::min(count, kPerLayer);
        while (picked.size() < want) picked.insert(static_cast<std::size_t>(g() % count));
        for (std::size_t flat : picked) {
            LayerParams& p = model.params[li];
            double* slot = flat < p.w.size() ? &p.w[flat] : &p.b[flat - p.w.size()];
            const double ga = analytic_scale * (flat < p.w.size() ? grads[li].w[flat]
                                                                  : grads[li].b[flat - p.w.size()]);
            const double saved = *slot;
            *slot = saved + step;
            const double lp = detail::sample_loss(model, image, label, ws);
            *slot = saved - step;
            const double lm = detail::sample_loss(model, image, label, ws);
            *slot = saved;
            const double gn = (lp - lm) / (2.0 * step);
            const double err = std::fabs(ga - gn) / std::max({std::fabs(ga), std::fabs(gn), 1e-8});
            max_err = std::max(max_err, err);
        }
    }
    return max_err;
}

} // namespace m2::cnn
