#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <string>

#include "m2/cnn.hpp"
#include "m2/error.hpp"
#include "m2/kernels.hpp"
#include "cnn_internal.hpp"

namespace m2::cnn {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::conv1d: return "conv1d";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::fully_connected: return "fully_connected";
        case LayerKind::relu: return "relu";
        case LayerKind::softmax: return "softmax";
    }
    return "?";
}

Tensor Tensor::from_matrix(const Matrix& m) {
    Tensor t;
    t.shape = {1, m.rows(), m.cols()};
    t.data.assign(m.data(), m.data() + m.size());
    return t;
}

Tensor Tensor::from_planes(const std::vector<Matrix>& planes) {
    if (planes.empty()) throw input_error("Tensor::from_planes: no planes");
    Tensor t;
    t.shape = {planes.size(), planes[0].rows(), planes[0].cols()};
    t.data.reserve(t.shape.count());
    for (const auto& p : planes) {
        if (!p.same_shape(planes[0])) throw input_error("Tensor::from_planes: plane size mismatch");
        t.data.insert(t.data.end(), p.data(), p.data() + p.size());
    }
    return t;
}

int CnnModel::layer_index(const std::string& name) const {
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (layers[i].name == name) return static_cast<int>(i);
    return -1;
}

std::size_t CnnModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params) n += p.w.size() + p.b.size();
    return n;
}

TrainConfig depth_branch_defaults() {
    TrainConfig c;
    c.momentum = 0.9;
    c.initial_lr = 0.005;
    c.lr_drop_factor = 0.5;
    c.lr_drop_period = 10;
    c.l2 = 0.004;
    c.max_epochs = 50;
    c.minibatch = 128;
    return c;
}

TrainConfig signal_branch_defaults() {
    TrainConfig c;
    c.momentum = 0.9;
    c.initial_lr = 0.001;
    c.lr_drop_factor = 0.5;
    c.lr_drop_period = 10;
    c.l2 = 0.004;
    c.max_epochs = 100;
    c.minibatch = 64;
    return c;
}

double learning_rate_at(const TrainConfig& cfg, std::size_t epoch) {
    // integer-exponent product so halving schedules stay exact
    double lr = cfg.initial_lr;
    for (std::size_t k = epoch / cfg.lr_drop_period; k > 0; --k) lr *= cfg.lr_drop_factor;
    return lr;
}

namespace {

Shape3 out_shape_of(const LayerSpec& s) { return s.out_shape; }

LayerSpec conv_spec(LayerKind kind, std::string name, Shape3 in, std::size_t out_c,
                    std::size_t kh, std::size_t kw) {
    if (in.h < kh || in.w < kw)
        throw input_error("model build: input too small for a " + std::to_string(kh) + "x" +
                          std::to_string(kw) + " valid convolution at layer " + name);
    LayerSpec s;
    s.kind = kind;
    s.name = std::move(name);
    s.out_c = out_c;
    s.kh = kh;
    s.kw = kw;
    s.in_shape = in;
    s.out_shape = {out_c, in.h - kh + 1, in.w - kw + 1};
    return s;
}

LayerSpec pool_spec(std::string name, Shape3 in, std::size_t ph, std::size_t pw) {
    if (in.h / ph == 0 || in.w / pw == 0)
        throw input_error("model build: input too small for pooling at layer " + name);
    LayerSpec s;
    s.kind = LayerKind::maxpool;
    s.name = std::move(name);
    s.pool_h = ph;
    s.pool_w = pw;
    s.in_shape = in;
    s.out_shape = {in.c, in.h / ph, in.w / pw};
    return s;
}

LayerSpec fc_spec(std::string name, Shape3 in, std::size_t out) {
    LayerSpec s;
    s.kind = LayerKind::fully_connected;
    s.name = std::move(name);
    s.fc_out = out;
    s.in_shape = in;
    s.out_shape = {out, 1, 1};
    return s;
}

LayerSpec passthrough_spec(LayerKind kind, std::string name, Shape3 in) {
    LayerSpec s;
    s.kind = kind;
    s.name = std::move(name);
    s.in_shape = in;
    s.out_shape = in;
    return s;
}

void allocate_params(CnnModel& m) {
    m.params.assign(m.layers.size(), LayerParams{});
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        const LayerSpec& s = m.layers[i];
        if (s.kind == LayerKind::conv2d || s.kind == LayerKind::conv1d) {
            m.params[i].w.assign(s.out_c * s.in_shape.c * s.kh * s.kw, 0.0);
            m.params[i].b.assign(s.out_c, 0.0);
        } else if (s.kind == LayerKind::fully_connected) {
            m.params[i].w.assign(s.fc_out * s.in_shape.count(), 0.0);
            m.params[i].b.assign(s.fc_out, 0.0);
        }
    }
}

} // namespace

CnnModel build_signal_cnn(std::size_t input_h, std::size_t input_w, std::size_t hidden_fc,
                          std::size_t classes, std::size_t in_channels) {
    if (classes < 2) throw input_error("build_signal_cnn: need at least 2 classes");
    if (hidden_fc == 0) throw input_error("build_signal_cnn: hidden_fc must be >= 1");
    CnnModel m;
    m.input_shape = {in_channels, input_h, input_w};
    m.classes = classes;
    Shape3 cur = m.input_shape;
    m.layers.push_back(conv_spec(LayerKind::conv2d, "conv1", cur, 50, 5, 5));
    cur = out_shape_of(m.layers.back());
    m.layers.push_back(passthrough_spec(LayerKind::relu, "relu1", cur));
    m.layers.push_back(pool_spec("pool1", cur, 2, 2));
    cur = out_shape_of(m.layers.back());
    m.layers.push_back(conv_spec(LayerKind::conv2d, "conv2", cur, 100, 5, 5));
    cur = out_shape_of(m.layers.back());
    m.layers.push_back(passthrough_spec(LayerKind::relu, "relu2", cur));
    m.layers.push_back(pool_spec("pool2", cur, 2, 2));
    cur = out_shape_of(m.layers.back());
    m.layers.push_back(fc_spec("fc1", cur, hidden_fc));
    cur = out_shape_of(m.layers.back());
    m.layers.push_back(passthrough_spec(LayerKind::relu, "relu3", cur));
    m.layers.push_back(fc_spec("fc2", cur, classes));
    cur = out_shape_of(m.layers.back());
    m.layers.push_back(passthrough_spec(LayerKind::softmax, "softmax", cur));
    allocate_params(m);
    detail::validate_model(m);
    return m;
}

CnnModel build_linear_classifier(std::size_t inputs, std::size_t classes) {
    if (classes < 2) throw input_error("build_linear_classifier: need at least 2 classes");
    if (inputs == 0) throw input_error("build_linear_classifier: need at least 1 input");
    CnnModel m;
    m.input_shape = {1, 1, inputs};
    m.classes = classes;
    m.layers.push_back(fc_spec("fc1", m.input_shape, classes));
    m.layers.push_back(passthrough_spec(LayerKind::softmax, "softmax", m.layers.back().out_shape));
    allocate_params(m);
    detail::validate_model(m);
    return m;
}

CnnModel build_1d_cnn(std::size_t timesteps, std::size_t channels, std::size_t classes) {
    if (classes < 2) throw input_error("build_1d_cnn: need at least 2 classes");
    CnnModel m;
    m.input_shape = {channels, 1, timesteps};
    m.classes = classes;
    Shape3 cur = m.input_shape;
    m.layers.push_back(conv_spec(LayerKind::conv1d, "conv1", cur, 50, 1, 5));
    cur = out_shape_of(m.layers.back());
    m.layers.push_back(pool_spec("pool1", cur, 1, 2));
    cur = out_shape_of(m.layers.back());
    m.layers.push_back(conv_spec(LayerKind::conv1d, "conv2", cur, 100, 1, 5));
    cur = out_shape_of(m.layers.back());
    m.layers.push_back(pool_spec("pool2", cur, 1, 2));
    cur = out_shape_of(m.layers.back());
    m.layers.push_back(fc_spec("fc1", cur, classes));
    cur = out_shape_of(m.layers.back());
    m.layers.push_back(passthrough_spec(LayerKind::softmax, "softmax", cur));
    allocate_params(m);
    detail::validate_model(m);
    return m;
}

namespace detail {

void validate_model(const CnnModel& m) {
    if (m.layers.empty()) throw input_error("model has no layers");
    if (m.params.size() != m.layers.size()) throw input_error("model params/layers mismatch");
    std::set<std::string> names;
    Shape3 cur = m.input_shape;
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        const LayerSpec& s = m.layers[i];
        if (!names.insert(s.name).second)
            throw input_error("duplicate layer name: " + s.name);
        if (!(s.in_shape == cur))
            throw input_error("shape chain broken entering layer " + s.name);
        Shape3 expect;
        std::size_t wlen = 0, blen = 0;
        switch (s.kind) {
            case LayerKind::conv2d:
            case LayerKind::conv1d:
                if (cur.h < s.kh || cur.w < s.kw)
                    throw input_error("kernel exceeds input at layer " + s.name);
                expect = {s.out_c, cur.h - s.kh + 1, cur.w - s.kw + 1};
                wlen = s.out_c * cur.c * s.kh * s.kw;
                blen = s.out_c;
                break;
            case LayerKind::maxpool:
                if (s.pool_h == 0 || s.pool_w == 0 || cur.h / s.pool_h == 0 || cur.w / s.pool_w == 0)
                    throw input_error("bad pooling window at layer " + s.name);
                expect = {cur.c, cur.h / s.pool_h, cur.w / s.pool_w};
                break;
            case LayerKind::fully_connected:
                expect = {s.fc_out, 1, 1};
                wlen = s.fc_out * cur.count();
                blen = s.fc_out;
                break;
            case LayerKind::relu:
            case LayerKind::softmax:
                expect = cur;
                break;
        }
        if (!(s.out_shape == expect))
            throw input_error("declared output shape wrong at layer " + s.name);
        if (m.params[i].w.size() != wlen || m.params[i].b.size() != blen)
            throw input_error("weight tensor size wrong at layer " + s.name);
        cur = s.out_shape;
    }
    if (m.layers.back().kind == LayerKind::softmax && cur.count() != m.classes)
        throw input_error("softmax width does not match class count");
}

namespace {

void im2col(const double* in, const Shape3& is, std::size_t kh, std::size_t kw, double* col) {
    const std::size_t oh = is.h - kh + 1, ow = is.w - kw + 1;
    const std::size_t p = oh * ow;
    std::size_t krow = 0;
    for (std::size_t ci = 0; ci < is.c; ++ci) {
        const double* plane = in + ci * is.h * is.w;
        for (std::size_t ki = 0; ki < kh; ++ki) {
            for (std::size_t kj = 0; kj < kw; ++kj) {
                double* dst = col + krow * p;
                for (std::size_t oy = 0; oy < oh; ++oy)
                    std::memcpy(dst + oy * ow, plane + (oy + ki) * is.w + kj, ow * sizeof(double));
                ++krow;
            }
        }
    }
}

void col2im_add(const double* col, const Shape3& is, std::size_t kh, std::size_t kw, double* din) {
    const std::size_t oh = is.h - kh + 1, ow = is.w - kw + 1;
    const std::size_t p = oh * ow;
    std::size_t krow = 0;
    for (std::size_t ci = 0; ci < is.c; ++ci) {
        double* plane = din + ci * is.h * is.w;
        for (std::size_t ki = 0; ki < kh; ++ki) {
            for (std::size_t kj = 0; kj < kw; ++kj) {
                const double* src = col + krow * p;
                for (std::size_t oy = 0; oy < oh; ++oy) {
                    double* d = plane + (oy + ki) * is.w + kj;
                    const double* s = src + oy * ow;
                    for (std::size_t ox = 0; ox < ow; ++ox) d[ox] += s[ox];
                }
                ++krow;
            }
        }
    }
}

} // namespace

void forward(const CnnModel& m, const double* input, Workspace& ws, std::size_t upto) {
    ws.layers.resize(m.layers.size());
    const double* cur = input;
    for (std::size_t i = 0; i <= upto; ++i) {
        const LayerSpec& s = m.layers[i];
        LayerCache& lc = ws.layers[i];
        lc.out.resize(s.out_shape.count());
        switch (s.kind) {
            case LayerKind::conv2d:
            case LayerKind::conv1d: {
                const std::size_t k = s.in_shape.c * s.kh * s.kw;
                const std::size_t p = s.out_shape.h * s.out_shape.w;
                lc.col.resize(k * p);
                im2col(cur, s.in_shape, s.kh, s.kw, lc.col.data());
                kernels::gemm(false, false, s.out_c, p, k, 1.0, m.params[i].w.data(), k,
                              lc.col.data(), p, 0.0, lc.out.data(), p);
                for (std::size_t o = 0; o < s.out_c; ++o) {
                    const double bias = m.params[i].b[o];
                    double* row = lc.out.data() + o * p;
                    for (std::size_t j = 0; j < p; ++j) row[j] += bias;
                }
                break;
            }
            case LayerKind::maxpool: {
                const Shape3& in = s.in_shape;
                const Shape3& out = s.out_shape;
                lc.argmax.resize(out.count());
                std::size_t idx = 0;
                for (std::size_t c = 0; c < in.c; ++c) {
                    const double* plane = cur + c * in.h * in.w;
                    for (std::size_t oy = 0; oy < out.h; ++oy) {
                        for (std::size_t ox = 0; ox < out.w; ++ox) {
                            double best = -1e308;
                            std::size_t bestat = 0;
                            for (std::size_t py = 0; py < s.pool_h; ++py) {
                                const std::size_t y = oy * s.pool_h + py;
                                for (std::size_t px = 0; px < s.pool_w; ++px) {
                                    const std::size_t x = ox * s.pool_w + px;
                                    const double v = plane[y * in.w + x];
                                    if (v > best) { // first max wins ties
                                        best = v;
                                        bestat = c * in.h * in.w + y * in.w + x;
                                    }
                                }
                            }
                            lc.out[idx] = best;
                            lc.argmax[idx] = static_cast<std::uint32_t>(bestat);
                            ++idx;
                        }
                    }
                }
                break;
            }
            case LayerKind::fully_connected: {
                const std::size_t in_n = s.in_shape.count();
                const double* w = m.params[i].w.data();
                for (std::size_t o = 0; o < s.fc_out; ++o)
                    lc.out[o] = kernels::dot(w + o * in_n, cur, in_n) + m.params[i].b[o];
                break;
            }
            case LayerKind::relu: {
                const std::size_t n = s.in_shape.count();
                for (std::size_t j = 0; j < n; ++j) lc.out[j] = cur[j] > 0.0 ? cur[j] : 0.0;
                break;
            }
            case LayerKind::softmax: {
                const std::size_t n = s.in_shape.count();
                double mx = cur[0];
                for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, cur[j]);
                double z = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    lc.out[j] = std::exp(cur[j] - mx);
                    z += lc.out[j];
                }
                const double inv = 1.0 / z;
                for (std::size_t j = 0; j < n; ++j) lc.out[j] *= inv;
                break;
            }
        }
        cur = lc.out.data();
    }
}

double backward(const CnnModel& m, const double* input, int label, Workspace& ws,
                std::vector<LayerParams>& grads) {
    const std::size_t last = m.layers.size() - 1;
    if (m.layers[last].kind != LayerKind::softmax)
        throw input_error("backward: model must end in softmax");
    const std::vector<double>& probs = ws.layers[last].out;
    const double loss = -std::log(std::max(probs[static_cast<std::size_t>(label)], 1e-300));

    // Joint softmax + cross-entropy gradient w.r.t. the logits.
    ws.dcur.assign(probs.begin(), probs.end());
    ws.dcur[static_cast<std::size_t>(label)] -= 1.0;

    for (std::size_t li = last; li-- > 0;) {
        const LayerSpec& s = m.layers[li];
        const double* in = li == 0 ? input : ws.layers[li - 1].out.data();
        const double* dout = ws.dcur.data();
        switch (s.kind) {
            case LayerKind::conv2d:
            case LayerKind::conv1d: {
                const std::size_t k = s.in_shape.c * s.kh * s.kw;
                const std::size_t p = s.out_shape.h * s.out_shape.w;
                for (std::size_t o = 0; o < s.out_c; ++o)
                    grads[li].b[o] += kernels::sum(dout + o * p, p);
                kernels::gemm(false, true, s.out_c, k, p, 1.0, dout, p,
                              ws.layers[li].col.data(), p, 1.0, grads[li].w.data(), k);
                if (li > 0) {
                    ws.dcol.resize(k * p);
                    kernels::gemm(true, false, k, p, s.out_c, 1.0, m.params[li].w.data(), k,
                                  dout, p, 0.0, ws.dcol.data(), p);
                    ws.dnext.assign(s.in_shape.count(), 0.0);
                    col2im_add(ws.dcol.data(), s.in_shape, s.kh, s.kw, ws.dnext.data());
                    std::swap(ws.dcur, ws.dnext);
                }
                break;
            }
            case LayerKind::maxpool: {
                ws.dnext.assign(s.in_shape.count(), 0.0);
                const auto& argmax = ws.layers[li].argmax;
                for (std::size_t j = 0; j < argmax.size(); ++j)
                    ws.dnext[argmax[j]] += dout[j];
                std::swap(ws.dcur, ws.dnext);
                break;
            }
            case LayerKind::fully_connected: {
                const std::size_t in_n = s.in_shape.count();
                for (std::size_t o = 0; o < s.fc_out; ++o) {
                    kernels::axpy(dout[o], in, grads[li].w.data() + o * in_n, in_n);
                    grads[li].b[o] += dout[o];
                }
                if (li > 0) {
                    ws.dnext.assign(in_n, 0.0);
                    const double* w = m.params[li].w.data();
                    for (std::size_t o = 0; o < s.fc_out; ++o)
                        kernels::axpy(dout[o], w + o * in_n, ws.dnext.data(), in_n);
                    std::swap(ws.dcur, ws.dnext);
                }
                break;
            }
            case LayerKind::relu: {
                const std::size_t n = s.in_shape.count();
                ws.dnext.resize(n);
                const std::vector<double>& out = ws.layers[li].out;
                for (std::size_t j = 0; j < n; ++j)
                    ws.dnext[j] = out[j] > 0.0 ? dout[j] : 0.0;
                std::swap(ws.dcur, ws.dnext);
                break;
            }
            case LayerKind::softmax:
                throw input_error("backward: unexpected interior softmax at " + s.name);
        }
    }
    return loss;
}

double sample_loss(const CnnModel& m, const Tensor& image, int label, Workspace& ws) {
    forward(m, image.data.data(), ws, m.layers.size() - 1);
    const std::vector<double>& probs = ws.layers.back().out;
    return -std::log(std::max(probs[static_cast<std::size_t>(label)], 1e-300));
}

} // namespace detail

FeatureMatrix extract_features(const CnnModel& model, const std::string& layer,
                               const std::vector<Tensor>& batch) {
    const int li = model.layer_index(layer);
    if (li < 0) throw input_error("extract_features: unknown layer name: " + layer);
    if (batch.empty()) throw input_error("extract_features: empty batch");
    const std::size_t dim = model.layers[static_cast<std::size_t>(li)].out_shape.count();
    FeatureMatrix fm;
    fm.dim = dim;
    fm.samples = batch.size();
    fm.source_layer = layer;
    fm.data = Matrix(dim, batch.size());
    detail::Workspace ws;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        if (!(batch[s].shape == model.input_shape))
            throw input_error("extract_features: sample " + std::to_string(s) +
                              " does not match the model input shape");
        detail::forward(model, batch[s].data.data(), ws, static_cast<std::size_t>(li));
        const std::vector<double>& out = ws.layers[static_cast<std::size_t>(li)].out;
        for (std::size_t r = 0; r < dim; ++r) fm.data(r, s) = out[r];
    }
    return fm;
}

std::vector<double> predict_probabilities(const CnnModel& model, const Tensor& image) {
    if (!(image.shape == model.input_shape))
        throw input_error("predict: input does not match the model input shape");
    detail::Workspace ws;
    detail::forward(model, image.data.data(), ws, model.layers.size() - 1);
    return ws.layers.back().out;
}

} // namespace m2::cnn
