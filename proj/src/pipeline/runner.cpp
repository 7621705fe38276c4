#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "m2/ccf.hpp"
#include "m2/classify.hpp"
#include "m2/error.hpp"
#include "m2/numerics.hpp"
#include "m2/pipeline.hpp"
#include "m2/rng.hpp"

namespace m2::pipeline {

namespace {

using cnn::Tensor;

// Deterministic per-image encodings, computed once and shared by all repeats
// (no cross-sample statistics are involved, so no split leakage).
struct EncodedSample {
    Tensor signal, signal_prewitt, composite;
    Tensor sfi, sfi_prewitt;
    std::vector<Tensor> extra_signal, extra_signal_prewitt, extra_composite;
    std::vector<Tensor> extra_sfi, extra_sfi_prewitt;
    int label = 0;
};

EncodedSample encode_sample(const LoadedSample& s, const PipelineConfig& cfg) {
    EncodedSample e;
    e.label = s.label;

    const std::vector<std::size_t> starts = imaging::window_starts(s.inertial.channels.cols());
    if (starts.empty())
        throw input_error("sample has fewer than 52 inertial samples");
    for (std::size_t wi = 0; wi < starts.size(); ++wi) {
        if (wi > 0 && !cfg.train_on_all_windows) break;
        const Matrix si = imaging::make_signal_image(s.inertial, starts[wi]).pixels;
        const Matrix psi = imaging::rescale01(imaging::prewitt(si));
        const imaging::CompositeImage comp = imaging::composite(si, psi);
        if (wi == 0) {
            e.signal = Tensor::from_matrix(si);
            e.signal_prewitt = Tensor::from_matrix(psi);
            e.composite = Tensor::from_planes({comp.r, comp.g, comp.b});
        } else {
            e.extra_signal.push_back(Tensor::from_matrix(si));
            e.extra_signal_prewitt.push_back(Tensor::from_matrix(psi));
            e.extra_composite.push_back(Tensor::from_planes({comp.r, comp.g, comp.b}));
        }
    }

    const std::vector<imaging::SfiImage> sfis =
        imaging::make_sfi(s.depth, cfg.sfi_segments, cfg.sfi_motion_threshold);
    for (std::size_t k = 0; k < sfis.size(); ++k) {
        const bool canonical = k + 1 == sfis.size(); // full-action image
        if (!canonical && !cfg.train_on_all_segments) continue;
        const Matrix sized = imaging::rescale01(
            sfis[k].pixels.rows() == cfg.sfi_size && sfis[k].pixels.cols() == cfg.sfi_size
                ? sfis[k].pixels
                : numerics::bicubic_resize(sfis[k].pixels, cfg.sfi_size, cfg.sfi_size));
        const Matrix psfi = imaging::rescale01(imaging::prewitt(sized));
        if (canonical) {
            e.sfi = Tensor::from_matrix(sized);
            e.sfi_prewitt = Tensor::from_matrix(psfi);
        } else {
            e.extra_sfi.push_back(Tensor::from_matrix(sized));
            e.extra_sfi_prewitt.push_back(Tensor::from_matrix(psfi));
        }
    }
    return e;
}

enum class Branch { signal, signal_prewitt, composite, sfi, sfi_prewitt };

const Tensor& canonical_of(const EncodedSample& e, Branch b) {
    switch (b) {
        case Branch::signal: return e.signal;
        case Branch::signal_prewitt: return e.signal_prewitt;
        case Branch::composite: return e.composite;
        case Branch::sfi: return e.sfi;
        case Branch::sfi_prewitt: return e.sfi_prewitt;
    }
    throw input_error("bad branch");
}

const std::vector<Tensor>& extras_of(const EncodedSample& e, Branch b) {
    switch (b) {
        case Branch::signal: return e.extra_signal;
        case Branch::signal_prewitt: return e.extra_signal_prewitt;
        case Branch::composite: return e.extra_composite;
        case Branch::sfi: return e.extra_sfi;
        case Branch::sfi_prewitt: return e.extra_sfi_prewitt;
    }
    throw input_error("bad branch");
}

struct Context {
    const LoadedDataset* data = nullptr;
    const PipelineConfig* cfg = nullptr;
    std::vector<EncodedSample> encoded;
    std::size_t classes = 0;
};

Context make_context(const LoadedDataset& data, const PipelineConfig& cfg) {
    if (data.samples.empty()) throw input_error("run: empty dataset");
    if (data.classes < 2) throw input_error("run: need at least 2 classes");
    Context ctx;
    ctx.data = &data;
    ctx.cfg = &cfg;
    ctx.classes = data.classes;
    ctx.encoded.reserve(data.samples.size());
    for (const LoadedSample& s : data.samples) ctx.encoded.push_back(encode_sample(s, cfg));
    return ctx;
}

cnn::CnnModel train_branch(const Context& ctx, Branch b, const std::vector<std::size_t>& train_idx,
                           std::uint64_t seed) {
    const PipelineConfig& cfg = *ctx.cfg;
    cnn::LabeledSet set;
    for (std::size_t idx : train_idx) {
        const EncodedSample& e = ctx.encoded[idx];
        set.images.push_back(canonical_of(e, b));
        set.labels.push_back(e.label);
        for (const Tensor& t : extras_of(e, b)) {
            set.images.push_back(t);
            set.labels.push_back(e.label);
        }
    }
    const bool depth_side = b == Branch::sfi || b == Branch::sfi_prewitt;
    cnn::TrainConfig tc = depth_side ? cfg.depth_train : cfg.signal_train;
    tc.seed = seed;
    cnn::CnnModel model;
    const Tensor& probe = set.images.front();
    const std::size_t hidden = depth_side ? cfg.hidden_fc_depth : cfg.hidden_fc_inertial;
    model = cnn::build_signal_cnn(probe.shape.h, probe.shape.w, hidden, ctx.classes,
                                  probe.shape.c);
    cnn::train(model, set, tc);
    return model;
}

FeatureMatrix branch_features(const Context& ctx, const cnn::CnnModel& model, Branch b,
                              const std::vector<std::size_t>& idx) {
    std::vector<Tensor> batch;
    batch.reserve(idx.size());
    for (std::size_t i : idx) batch.push_back(canonical_of(ctx.encoded[i], b));
    return cnn::extract_features(model, "fc1", batch);
}

std::vector<int> labels_of(const Context& ctx, const std::vector<std::size_t>& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(ctx.encoded[i].label);
    return out;
}

FeatureMatrix rows_resized(const FeatureMatrix& f, std::size_t rows) {
    if (f.dim == rows) return f;
    FeatureMatrix out;
    out.dim = rows;
    out.samples = f.samples;
    out.source_layer = f.source_layer;
    out.data = numerics::bicubic_resize(f.data, rows, f.data.cols());
    return out;
}

FeatureMatrix single_column(const Matrix& col, const std::string& source) {
    FeatureMatrix f;
    f.dim = col.rows();
    f.samples = 1;
    f.source_layer = source;
    f.data = col;
    return f;
}

Matrix tensor_feature_column(const cnn::CnnModel& model, const Tensor& t) {
    const FeatureMatrix f = cnn::extract_features(model, "fc1", {t});
    return f.data;
}

double batch_svm_accuracy(const classify::SvmModel& svm, const FeatureMatrix& feats,
                          const std::vector<int>& labels) {
    std::size_t correct = 0;
    for (std::size_t j = 0; j < feats.samples; ++j)
        if (classify::predict(svm, feats.data.col(j)) == labels[j]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(feats.samples);
}

using Clock = std::chrono::steady_clock;

struct RepeatRunner {
    const Context& ctx;
    std::size_t repeat;
    std::uint64_t base_seed;

    std::uint64_t seed_for(std::uint64_t role) const {
        return rng::mix(rng::mix(base_seed, repeat), role);
    }
};

RepeatResult run_multistage_repeat(const RepeatRunner& rr, const Split& sp) {
    const Context& ctx = rr.ctx;
    const PipelineConfig& cfg = *ctx.cfg;

    const cnn::CnnModel m_sfi = train_branch(ctx, Branch::sfi, sp.train, rr.seed_for(1));
    const cnn::CnnModel m_psfi = train_branch(ctx, Branch::sfi_prewitt, sp.train, rr.seed_for(2));
    const cnn::CnnModel m_si = train_branch(ctx, Branch::signal, sp.train, rr.seed_for(3));
    const cnn::CnnModel m_psi = train_branch(ctx, Branch::signal_prewitt, sp.train, rr.seed_for(4));

    const FeatureMatrix depth_tr = ccf::fuse_concat(branch_features(ctx, m_sfi, Branch::sfi, sp.train),
                                                    branch_features(ctx, m_psfi, Branch::sfi_prewitt, sp.train));
    const FeatureMatrix inert_tr = ccf::fuse_concat(branch_features(ctx, m_si, Branch::signal, sp.train),
                                                    branch_features(ctx, m_psi, Branch::signal_prewitt, sp.train));
    // Depth block downsampled to the inertial row dimension ahead of CCF.
    const FeatureMatrix depth_tr_rs = rows_resized(depth_tr, inert_tr.dim);

    const ccf::CcaTransform cca = ccf::fit_cca(depth_tr_rs, inert_tr, cfg.cca_lambda, cfg.cca_dim);
    const auto [xp_tr, yp_tr] = ccf::transform(cca, depth_tr_rs, inert_tr);
    const Matrix z_tr = ccf::fuse_sum(xp_tr, yp_tr).z;

    const std::vector<int> train_labels = labels_of(ctx, sp.train);
    FeatureMatrix fused_tr;
    fused_tr.dim = z_tr.rows();
    fused_tr.samples = z_tr.cols();
    fused_tr.data = z_tr;
    fused_tr.source_layer = "ccf";
    const classify::SvmModel svm =
        classify::train_svm(fused_tr, train_labels, cfg.svm_c, cfg.svm_epochs, rr.seed_for(10));

    const classify::SvmModel svm_depth =
        classify::train_svm(depth_tr_rs, train_labels, cfg.svm_c, cfg.svm_epochs, rr.seed_for(11));
    const classify::SvmModel svm_inert =
        classify::train_svm(inert_tr, train_labels, cfg.svm_c, cfg.svm_epochs, rr.seed_for(12));

    RepeatResult res;
    res.confusion.assign(ctx.classes, std::vector<std::size_t>(ctx.classes, 0));
    res.test_count = sp.test.size();
    Matrix depth_cols(depth_tr_rs.dim, sp.test.size());
    Matrix inert_cols(inert_tr.dim, sp.test.size());
    std::size_t correct = 0;
    double elapsed_us = 0.0;

    for (std::size_t j = 0; j <= sp.test.size(); ++j) {
        // j == 0 runs sample 0 untimed as warmup, then the timed pass covers all
        const std::size_t t_idx = sp.test[j == 0 ? 0 : j - 1];
        const EncodedSample& e = ctx.encoded[t_idx];
        const auto t0 = Clock::now();
        Matrix d_col = tensor_feature_column(m_sfi, e.sfi);
        Matrix d2 = tensor_feature_column(m_psfi, e.sfi_prewitt);
        Matrix i_col = tensor_feature_column(m_si, e.signal);
        Matrix i2 = tensor_feature_column(m_psi, e.signal_prewitt);
        Matrix dcat(d_col.rows() + d2.rows(), 1);
        for (std::size_t r = 0; r < d_col.rows(); ++r) dcat(r, 0) = d_col(r, 0);
        for (std::size_t r = 0; r < d2.rows(); ++r) dcat(d_col.rows() + r, 0) = d2(r, 0);
        Matrix icat(i_col.rows() + i2.rows(), 1);
        for (std::size_t r = 0; r < i_col.rows(); ++r) icat(r, 0) = i_col(r, 0);
        for (std::size_t r = 0; r < i2.rows(); ++r) icat(i_col.rows() + r, 0) = i2(r, 0);
        if (dcat.rows() != icat.rows())
            dcat = numerics::bicubic_resize(dcat, icat.rows(), 1);
        const auto [xp, yp] = ccf::transform(cca, single_column(dcat, "ccf"), single_column(icat, "ccf"));
        const Matrix z = ccf::fuse_sum(xp, yp).z;
        const int pred = classify::predict(svm, z.col(0));
        const auto t1 = Clock::now();
        if (j == 0) continue;
        elapsed_us += std::chrono::duration<double, std::micro>(t1 - t0).count();
        depth_cols.set_col(j - 1, dcat.col(0));
        inert_cols.set_col(j - 1, icat.col(0));
        const int truth = e.label;
        if (pred == truth) ++correct;
        ++res.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pred)];
    }

    res.accuracy = static_cast<double>(correct) / static_cast<double>(sp.test.size());
    res.inference_us_per_sample = elapsed_us / static_cast<double>(sp.test.size());

    const std::vector<int> test_labels = labels_of(ctx, sp.test);
    FeatureMatrix depth_te;
    depth_te.dim = depth_cols.rows();
    depth_te.samples = depth_cols.cols();
    depth_te.data = depth_cols;
    FeatureMatrix inert_te;
    inert_te.dim = inert_cols.rows();
    inert_te.samples = inert_cols.cols();
    inert_te.data = inert_cols;
    res.modality_accuracy["depth"] = batch_svm_accuracy(svm_depth, depth_te, test_labels);
    res.modality_accuracy["inertial"] = batch_svm_accuracy(svm_inert, inert_te, test_labels);
    return res;
}

RepeatResult run_hybrid_repeat(const RepeatRunner& rr, const Split& sp) {
    const Context& ctx = rr.ctx;
    const PipelineConfig& cfg = *ctx.cfg;

    const cnn::CnnModel m_sfi = train_branch(ctx, Branch::sfi, sp.train, rr.seed_for(1));
    const cnn::CnnModel m_psfi = train_branch(ctx, Branch::sfi_prewitt, sp.train, rr.seed_for(2));
    const cnn::CnnModel m_si = train_branch(ctx, Branch::signal, sp.train, rr.seed_for(3));
    const cnn::CnnModel m_psi = train_branch(ctx, Branch::signal_prewitt, sp.train, rr.seed_for(4));

    const FeatureMatrix depth_tr = ccf::fuse_concat(branch_features(ctx, m_sfi, Branch::sfi, sp.train),
                                                    branch_features(ctx, m_psfi, Branch::sfi_prewitt, sp.train));
    const FeatureMatrix inert_tr = ccf::fuse_concat(branch_features(ctx, m_si, Branch::signal, sp.train),
                                                    branch_features(ctx, m_psi, Branch::signal_prewitt, sp.train));
    const std::vector<int> train_labels = labels_of(ctx, sp.train);
    const classify::SvmModel svm_depth =
        classify::train_svm(depth_tr, train_labels, cfg.svm_c, cfg.svm_epochs, rr.seed_for(11));
    const classify::SvmModel svm_inert =
        classify::train_svm(inert_tr, train_labels, cfg.svm_c, cfg.svm_epochs, rr.seed_for(12));

    RepeatResult res;
    res.confusion.assign(ctx.classes, std::vector<std::size_t>(ctx.classes, 0));
    res.test_count = sp.test.size();
    std::size_t correct = 0, correct_d = 0, correct_i = 0;
    double elapsed_us = 0.0;

    for (std::size_t j = 0; j <= sp.test.size(); ++j) {
        const std::size_t t_idx = sp.test[j == 0 ? 0 : j - 1];
        const EncodedSample& e = ctx.encoded[t_idx];
        const auto t0 = Clock::now();
        Matrix d_col = tensor_feature_column(m_sfi, e.sfi);
        Matrix d2 = tensor_feature_column(m_psfi, e.sfi_prewitt);
        Matrix i_col = tensor_feature_column(m_si, e.signal);
        Matrix i2 = tensor_feature_column(m_psi, e.signal_prewitt);
        std::vector<double> dcat(d_col.rows() + d2.rows());
        for (std::size_t r = 0; r < d_col.rows(); ++r) dcat[r] = d_col(r, 0);
        for (std::size_t r = 0; r < d2.rows(); ++r) dcat[d_col.rows() + r] = d2(r, 0);
        std::vector<double> icat(i_col.rows() + i2.rows());
        for (std::size_t r = 0; r < i_col.rows(); ++r) icat[r] = i_col(r, 0);
        for (std::size_t r = 0; r < i2.rows(); ++r) icat[i_col.rows() + r] = i2(r, 0);
        const classify::ScoreVector sd =
            classify::softmax_normalize(classify::predict_scores(svm_depth, dcat));
        const classify::ScoreVector si =
            classify::softmax_normalize(classify::predict_scores(svm_inert, icat));
        const int pred = classify::max_fuse(sd, si);
        const auto t1 = Clock::now();
        if (j == 0) continue;
        elapsed_us += std::chrono::duration<double, std::micro>(t1 - t0).count();
        const int truth = e.label;
        if (pred == truth) ++correct;
        const auto am = [](const classify::ScoreVector& s) {
            return static_cast<int>(std::max_element(s.scores.begin(), s.scores.end()) -
                                    s.scores.begin());
        };
        if (am(sd) == truth) ++correct_d;
        if (am(si) == truth) ++correct_i;
        ++res.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pred)];
    }

    const auto n = static_cast<double>(sp.test.size());
    res.accuracy = static_cast<double>(correct) / n;
    res.inference_us_per_sample = elapsed_us / n;
    res.modality_accuracy["depth"] = static_cast<double>(correct_d) / n;
    res.modality_accuracy["inertial"] = static_cast<double>(correct_i) / n;
    return res;
}

RepeatResult run_efficient_repeat(const RepeatRunner& rr, const Split& sp) {
    const Context& ctx = rr.ctx;
    const PipelineConfig& cfg = *ctx.cfg;

    const cnn::CnnModel m_sfi = train_branch(ctx, Branch::sfi, sp.train, rr.seed_for(1));
    const cnn::CnnModel m_comp = train_branch(ctx, Branch::composite, sp.train, rr.seed_for(5));

    const FeatureMatrix depth_tr = branch_features(ctx, m_sfi, Branch::sfi, sp.train);
    const FeatureMatrix comp_tr = branch_features(ctx, m_comp, Branch::composite, sp.train);

    const ccf::CcaTransform cca = ccf::fit_cca(depth_tr, comp_tr, cfg.cca_lambda, cfg.cca_dim);
    const auto [xp_tr, yp_tr] = ccf::transform(cca, depth_tr, comp_tr);
    const Matrix z_tr = ccf::fuse_sum(xp_tr, yp_tr).z;
    const std::vector<int> train_labels = labels_of(ctx, sp.train);
    FeatureMatrix fused_tr;
    fused_tr.dim = z_tr.rows();
    fused_tr.samples = z_tr.cols();
    fused_tr.data = z_tr;
    fused_tr.source_layer = "ccf";
    const classify::SvmModel svm =
        classify::train_svm(fused_tr, train_labels, cfg.svm_c, cfg.svm_epochs, rr.seed_for(10));
    const classify::SvmModel svm_depth =
        classify::train_svm(depth_tr, train_labels, cfg.svm_c, cfg.svm_epochs, rr.seed_for(11));
    const classify::SvmModel svm_comp =
        classify::train_svm(comp_tr, train_labels, cfg.svm_c, cfg.svm_epochs, rr.seed_for(12));

    RepeatResult res;
    res.confusion.assign(ctx.classes, std::vector<std::size_t>(ctx.classes, 0));
    res.test_count = sp.test.size();
    Matrix depth_cols(depth_tr.dim, sp.test.size());
    Matrix comp_cols(comp_tr.dim, sp.test.size());
    std::size_t correct = 0;
    double elapsed_us = 0.0;

    for (std::size_t j = 0; j <= sp.test.size(); ++j) {
        const std::size_t t_idx = sp.test[j == 0 ? 0 : j - 1];
        const EncodedSample& e = ctx.encoded[t_idx];
        const auto t0 = Clock::now();
        Matrix d_col = tensor_feature_column(m_sfi, e.sfi);
        Matrix c_col = tensor_feature_column(m_comp, e.composite);
        const auto [xp, yp] =
            ccf::transform(cca, single_column(d_col, "fc1"), single_column(c_col, "fc1"));
        const Matrix z = ccf::fuse_sum(xp, yp).z;
        const int pred = classify::predict(svm, z.col(0));
        const auto t1 = Clock::now();
        if (j == 0) continue;
        elapsed_us += std::chrono::duration<double, std::micro>(t1 - t0).count();
        depth_cols.set_col(j - 1, d_col.col(0));
        comp_cols.set_col(j - 1, c_col.col(0));
        const int truth = e.label;
        if (pred == truth) ++correct;
        ++res.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pred)];
    }

    const auto n = static_cast<double>(sp.test.size());
    res.accuracy = static_cast<double>(correct) / n;
    res.inference_us_per_sample = elapsed_us / n;
    const std::vector<int> test_labels = labels_of(ctx, sp.test);
    FeatureMatrix depth_te;
    depth_te.dim = depth_cols.rows();
    depth_te.samples = depth_cols.cols();
    depth_te.data = depth_cols;
    FeatureMatrix comp_te;
    comp_te.dim = comp_cols.rows();
    comp_te.samples = comp_cols.cols();
    comp_te.data = comp_cols;
    res.modality_accuracy["depth"] = batch_svm_accuracy(svm_depth, depth_te, test_labels);
    res.modality_accuracy["inertial"] = batch_svm_accuracy(svm_comp, comp_te, test_labels);
    return res;
}

RunReport run_kind(FrameworkKind kind, const LoadedDataset& data, const PipelineConfig& cfg) {
    const Context ctx = make_context(data, cfg);
    std::vector<RepeatResult> results;
    results.reserve(cfg.split.repeats);
    for (std::size_t r = 0; r < cfg.split.repeats; ++r) {
        const Split sp = split(data.samples.size(), cfg.split, r);
        const RepeatRunner rr{ctx, r, cfg.split.seed};
        switch (kind) {
            case FrameworkKind::multistage: results.push_back(run_multistage_repeat(rr, sp)); break;
            case FrameworkKind::hybrid: results.push_back(run_hybrid_repeat(rr, sp)); break;
            case FrameworkKind::efficient: results.push_back(run_efficient_repeat(rr, sp)); break;
        }
    }
    return evaluate(kind, ctx.classes, cfg.split.seed, results);
}

} // namespace

RunReport evaluate(FrameworkKind kind, std::size_t classes, std::uint64_t seed,
                   const std::vector<RepeatResult>& repeats) {
    if (repeats.empty()) throw input_error("evaluate: no completed repeats");
    RunReport rep;
    rep.framework = framework_name(kind);
    rep.classes = classes;
    rep.seed = seed;
    rep.extractor_calls_per_sample = kind == FrameworkKind::efficient ? 2 : 4;
    rep.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
    double acc = 0.0, us = 0.0;
    for (const RepeatResult& r : repeats) {
        rep.per_repeat_accuracy.push_back(r.accuracy);
        acc += r.accuracy;
        us += r.inference_us_per_sample;
        for (const auto& [name, a] : r.modality_accuracy) rep.modality_mean_accuracy[name] += a;
        for (std::size_t i = 0; i < classes; ++i)
            for (std::size_t j = 0; j < classes; ++j) rep.confusion[i][j] += r.confusion[i][j];
    }
    const auto n = static_cast<double>(repeats.size());
    rep.mean_accuracy = acc / n;
    rep.inference_us_per_sample = us / n;
    for (auto& [name, a] : rep.modality_mean_accuracy) a /= n;
    return rep;
}

RunReport run_multistage(const LoadedDataset& data, const PipelineConfig& cfg) {
    return run_kind(FrameworkKind::multistage, data, cfg);
}

RunReport run_hybrid(const LoadedDataset& data, const PipelineConfig& cfg) {
    return run_kind(FrameworkKind::hybrid, data, cfg);
}

RunReport run_efficient(const LoadedDataset& data, const PipelineConfig& cfg) {
    return run_kind(FrameworkKind::efficient, data, cfg);
}

RunReport run_framework(FrameworkKind kind, const LoadedDataset& data, const PipelineConfig& cfg) {
    return run_kind(kind, data, cfg);
}

} // namespace m2::pipeline
