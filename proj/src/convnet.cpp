#include <cmath>

#include "synthscan/classifier.hpp"
#include "synthscan/errors.hpp"
#include "synthscan/rng.hpp"

namespace synthscan {

namespace detail {
double softmax_ce(const double* logits, const int* labels, int samples, int classes,
                  double* dlogits);
}

namespace {

ConvLayer make_layer(int in_c, int out_c, int ksize, int stride, Rng& rng) {
    ConvLayer l;
    l.in_c = in_c;
    l.out_c = out_c;
    l.ksize = ksize;
    l.stride = stride;
    l.pad = ksize / 2;
    l.w.resize(static_cast<std::size_t>(out_c) * in_c * ksize * ksize);
    l.b.assign(static_cast<std::size_t>(out_c), 0.0);
    double limit = std::sqrt(6.0 / (in_c * ksize * ksize + out_c * ksize * ksize));
    for (double& v : l.w) v = rng.uniform(-limit, limit);
    return l;
}

void relu_inplace(double* data, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
        if (data[i] < 0.0) data[i] = 0.0;
}

void add_then_relu(double* acc, const double* other, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
        acc[i] += other[i];
        if (acc[i] < 0.0) acc[i] = 0.0;
    }
}

void relu_mask(double* grad, const double* act, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
        if (act[i] <= 0.0) grad[i] = 0.0;
}

void add_into(double* acc, const double* other, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) acc[i] += other[i];
}

}  // namespace

ConvNetConfig convnet_preset(const std::string& name, int n_classes) {
    if (name == "tiny") return {16, {8}, 1, n_classes};
    if (name == "small") return {64, {16, 32, 64}, 1, n_classes};
    if (name == "resnet18") return {256, {64, 128, 256, 512}, 2, n_classes};
    raise_usage("BadConfig", "unknown conv preset '" + name + "' (tiny|small|resnet18)");
}

ConvNetParams init_convnet(const ConvNetConfig& config, std::uint64_t seed) {
    if (config.input_resolution < 4) raise_data("BadDimension", "input resolution must be >= 4");
    if (config.stage_channels.empty()) raise_data("BadDimension", "need at least one stage");
    if (config.blocks_per_stage < 1) raise_data("BadDimension", "blocks_per_stage must be >= 1");
    if (config.n_classes < 2) raise_data("BadDimension", "need at least two classes");
    for (int c : config.stage_channels)
        if (c < 1) raise_data("BadDimension", "stage channels must be positive");

    ConvNetParams p;
    p.config = config;
    p.init_seed = seed;
    Rng rng(mix_seed(seed, 0x636f6e76ULL));
    p.stem = make_layer(3, config.stage_channels[0], 3, 1, rng);

    int cur_c = config.stage_channels[0];
    for (std::size_t stage = 0; stage < config.stage_channels.size(); ++stage) {
        int out_c = config.stage_channels[stage];
        for (int b = 0; b < config.blocks_per_stage; ++b) {
            int stride = (stage > 0 && b == 0) ? 2 : 1;
            ResidualBlock block;
            block.conv1 = make_layer(cur_c, out_c, 3, stride, rng);
            block.conv2 = make_layer(out_c, out_c, 3, 1, rng);
            if (stride != 1 || cur_c != out_c)
                block.projection = make_layer(cur_c, out_c, 1, stride, rng);
            p.blocks.push_back(std::move(block));
            cur_c = out_c;
        }
    }

    p.head_w.resize(static_cast<std::size_t>(config.n_classes) * cur_c);
    p.head_b.assign(static_cast<std::size_t>(config.n_classes), 0.0);
    double limit = std::sqrt(6.0 / (cur_c + config.n_classes));
    for (double& v : p.head_w) v = rng.uniform(-limit, limit);
    return p;
}

ConvNetModel::ConvNetModel(ConvNetParams params) : params_(std::move(params)) {
    grads_ = params_;
    auto zero_layer = [](ConvLayer& l) {
        std::fill(l.w.begin(), l.w.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
    };
    zero_layer(grads_.stem);
    for (auto& b : grads_.blocks) {
        zero_layer(b.conv1);
        zero_layer(b.conv2);
        if (b.projection) zero_layer(*b.projection);
    }
    std::fill(grads_.head_w.begin(), grads_.head_w.end(), 0.0);
    std::fill(grads_.head_b.begin(), grads_.head_b.end(), 0.0);

    int r = params_.config.input_resolution;
    for (const auto& b : params_.blocks) {
        res_.push_back(r);
        r = b.conv1.shape(r, r).out_h();
    }
    res_.push_back(r);  // final feature resolution
    acts_.resize(params_.blocks.size());
}

std::size_t ConvNetModel::input_size() const {
    return 3ull * params_.config.input_resolution * params_.config.input_resolution;
}

void ConvNetModel::run_forward(const double* x, int samples, double* logits, bool /*keep_acts*/) {
    const auto& p = params_;
    const int r0 = p.config.input_resolution;

    kernels::Conv2dShape stem_shape = p.stem.shape(r0, r0);
    stem_out_.resize(static_cast<std::size_t>(samples) * p.stem.out_c * stem_shape.out_plane());
    kernels::conv2d_forward(x, p.stem.w.data(), p.stem.b.data(), stem_out_.data(), samples,
                            stem_shape);
    relu_inplace(stem_out_.data(), stem_out_.size());

    const double* cur = stem_out_.data();
    for (std::size_t i = 0; i < p.blocks.size(); ++i) {
        const auto& b = p.blocks[i];
        int r_in = res_[i];
        kernels::Conv2dShape s1 = b.conv1.shape(r_in, r_in);
        int r_out = s1.out_h();
        std::size_t out_count = static_cast<std::size_t>(samples) * b.conv1.out_c * r_out * r_out;

        acts_[i].r1.resize(out_count);
        kernels::conv2d_forward(cur, b.conv1.w.data(), b.conv1.b.data(), acts_[i].r1.data(),
                                samples, s1);
        relu_inplace(acts_[i].r1.data(), out_count);

        acts_[i].out.resize(out_count);
        kernels::Conv2dShape s2 = b.conv2.shape(r_out, r_out);
        kernels::conv2d_forward(acts_[i].r1.data(), b.conv2.w.data(), b.conv2.b.data(),
                                acts_[i].out.data(), samples, s2);

        if (b.projection) {
            scratch_a_.resize(out_count);
            kernels::Conv2dShape sp = b.projection->shape(r_in, r_in);
            kernels::conv2d_forward(cur, b.projection->w.data(), b.projection->b.data(),
                                    scratch_a_.data(), samples, sp);
            add_then_relu(acts_[i].out.data(), scratch_a_.data(), out_count);
        } else {
            add_then_relu(acts_[i].out.data(), cur, out_count);
        }
        cur = acts_[i].out.data();
    }

    const int last_c = p.blocks.empty() ? p.stem.out_c : p.blocks.back().conv2.out_c;
    const int rf = res_.back();
    const std::int64_t plane = static_cast<std::int64_t>(rf) * rf;
    gap_.resize(static_cast<std::size_t>(samples) * last_c);
#pragma omp parallel for collapse(2) schedule(static)
    for (int s = 0; s < samples; ++s) {
        for (int c = 0; c < last_c; ++c) {
            const double* f = cur + (static_cast<std::int64_t>(s) * last_c + c) * plane;
            double acc = 0.0;
            for (std::int64_t q = 0; q < plane; ++q) acc += f[q];
            gap_[static_cast<std::size_t>(s) * last_c + c] = acc / static_cast<double>(plane);
        }
    }

    kernels::matmul_nt(gap_.data(), p.head_w.data(), logits, samples, last_c, p.config.n_classes);
#pragma omp parallel for schedule(static)
    for (int s = 0; s < samples; ++s)
        for (int c = 0; c < p.config.n_classes; ++c)
            logits[static_cast<std::size_t>(s) * p.config.n_classes + c] += p.head_b[c];
}

void ConvNetModel::forward(const double* x, int samples, double* logits) {
    run_forward(x, samples, logits, false);
}

double ConvNetModel::forward_backward(const double* x, const int* labels, int samples) {
    const auto& p = params_;
    const int classes = p.config.n_classes;
    logits_.resize(static_cast<std::size_t>(samples) * classes);
    dlogits_.resize(logits_.size());
    run_forward(x, samples, logits_.data(), true);
    double loss = detail::softmax_ce(logits_.data(), labels, samples, classes, dlogits_.data());

    const int last_c = p.blocks.empty() ? p.stem.out_c : p.blocks.back().conv2.out_c;
    const int rf = res_.back();
    const std::int64_t plane = static_cast<std::int64_t>(rf) * rf;

    kernels::matmul_tn(dlogits_.data(), gap_.data(), grads_.head_w.data(), samples, classes,
                       last_c);
    kernels::col_sums(dlogits_.data(), grads_.head_b.data(), samples, classes);
    dgap_.resize(gap_.size());
    kernels::matmul_nn(dlogits_.data(), p.head_w.data(), dgap_.data(), samples, classes, last_c);

    // d(feature map) from GAP
    std::vector<double>& dcur = scratch_a_;
    dcur.resize(static_cast<std::size_t>(samples) * last_c * plane);
#pragma omp parallel for collapse(2) schedule(static)
    for (int s = 0; s < samples; ++s) {
        for (int c = 0; c < last_c; ++c) {
            double g = dgap_[static_cast<std::size_t>(s) * last_c + c] / static_cast<double>(plane);
            double* d = dcur.data() + (static_cast<std::int64_t>(s) * last_c + c) * plane;
            for (std::int64_t q = 0; q < plane; ++q) d[q] = g;
        }
    }

    std::vector<double> dtmp, dinput_main;
    for (std::size_t bi = p.blocks.size(); bi-- > 0;) {
        const auto& b = p.blocks[bi];
        auto& gb = grads_.blocks[bi];
        int r_in = res_[bi];
        kernels::Conv2dShape s1 = b.conv1.shape(r_in, r_in);
        int r_out = s1.out_h();
        kernels::Conv2dShape s2 = b.conv2.shape(r_out, r_out);
        const double* a0 = bi == 0 ? stem_out_.data() : acts_[bi - 1].out.data();
        std::size_t in_count = static_cast<std::size_t>(samples) * b.conv1.in_c * r_in * r_in;
        std::size_t out_count = acts_[bi].out.size();

        // through the block output relu
        relu_mask(dcur.data(), acts_[bi].out.data(), out_count);

        // conv2 branch
        dtmp.resize(acts_[bi].r1.size());
        kernels::conv2d_backward_input(dcur.data(), b.conv2.w.data(), dtmp.data(), samples, s2);
        kernels::conv2d_backward_weights(acts_[bi].r1.data(), dcur.data(), gb.conv2.w.data(),
                                         gb.conv2.b.data(), samples, s2);
        relu_mask(dtmp.data(), acts_[bi].r1.data(), dtmp.size());

        dinput_main.resize(in_count);
        kernels::conv2d_backward_input(dtmp.data(), b.conv1.w.data(), dinput_main.data(), samples,
                                       s1);
        kernels::conv2d_backward_weights(a0, dtmp.data(), gb.conv1.w.data(), gb.conv1.b.data(),
                                         samples, s1);

        // shortcut branch
        if (b.projection) {
            kernels::Conv2dShape sp = b.projection->shape(r_in, r_in);
            scratch_b_.resize(in_count);
            kernels::conv2d_backward_input(dcur.data(), b.projection->w.data(), scratch_b_.data(),
                                           samples, sp);
            kernels::conv2d_backward_weights(a0, dcur.data(), gb.projection->w.data(),
                                             gb.projection->b.data(), samples, sp);
            add_into(dinput_main.data(), scratch_b_.data(), in_count);
        } else {
            add_into(dinput_main.data(), dcur.data(), in_count);
        }
        dcur.swap(dinput_main);
    }

    // stem
    relu_mask(dcur.data(), stem_out_.data(), stem_out_.size());
    kernels::Conv2dShape stem_shape = p.stem.shape(p.config.input_resolution,
                                                   p.config.input_resolution);
    kernels::conv2d_backward_weights(x, dcur.data(), grads_.stem.w.data(), grads_.stem.b.data(),
                                     samples, stem_shape);
    return loss;
}

std::vector<ParamView> ConvNetModel::params() {
    std::vector<ParamView> v;
    auto push = [&v](const std::string& name, std::vector<double>& d) {
        v.push_back({name, d.data(), d.size()});
    };
    push("stem.w", params_.stem.w);
    push("stem.b", params_.stem.b);
    for (std::size_t i = 0; i < params_.blocks.size(); ++i) {
        auto& b = params_.blocks[i];
        std::string tag = "block" + std::to_string(i);
        push(tag + ".conv1.w", b.conv1.w);
        push(tag + ".conv1.b", b.conv1.b);
        push(tag + ".conv2.w", b.conv2.w);
        push(tag + ".conv2.b", b.conv2.b);
        if (b.projection) {
            push(tag + ".proj.w", b.projection->w);
            push(tag + ".proj.b", b.projection->b);
        }
    }
    push("head.w", params_.head_w);
    push("head.b", params_.head_b);
    return v;
}

std::vector<ParamView> ConvNetModel::grads() {
    std::vector<ParamView> v;
    auto push = [&v](const std::string& name, std::vector<double>& d) {
        v.push_back({name, d.data(), d.size()});
    };
    push("stem.w", grads_.stem.w);
    push("stem.b", grads_.stem.b);
    for (std::size_t i = 0; i < grads_.blocks.size(); ++i) {
        auto& b = grads_.blocks[i];
        std::string tag = "block" + std::to_string(i);
        push(tag + ".conv1.w", b.conv1.w);
        push(tag + ".conv1.b", b.conv1.b);
        push(tag + ".conv2.w", b.conv2.w);
        push(tag + ".conv2.b", b.conv2.b);
        if (b.projection) {
            push(tag + ".proj.w", b.projection->w);
            push(tag + ".proj.b", b.projection->b);
        }
    }
    push("head.w", grads_.head_w);
    push("head.b", grads_.head_b);
    return v;
}

std::vector<double> convnet_forward(const ConvNetParams& p, const std::vector<double>& chw) {
    ConvNetModel model(p);
    if (chw.size() != model.input_size())
        raise_data("ShapeMismatch", "raster size " + std::to_string(chw.size()) +
                                        ", model expects " + std::to_string(model.input_size()));
    std::vector<double> logits(static_cast<std::size_t>(p.config.n_classes));
    model.forward(chw.data(), 1, logits.data());
    return logits;
}

Prediction convnet_predict(const ConvNetParams& p, const std::vector<double>& chw) {
    return predict_from_logits(convnet_forward(p, chw));
}

}  // namespace synthscan
