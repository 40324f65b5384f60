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

void glorot_fill(std::vector<double>& w, int fan_in, int fan_out, Rng& rng) {
    double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : w) v = rng.uniform(-limit, limit);
}

void add_bias_relu(double* m, const double* bias, int rows, int cols, bool apply_relu) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
        double* row = m + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) {
            row[c] += bias[c];
            if (apply_relu && row[c] < 0.0) row[c] = 0.0;
        }
    }
}

}  // namespace

MlpParams init_mlp(int input_dim, int hidden_dim, int n_classes, std::uint64_t seed) {
    if (input_dim < 1 || hidden_dim < 1 || n_classes < 1)
        raise_data("BadDimension", "all MLP dimensions must be positive");
    MlpParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    p.n_classes = n_classes;
    p.init_seed = seed;
    p.w1.resize(static_cast<std::size_t>(hidden_dim) * input_dim);
    p.b1.assign(static_cast<std::size_t>(hidden_dim), 0.0);
    p.w2.resize(static_cast<std::size_t>(n_classes) * hidden_dim);
    p.b2.assign(static_cast<std::size_t>(n_classes), 0.0);
    Rng rng(mix_seed(seed, 0x6d6c70ULL));
    glorot_fill(p.w1, input_dim, hidden_dim, rng);
    glorot_fill(p.w2, hidden_dim, n_classes, rng);
    return p;
}

std::vector<double> mlp_forward(const MlpParams& p, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != p.input_dim)
        raise_data("ShapeMismatch", "input dim " + std::to_string(x.size()) + ", model expects " +
                                        std::to_string(p.input_dim));
    std::vector<double> hidden(static_cast<std::size_t>(p.hidden_dim));
    for (int h = 0; h < p.hidden_dim; ++h) {
        double acc = p.b1[static_cast<std::size_t>(h)];
        const double* wr = p.w1.data() + static_cast<std::size_t>(h) * p.input_dim;
        for (int i = 0; i < p.input_dim; ++i) acc += wr[i] * x[static_cast<std::size_t>(i)];
        hidden[static_cast<std::size_t>(h)] = acc > 0.0 ? acc : 0.0;
    }
    std::vector<double> logits(static_cast<std::size_t>(p.n_classes));
    for (int c = 0; c < p.n_classes; ++c) {
        double acc = p.b2[static_cast<std::size_t>(c)];
        const double* wr = p.w2.data() + static_cast<std::size_t>(c) * p.hidden_dim;
        for (int h = 0; h < p.hidden_dim; ++h) acc += wr[h] * hidden[static_cast<std::size_t>(h)];
        logits[static_cast<std::size_t>(c)] = acc;
    }
    return logits;
}

Prediction mlp_predict(const MlpParams& p, const std::vector<double>& x) {
    return predict_from_logits(mlp_forward(p, x));
}

MlpModel::MlpModel(MlpParams params) : params_(std::move(params)) {
    grads_ = params_;
    for (auto* v : {&grads_.w1, &grads_.b1, &grads_.w2, &grads_.b2})
        std::fill(v->begin(), v->end(), 0.0);
}

void MlpModel::forward(const double* x, int samples, double* logits) {
    const auto& p = params_;
    hidden_.resize(static_cast<std::size_t>(samples) * p.hidden_dim);
    kernels::matmul_nt(x, p.w1.data(), hidden_.data(), samples, p.input_dim, p.hidden_dim);
    add_bias_relu(hidden_.data(), p.b1.data(), samples, p.hidden_dim, true);
    kernels::matmul_nt(hidden_.data(), p.w2.data(), logits, samples, p.hidden_dim, p.n_classes);
    add_bias_relu(logits, p.b2.data(), samples, p.n_classes, false);
}

double MlpModel::forward_backward(const double* x, const int* labels, int samples) {
    const auto& p = params_;
    logits_.resize(static_cast<std::size_t>(samples) * p.n_classes);
    dlogits_.resize(logits_.size());
    forward(x, samples, logits_.data());
    double loss = detail::softmax_ce(logits_.data(), labels, samples, p.n_classes, dlogits_.data());

    kernels::matmul_tn(dlogits_.data(), hidden_.data(), grads_.w2.data(), samples, p.n_classes,
                       p.hidden_dim);
    kernels::col_sums(dlogits_.data(), grads_.b2.data(), samples, p.n_classes);

    dhidden_.resize(hidden_.size());
    kernels::matmul_nn(dlogits_.data(), p.w2.data(), dhidden_.data(), samples, p.n_classes,
                       p.hidden_dim);
#pragma omp parallel for schedule(static)
    for (int s = 0; s < samples; ++s) {
        double* drow = dhidden_.data() + static_cast<std::size_t>(s) * p.hidden_dim;
        const double* hrow = hidden_.data() + static_cast<std::size_t>(s) * p.hidden_dim;
        for (int h = 0; h < p.hidden_dim; ++h)
            if (hrow[h] <= 0.0) drow[h] = 0.0;
    }
    kernels::matmul_tn(dhidden_.data(), x, grads_.w1.data(), samples, p.hidden_dim, p.input_dim);
    kernels::col_sums(dhidden_.data(), grads_.b1.data(), samples, p.hidden_dim);
    return loss;
}

std::vector<ParamView> MlpModel::params() {
    return {{"w1", params_.w1.data(), params_.w1.size()},
            {"b1", params_.b1.data(), params_.b1.size()},
            {"w2", params_.w2.data(), params_.w2.size()},
            {"b2", params_.b2.data(), params_.b2.size()}};
}

std::vector<ParamView> MlpModel::grads() {
    return {{"w1", grads_.w1.data(), grads_.w1.size()},
            {"b1", grads_.b1.data(), grads_.b1.size()},
            {"w2", grads_.w2.data(), grads_.w2.size()},
            {"b2", grads_.b2.data(), grads_.b2.size()}};
}

}  // namespace synthscan
