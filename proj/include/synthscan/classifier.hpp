#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "synthscan/kernels.hpp"

namespace synthscan {

// ---------------------------------------------------------------------------
// Shared pieces

std::vector<double> softmax(const std::vector<double>& logits);

// argmax with ties broken toward the lowest class index; confidence is the
// max softmax probability.
struct Prediction {
    int label = 0;
    double confidence = 0.0;
};
Prediction predict_from_logits(const std::vector<double>& logits);

struct ParamView {
    std::string name;
    double* data = nullptr;
    std::size_t size = 0;
};

// Batched training surface shared by the MLP and the conv net. forward_backward
// computes mean cross-entropy over the batch and overwrites the gradient
// buffers with its analytic gradient.
class BatchModel {
public:
    virtual ~BatchModel() = default;
    virtual int n_classes() const = 0;
    virtual std::size_t input_size() const = 0;  // doubles per sample
    virtual void forward(const double* x, int samples, double* logits) = 0;
    virtual double forward_backward(const double* x, const int* labels, int samples) = 0;
    virtual std::vector<ParamView> params() = 0;
    virtual std::vector<ParamView> grads() = 0;
};

struct TrainConfig {
    int epochs = 30;
    int batch_size = 32;
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::uint64_t seed = 0;
    // loss is fixed: multi-class cross-entropy
};

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> train_acc;
    std::vector<double> holdout_loss;  // NaN entries when no holdout was given
    std::vector<double> holdout_acc;
};

// Seeded mini-batch SGD with momentum. Deterministic given (initial params,
// data order, config.seed) for any thread count.
TrainHistory train_model(BatchModel& model, const double* x, const int* y, std::size_t n,
                         const double* x_holdout, const int* y_holdout, std::size_t n_holdout,
                         const TrainConfig& config);

struct EvalStats {
    double loss = 0.0;
    double accuracy = 0.0;
};
EvalStats evaluate_model(BatchModel& model, const double* x, const int* y, std::size_t n);

// Central finite differences over every parameter; returns the worst
// |analytic - numeric| / max(1, |analytic|, |numeric|).
double gradient_check(BatchModel& model, const double* x, const int* y, int samples,
                      double epsilon);

// Same check restricted to a seeded sample of at most max_params parameters,
// for nets too large to probe exhaustively at train time.
double gradient_check_sampled(BatchModel& model, const double* x, const int* y, int samples,
                              double epsilon, std::size_t max_params, std::uint64_t seed);

std::string train_config_digest(const TrainConfig& config);

// ---------------------------------------------------------------------------
// 2-layer MLP over embeddings

struct MlpParams {
    int input_dim = 0;
    int hidden_dim = 0;
    int n_classes = 0;
    std::vector<double> w1;  // hidden x input
    std::vector<double> b1;  // hidden
    std::vector<double> w2;  // classes x hidden
    std::vector<double> b2;  // classes
    std::uint64_t init_seed = 0;
};

// Seeded Glorot-uniform weights, zero biases.
MlpParams init_mlp(int input_dim, int hidden_dim, int n_classes, std::uint64_t seed);

std::vector<double> mlp_forward(const MlpParams& p, const std::vector<double>& x);
Prediction mlp_predict(const MlpParams& p, const std::vector<double>& x);

class MlpModel : public BatchModel {
public:
    explicit MlpModel(MlpParams params);

    int n_classes() const override { return params_.n_classes; }
    std::size_t input_size() const override { return static_cast<std::size_t>(params_.input_dim); }
    void forward(const double* x, int samples, double* logits) override;
    double forward_backward(const double* x, const int* labels, int samples) override;
    std::vector<ParamView> params() override;
    std::vector<ParamView> grads() override;

    const MlpParams& parameters() const { return params_; }
    MlpParams take() { return std::move(params_); }

private:
    MlpParams params_;
    MlpParams grads_;  // same shapes, gradient storage
    std::vector<double> hidden_, dhidden_, logits_, dlogits_;
};

// ---------------------------------------------------------------------------
// Small residual conv net over rasters

struct ConvLayer {
    int in_c = 0, out_c = 0, ksize = 3, stride = 1, pad = 1;
    std::vector<double> w;  // out_c x in_c x k x k
    std::vector<double> b;  // out_c

    kernels::Conv2dShape shape(int in_h, int in_w) const {
        return {in_c, in_h, in_w, out_c, ksize, stride, pad};
    }
};

// Two 3x3 convs with a shortcut; the shortcut is the identity except where the
// block changes channels or resolution, in which case a 1x1 projection conv
// carries the residual (the usual residual-net arrangement).
struct ResidualBlock {
    ConvLayer conv1;
    ConvLayer conv2;
    std::optional<ConvLayer> projection;
};

struct ConvNetConfig {
    int input_resolution = 64;
    std::vector<int> stage_channels = {16, 32, 64};
    int blocks_per_stage = 1;
    int n_classes = 2;
};

// Named presets: tiny (16 px, one 8-channel stage — test scale), small
// (the default above), resnet18 (256 px, {64,128,256,512} x 2 blocks).
ConvNetConfig convnet_preset(const std::string& name, int n_classes);

struct ConvNetParams {
    ConvNetConfig config;
    ConvLayer stem;  // 3 -> stage_channels[0], 3x3 stride 1
    std::vector<ResidualBlock> blocks;
    std::vector<double> head_w;  // n_classes x last_channels
    std::vector<double> head_b;  // n_classes
    std::uint64_t init_seed = 0;
};

ConvNetParams init_convnet(const ConvNetConfig& config, std::uint64_t seed);

std::vector<double> convnet_forward(const ConvNetParams& p, const std::vector<double>& chw);
Prediction convnet_predict(const ConvNetParams& p, const std::vector<double>& chw);

class ConvNetModel : public BatchModel {
public:
    explicit ConvNetModel(ConvNetParams params);

    int n_classes() const override { return params_.config.n_classes; }
    std::size_t input_size() const override;
    void forward(const double* x, int samples, double* logits) override;
    double forward_backward(const double* x, const int* labels, int samples) override;
    std::vector<ParamView> params() override;
    std::vector<ParamView> grads() override;

    const ConvNetParams& parameters() const { return params_; }
    ConvNetParams take() { return std::move(params_); }

private:
    struct BlockActs {
        std::vector<double> r1;   // post-relu output of conv1
        std::vector<double> sum;  // conv2 output + shortcut, pre-relu
        std::vector<double> out;  // post-relu block output
    };

    void run_forward(const double* x, int samples, double* logits, bool keep_acts);

    ConvNetParams params_;
    ConvNetParams grads_;
    std::vector<int> res_;  // resolution entering each block

    // batch workspace
    std::vector<double> stem_out_, gap_, logits_, dlogits_, dgap_;
    std::vector<BlockActs> acts_;
    std::vector<double> scratch_a_, scratch_b_;
};

}  // namespace synthscan
