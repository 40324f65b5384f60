#pragma once

#include "synthscan/model_bundle.hpp"

namespace synthscan {

// Source attribution: the model is a 4-class classifier (0 real, 1 SD, 2 LD,
// 3 GLIDE); confidence-threshold routing maps unconfident samples to a single
// pooled "unseen" class (label 4) without retraining.

struct AttributionResult {
    int source = 0;  // 0..3 per the attribution scheme, kUnseenLabel for unseen
    double confidence = 0.0;
    std::optional<double> threshold_used;
    PromptProvenance provenance = PromptProvenance::none;
};

std::string source_name(int source);

struct AttributorResult {
    ClassifierBundle model;
    TrainHistory history;
};

AttributorResult train_attributor(const DatasetManifest& manifest, const DatasetSplit& split,
                                  const EncoderBackend* backend,
                                  const TrainPipelineOptions& options);

// Without a threshold the argmax class wins. With threshold t the sample is
// routed to unseen iff its max probability is strictly below t.
AttributionResult attribute(const ClassifierBundle& model, const EncoderBackend* backend,
                            const Image& image,
                            const std::optional<std::string>& prompt = std::nullopt,
                            const EncoderBackend* captioner = nullptr,
                            std::optional<double> threshold = std::nullopt);

EvaluationReport evaluate_attributor(const ClassifierBundle& model, const EncoderBackend* backend,
                                     const DatasetManifest& manifest,
                                     const std::vector<LabeledId>& records,
                                     const EvalOptions& options = {});

// Routing rule applied to precomputed 4-class probability rows against
// 5-class ground truth; one (threshold, accuracy) pair per threshold.
std::vector<std::pair<double, double>> sweep_accuracy(
    const std::vector<std::vector<double>>& probabilities, const std::vector<int>& labels5,
    const std::vector<double>& thresholds);

// Balanced five-class evaluation (labels 0..3 seen, 4 unseen).
std::vector<std::pair<double, double>> sweep_thresholds(const ClassifierBundle& model,
                                                        const EncoderBackend* backend,
                                                        const DatasetManifest& manifest,
                                                        const std::vector<LabeledId>& fiveclass,
                                                        const std::vector<double>& thresholds,
                                                        const EvalOptions& options = {});

// 0.0, 0.1, ..., 1.0
std::vector<double> default_threshold_grid();

}  // namespace synthscan
