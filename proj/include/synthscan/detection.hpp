#pragma once

#include "synthscan/model_bundle.hpp"

namespace synthscan {

// Binary fake/real pipeline. Labels follow the detection scheme: 0 fake, 1 real.

struct Verdict {
    int label = 0;
    double confidence = 0.0;
    PromptProvenance provenance = PromptProvenance::none;

    bool is_real() const { return label == 1; }
};

struct DetectorResult {
    ClassifierBundle model;
    TrainHistory history;
};

// Hybrid mode trains the MLP over concatenated toy/CLIP-style embeddings and
// requires prompts on every record; image-only trains the conv net on rasters.
DetectorResult train_detector(const DatasetManifest& manifest, const DatasetSplit& split,
                              const EncoderBackend* backend, const TrainPipelineOptions& options);

// The natural prompt wins when both it and a captioner are supplied; with no
// prompt the captioner runs (provenance "generated"); image-only ignores both.
Verdict detect(const ClassifierBundle& model, const EncoderBackend* backend, const Image& image,
               const std::optional<std::string>& prompt = std::nullopt,
               const EncoderBackend* captioner = nullptr);

EvaluationReport evaluate_detector(const ClassifierBundle& model, const EncoderBackend* backend,
                                   const DatasetManifest& manifest,
                                   const std::vector<LabeledId>& records,
                                   const EvalOptions& options = {});

}  // namespace synthscan
