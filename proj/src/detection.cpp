#include "synthscan/detection.hpp"

#include "synthscan/errors.hpp"

namespace synthscan {

namespace {

void check_detector(const ClassifierBundle& model) {
    if (model.scheme != LabelScheme::detection || model.kind != "detector")
        raise_data("SchemeMismatch", "model is not a detection-scheme detector");
}

}  // namespace

DetectorResult train_detector(const DatasetManifest& manifest, const DatasetSplit& split,
                              const EncoderBackend* backend, const TrainPipelineOptions& options) {
    TrainResult r = train_classifier("detector", manifest, split, backend, options);
    return {std::move(r.bundle), std::move(r.history)};
}

Verdict detect(const ClassifierBundle& model, const EncoderBackend* backend, const Image& image,
               const std::optional<std::string>& prompt, const EncoderBackend* captioner) {
    check_detector(model);
    BundlePrediction p = predict_record(model, backend, image, prompt, captioner);
    return {p.label, p.confidence, p.provenance};
}

EvaluationReport evaluate_detector(const ClassifierBundle& model, const EncoderBackend* backend,
                                   const DatasetManifest& manifest,
                                   const std::vector<LabeledId>& records,
                                   const EvalOptions& options) {
    check_detector(model);
    return evaluate_classifier(model, backend, manifest, records, options);
}

}  // namespace synthscan
