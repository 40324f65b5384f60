#include "synthscan/attribution.hpp"

#include <algorithm>

#include "synthscan/errors.hpp"

namespace synthscan {

namespace {

void check_attributor(const ClassifierBundle& model) {
    if (model.scheme != LabelScheme::attribution || model.kind != "attributor")
        raise_data("SchemeMismatch", "model is not an attribution-scheme attributor");
}

void check_threshold(const std::optional<double>& threshold) {
    if (threshold && (!(*threshold >= 0.0) || !(*threshold <= 1.0)))
        raise_data("BadThreshold", "threshold must lie in [0, 1]");
}

int route(const std::vector<double>& probs, const std::optional<double>& threshold) {
    int best = 0;
    for (std::size_t c = 1; c < probs.size(); ++c)
        if (probs[c] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
    if (threshold && probs[static_cast<std::size_t>(best)] < *threshold) return kUnseenLabel;
    return best;
}

}  // namespace

std::string source_name(int source) {
    switch (source) {
        case 0: return "real";
        case 1: return "SD";
        case 2: return "LD";
        case 3: return "GLIDE";
        case kUnseenLabel: return "unseen";
    }
    return "unknown";
}

AttributorResult train_attributor(const DatasetManifest& manifest, const DatasetSplit& split,
                                  const EncoderBackend* backend,
                                  const TrainPipelineOptions& options) {
    TrainResult r = train_classifier("attributor", manifest, split, backend, options);
    return {std::move(r.bundle), std::move(r.history)};
}

AttributionResult attribute(const ClassifierBundle& model, const EncoderBackend* backend,
                            const Image& image, const std::optional<std::string>& prompt,
                            const EncoderBackend* captioner, std::optional<double> threshold) {
    check_attributor(model);
    check_threshold(threshold);
    BundlePrediction p = predict_record(model, backend, image, prompt, captioner);
    AttributionResult out;
    out.source = route(p.probabilities, threshold);
    out.confidence = p.confidence;
    out.threshold_used = threshold;
    out.provenance = p.provenance;
    return out;
}

EvaluationReport evaluate_attributor(const ClassifierBundle& model, const EncoderBackend* backend,
                                     const DatasetManifest& manifest,
                                     const std::vector<LabeledId>& records,
                                     const EvalOptions& options) {
    check_attributor(model);
    return evaluate_classifier(model, backend, manifest, records, options);
}

std::vector<std::pair<double, double>> sweep_accuracy(
    const std::vector<std::vector<double>>& probabilities, const std::vector<int>& labels5,
    const std::vector<double>& thresholds) {
    if (probabilities.size() != labels5.size())
        raise_data("ShapeMismatch", "probability rows and labels differ in count");
    for (const auto& row : probabilities)
        if (row.size() != 4)
            raise_data("SchemeMismatch", "sweep expects 4-class probability rows");
    for (int l : labels5)
        if (l < 0 || l > kUnseenLabel)
            raise_data("LabelOutOfRange", "five-class label " + std::to_string(l));

    std::vector<std::pair<double, double>> out;
    out.reserve(thresholds.size());
    for (double t : thresholds) {
        check_threshold(t);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < probabilities.size(); ++i)
            if (route(probabilities[i], t) == labels5[i]) ++correct;
        double acc = probabilities.empty()
                         ? 0.0
                         : static_cast<double>(correct) / static_cast<double>(probabilities.size());
        out.emplace_back(t, acc);
    }
    return out;
}

std::vector<std::pair<double, double>> sweep_thresholds(const ClassifierBundle& model,
                                                        const EncoderBackend* backend,
                                                        const DatasetManifest& manifest,
                                                        const std::vector<LabeledId>& fiveclass,
                                                        const std::vector<double>& thresholds,
                                                        const EvalOptions& options) {
    check_attributor(model);
    if (fiveclass.empty()) raise_data("EmptyDataset", "five-class evaluation set is empty");
    std::size_t per_class[5] = {0, 0, 0, 0, 0};
    std::vector<std::string> ids;
    std::vector<int> labels;
    ids.reserve(fiveclass.size());
    for (const auto& r : fiveclass) {
        if (r.label < 0 || r.label > kUnseenLabel)
            raise_data("SchemeMismatch", "sweep labels must lie in 0..4");
        ++per_class[r.label];
        ids.push_back(r.id);
        labels.push_back(r.label);
    }
    for (int c = 1; c <= kUnseenLabel; ++c)
        if (per_class[c] != per_class[0])
            raise_data("UnbalancedEvalSet", "five-class set is not balanced");

    auto probs = batch_probabilities(model, backend, manifest, ids, options);
    return sweep_accuracy(probs, labels, thresholds);
}

std::vector<double> default_threshold_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 10; ++i) grid.push_back(static_cast<double>(i) / 10.0);
    return grid;
}

}  // namespace synthscan
