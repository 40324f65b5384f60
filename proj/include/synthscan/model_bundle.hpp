#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "synthscan/classifier.hpp"
#include "synthscan/dataset.hpp"
#include "synthscan/encoders.hpp"
#include "synthscan/evaluation.hpp"

namespace synthscan {

enum class PipelineMode { image_only, hybrid };
std::string mode_name(PipelineMode mode);
PipelineMode mode_from_name(const std::string& name);

enum class PromptProvenance { natural, generated, none };
std::string provenance_name(PromptProvenance p);

// Optional disk cache for embeddings. Values round-trip through the cache's
// 9-significant-digit text format even on a miss, so runs with the cache
// enabled are reproducible whether entries were computed or read back.
class EmbeddingCache {
public:
    EmbeddingCache(std::filesystem::path file, std::string backend_id);

    std::vector<double> get(const std::string& id, EmbeddingKind kind,
                            const std::function<EmbeddingVector()>& compute);
    void flush();

private:
    std::filesystem::path file_;
    std::string backend_id_;
    std::map<std::pair<std::string, std::string>, EmbeddingVector> entries_;
    bool dirty_ = false;
};

// A trained classifier plus everything needed to run it: mode, core weights,
// the encoder contract it was trained against, and training provenance.
struct ClassifierBundle {
    int format_version = 1;
    std::string kind;  // "detector" | "attributor"
    PipelineMode mode = PipelineMode::hybrid;
    LabelScheme scheme = LabelScheme::detection;
    std::string core_type;  // "mlp" | "convnet"
    MlpParams mlp;
    ConvNetParams conv;
    std::string backend_id;  // hybrid only
    std::size_t backend_image_dim = 0;
    std::size_t backend_text_dim = 0;
    bool l2_normalize = false;
    std::string training_tag;
    std::string train_digest;

    bool is_conv() const { return core_type == "convnet"; }
    int n_classes() const { return is_conv() ? conv.config.n_classes : mlp.n_classes; }
};

void save_bundle(const ClassifierBundle& bundle, const std::filesystem::path& path);
ClassifierBundle load_bundle(const std::filesystem::path& path);
std::string bundle_digest(const ClassifierBundle& bundle);

struct TrainPipelineOptions {
    PipelineMode mode = PipelineMode::hybrid;
    TrainConfig train;
    int mlp_hidden = 256;
    ConvNetConfig conv;  // image_only only; n_classes is overwritten
    bool l2_normalize = false;
    std::string training_tag;
    EmbeddingCache* cache = nullptr;
};

struct TrainResult {
    ClassifierBundle bundle;
    TrainHistory history;
};

// Shared by the detector and attributor builders: assembles features for the
// split, trains the core with seeded SGD, and gates on a gradient check
// before returning (exhaustive when the net is small enough to probe, a
// seeded 200-parameter sample otherwise).
TrainResult train_classifier(const std::string& kind, const DatasetManifest& manifest,
                             const DatasetSplit& split, const EncoderBackend* backend,
                             const TrainPipelineOptions& options);

struct BundlePrediction {
    int label = 0;
    double confidence = 0.0;
    PromptProvenance provenance = PromptProvenance::none;
    std::vector<double> probabilities;
};

// Single-record inference. The natural prompt wins when both it and a
// captioner are available; a hybrid model with neither is an error.
BundlePrediction predict_record(const ClassifierBundle& bundle, const EncoderBackend* backend,
                                const Image& image, const std::optional<std::string>& prompt,
                                const EncoderBackend* captioner);

enum class PromptSource { natural, generated };

struct EvalOptions {
    PromptSource prompts = PromptSource::natural;
    const EncoderBackend* captioner = nullptr;  // required for PromptSource::generated
    EmbeddingCache* cache = nullptr;
};

// Balanced-set evaluation; records fan out across threads and the confusion
// counts merge exactly.
EvaluationReport evaluate_classifier(const ClassifierBundle& bundle, const EncoderBackend* backend,
                                     const DatasetManifest& manifest,
                                     const std::vector<LabeledId>& records,
                                     const EvalOptions& options = {});

// Per-record class probabilities, in input order.
std::vector<std::vector<double>> batch_probabilities(const ClassifierBundle& bundle,
                                                     const EncoderBackend* backend,
                                                     const DatasetManifest& manifest,
                                                     const std::vector<std::string>& ids,
                                                     const EvalOptions& options = {});

std::string dataset_tag_of(const DatasetManifest& manifest, const std::vector<LabeledId>& records);

}  // namespace synthscan
