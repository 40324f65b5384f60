#pragma once

#include "synthscan/attribution.hpp"
#include "synthscan/detection.hpp"

namespace synthscan {

// Cross-model / cross-dataset evaluation rows.
struct CrossRow {
    std::string train_source;
    std::string eval_source;
    double accuracy = 0.0;
    std::size_t n_total = 0;
};

// Detector models get one balanced fake-vs-real set per (manifest x origin);
// attributor models one balanced 4-class set per manifest. Every eval set is
// built through the dataset module's seeded samplers.
std::vector<CrossRow> cross_matrix(const ClassifierBundle& model, const EncoderBackend* backend,
                                   const std::vector<const DatasetManifest*>& manifests,
                                   const std::vector<Origin>& eval_origins,
                                   std::size_t n_per_class, std::uint64_t seed,
                                   const EvalOptions& options = {});

struct SizeRow {
    std::size_t size = 0;  // total training images (half real, half fake)
    double accuracy = 0.0;
};

struct SizeAblationOptions {
    TrainPipelineOptions pipeline;
    Origin fake_origin = Origin::sd();
    std::size_t n_eval_per_class = 32;
};

// One model per size, same seed throughout, all scored on a fixed evaluation
// set drawn first and kept disjoint from every training draw.
std::vector<SizeRow> size_ablation(const DatasetManifest& manifest,
                                   const std::vector<std::size_t>& sizes,
                                   const EncoderBackend* backend,
                                   const SizeAblationOptions& options, std::uint64_t seed);

}  // namespace synthscan
