#include "synthscan/experiments.hpp"

#include <algorithm>
#include <set>

#include "synthscan/errors.hpp"
#include "synthscan/rng.hpp"

namespace synthscan {

std::vector<CrossRow> cross_matrix(const ClassifierBundle& model, const EncoderBackend* backend,
                                   const std::vector<const DatasetManifest*>& manifests,
                                   const std::vector<Origin>& eval_origins,
                                   std::size_t n_per_class, std::uint64_t seed,
                                   const EvalOptions& options) {
    if (manifests.empty()) raise_data("EmptyDataset", "no manifests to evaluate on");
    std::vector<CrossRow> rows;
    for (const DatasetManifest* manifest : manifests) {
        if (model.scheme == LabelScheme::detection) {
            if (eval_origins.empty()) raise_usage("BadOrigin", "detection cross-eval needs origins");
            for (const Origin& origin : eval_origins) {
                DatasetSplit split = build_detection_split(*manifest, origin, n_per_class, seed, 1.0);
                auto records = split.all();
                EvaluationReport rep = evaluate_classifier(model, backend, *manifest, records, options);
                rows.push_back({model.training_tag, origin.str() + "+" + rep.dataset_tag,
                                rep.accuracy, rep.n_total});
            }
        } else {
            DatasetSplit split = build_attribution_split(*manifest, n_per_class, seed, 1.0);
            auto records = split.all();
            EvaluationReport rep = evaluate_classifier(model, backend, *manifest, records, options);
            rows.push_back(
                {model.training_tag, "4class+" + rep.dataset_tag, rep.accuracy, rep.n_total});
        }
    }
    return rows;
}

std::vector<SizeRow> size_ablation(const DatasetManifest& manifest,
                                   const std::vector<std::size_t>& sizes,
                                   const EncoderBackend* backend,
                                   const SizeAblationOptions& options, std::uint64_t seed) {
    if (sizes.empty()) raise_usage("BadConfig", "no training sizes given");
    for (std::size_t s : sizes) {
        if (s == 0) raise_data("EmptyDataset", "training size 0 is not trainable");
        if (s % 2 != 0) raise_data("BadSize", "training sizes must be even (half real, half fake)");
    }

    // Fixed evaluation set first; training pools never touch its records.
    DatasetSplit eval_split = build_detection_split(manifest, options.fake_origin,
                                                    options.n_eval_per_class,
                                                    mix_seed(seed, 0x6576616cULL), 1.0);
    std::vector<LabeledId> eval_records = eval_split.all();
    std::set<std::string> reserved;
    for (const auto& r : eval_records) reserved.insert(r.id);

    DatasetManifest pool;
    pool.source_uri = manifest.source_uri;
    for (const auto& rec : manifest.records)
        if (!reserved.count(rec.id)) pool.records.push_back(rec);
    pool.rebuild_index();

    std::vector<SizeRow> rows;
    for (std::size_t size : sizes) {
        DatasetSplit split =
            build_detection_split(pool, options.fake_origin, size / 2, seed, 1.0);
        TrainPipelineOptions popts = options.pipeline;
        popts.training_tag = options.fake_origin.str() + "+n" + std::to_string(size);
        DetectorResult trained = train_detector(pool, split, backend, popts);
        EvaluationReport rep =
            evaluate_classifier(trained.model, backend, manifest, eval_records, {});
        rows.push_back({size, rep.accuracy});
    }
    return rows;
}

}  // namespace synthscan
