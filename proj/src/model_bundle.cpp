#include "synthscan/model_bundle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <set>

#include <json.hpp>

#include "synthscan/errors.hpp"
#include "synthscan/image.hpp"
#include "synthscan/rng.hpp"

namespace synthscan {

std::string mode_name(PipelineMode mode) {
    return mode == PipelineMode::image_only ? "image_only" : "hybrid";
}

PipelineMode mode_from_name(const std::string& name) {
    if (name == "image_only" || name == "image-only") return PipelineMode::image_only;
    if (name == "hybrid") return PipelineMode::hybrid;
    raise_usage("BadMode", "unknown mode '" + name + "' (image-only|hybrid)");
}

std::string provenance_name(PromptProvenance p) {
    switch (p) {
        case PromptProvenance::natural: return "natural";
        case PromptProvenance::generated: return "generated";
        case PromptProvenance::none: return "none";
    }
    return "none";
}

namespace {

double quantize9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::strtod(buf, nullptr);
}

}  // namespace

EmbeddingCache::EmbeddingCache(std::filesystem::path file, std::string backend_id)
    : file_(std::move(file)), backend_id_(std::move(backend_id)) {
    if (std::filesystem::exists(file_)) {
        for (auto& e : read_embedding_cache(file_)) {
            if (e.vec.backend_id != backend_id_) continue;
            entries_[{e.id, embedding_kind_name(e.vec.kind)}] = std::move(e.vec);
        }
    }
}

std::vector<double> EmbeddingCache::get(const std::string& id, EmbeddingKind kind,
                                        const std::function<EmbeddingVector()>& compute) {
    auto key = std::make_pair(id, embedding_kind_name(kind));
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second.values;
    EmbeddingVector v = compute();
    for (double& x : v.values) x = quantize9(x);
    auto [ins, unused] = entries_.emplace(key, std::move(v));
    (void)unused;
    dirty_ = true;
    return ins->second.values;
}

void EmbeddingCache::flush() {
    if (!dirty_) return;
    std::vector<CachedEmbedding> out;
    out.reserve(entries_.size());
    for (const auto& [key, vec] : entries_) out.push_back({key.first, vec});
    write_embedding_cache(file_, out);
    dirty_ = false;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

nlohmann::json layer_to_json(const ConvLayer& l) {
    return {{"in_c", l.in_c}, {"out_c", l.out_c}, {"ksize", l.ksize},
            {"stride", l.stride}, {"pad", l.pad}, {"w", l.w}, {"b", l.b}};
}

ConvLayer layer_from_json(const nlohmann::json& j) {
    ConvLayer l;
    l.in_c = j.at("in_c").get<int>();
    l.out_c = j.at("out_c").get<int>();
    l.ksize = j.at("ksize").get<int>();
    l.stride = j.at("stride").get<int>();
    l.pad = j.at("pad").get<int>();
    l.w = j.at("w").get<std::vector<double>>();
    l.b = j.at("b").get<std::vector<double>>();
    return l;
}

nlohmann::json mlp_to_json(const MlpParams& p) {
    return {{"input_dim", p.input_dim}, {"hidden_dim", p.hidden_dim},
            {"n_classes", p.n_classes}, {"init_seed", p.init_seed},
            {"w1", p.w1},               {"b1", p.b1},
            {"w2", p.w2},               {"b2", p.b2}};
}

MlpParams mlp_from_json(const nlohmann::json& j) {
    MlpParams p;
    p.input_dim = j.at("input_dim").get<int>();
    p.hidden_dim = j.at("hidden_dim").get<int>();
    p.n_classes = j.at("n_classes").get<int>();
    p.init_seed = j.at("init_seed").get<std::uint64_t>();
    p.w1 = j.at("w1").get<std::vector<double>>();
    p.b1 = j.at("b1").get<std::vector<double>>();
    p.w2 = j.at("w2").get<std::vector<double>>();
    p.b2 = j.at("b2").get<std::vector<double>>();
    return p;
}

nlohmann::json conv_to_json(const ConvNetParams& p) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : p.blocks) {
        nlohmann::json jb = {{"conv1", layer_to_json(b.conv1)}, {"conv2", layer_to_json(b.conv2)}};
        jb["projection"] = b.projection ? layer_to_json(*b.projection) : nlohmann::json(nullptr);
        blocks.push_back(std::move(jb));
    }
    return {{"config",
             {{"input_resolution", p.config.input_resolution},
              {"stage_channels", p.config.stage_channels},
              {"blocks_per_stage", p.config.blocks_per_stage},
              {"n_classes", p.config.n_classes}}},
            {"init_seed", p.init_seed},
            {"stem", layer_to_json(p.stem)},
            {"blocks", blocks},
            {"head_w", p.head_w},
            {"head_b", p.head_b}};
}

ConvNetParams conv_from_json(const nlohmann::json& j) {
    ConvNetParams p;
    const auto& c = j.at("config");
    p.config.input_resolution = c.at("input_resolution").get<int>();
    p.config.stage_channels = c.at("stage_channels").get<std::vector<int>>();
    p.config.blocks_per_stage = c.at("blocks_per_stage").get<int>();
    p.config.n_classes = c.at("n_classes").get<int>();
    p.init_seed = j.at("init_seed").get<std::uint64_t>();
    p.stem = layer_from_json(j.at("stem"));
    for (const auto& jb : j.at("blocks")) {
        ResidualBlock b;
        b.conv1 = layer_from_json(jb.at("conv1"));
        b.conv2 = layer_from_json(jb.at("conv2"));
        if (!jb.at("projection").is_null()) b.projection = layer_from_json(jb.at("projection"));
        p.blocks.push_back(std::move(b));
    }
    p.head_w = j.at("head_w").get<std::vector<double>>();
    p.head_b = j.at("head_b").get<std::vector<double>>();
    return p;
}

nlohmann::json bundle_to_json(const ClassifierBundle& b) {
    nlohmann::json j;
    j["format_version"] = b.format_version;
    j["kind"] = b.kind;
    j["mode"] = mode_name(b.mode);
    j["label_scheme"] = scheme_name(b.scheme);
    j["core_type"] = b.core_type;
    j["l2_normalize"] = b.l2_normalize;
    j["training_tag"] = b.training_tag;
    j["train_config_digest"] = b.train_digest;
    if (b.mode == PipelineMode::hybrid) {
        j["backend"] = {{"id", b.backend_id},
                        {"image_dim", b.backend_image_dim},
                        {"text_dim", b.backend_text_dim}};
    }
    if (b.is_conv())
        j["convnet"] = conv_to_json(b.conv);
    else
        j["mlp"] = mlp_to_json(b.mlp);
    return j;
}

}  // namespace

void save_bundle(const ClassifierBundle& bundle, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) raise_data("UnwritablePath", "cannot write model " + path.string());
    out << bundle_to_json(bundle).dump() << "\n";
}

ClassifierBundle load_bundle(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise_data("MissingFile", "cannot open model " + path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) raise_data("MalformedRecord", "model file is not valid JSON");
    ClassifierBundle b;
    b.format_version = j.at("format_version").get<int>();
    if (b.format_version != 1)
        raise_data("UnsupportedVersion",
                   "model format_version " + std::to_string(b.format_version));
    b.kind = j.at("kind").get<std::string>();
    b.mode = mode_from_name(j.at("mode").get<std::string>());
    b.scheme = scheme_from_name(j.at("label_scheme").get<std::string>());
    b.core_type = j.at("core_type").get<std::string>();
    b.l2_normalize = j.at("l2_normalize").get<bool>();
    b.training_tag = j.value("training_tag", std::string{});
    b.train_digest = j.value("train_config_digest", std::string{});
    if (j.contains("backend")) {
        b.backend_id = j["backend"].at("id").get<std::string>();
        b.backend_image_dim = j["backend"].at("image_dim").get<std::size_t>();
        b.backend_text_dim = j["backend"].at("text_dim").get<std::size_t>();
    }
    if (b.is_conv())
        b.conv = conv_from_json(j.at("convnet"));
    else
        b.mlp = mlp_from_json(j.at("mlp"));
    return b;
}

std::string bundle_digest(const ClassifierBundle& bundle) {
    char out[24];
    std::snprintf(out, sizeof(out), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bundle_to_json(bundle).dump())));
    return out;
}

// ---------------------------------------------------------------------------
// feature assembly

namespace {

struct FeatureSet {
    std::vector<double> data;
    std::size_t stride = 0;
    std::vector<int> labels;
    std::size_t size() const { return labels.size(); }
};

std::vector<double> assemble_hybrid(const EncoderBackend* backend, const Image& image,
                                    const std::string& text, bool l2, EmbeddingCache* cache,
                                    const std::string& cache_id, bool cache_text) {
    std::vector<double> img_vals, txt_vals;
    if (cache) {
        img_vals = cache->get(cache_id, EmbeddingKind::image,
                              [&] { return backend->encode_image(image); });
        if (cache_text)
            txt_vals = cache->get(cache_id, EmbeddingKind::text,
                                  [&] { return backend->encode_text(text); });
        else
            txt_vals = backend->encode_text(text).values;
    } else {
        img_vals = backend->encode_image(image).values;
        txt_vals = backend->encode_text(text).values;
    }
    if (l2) {
        l2_normalize(img_vals);
        l2_normalize(txt_vals);
    }
    EmbeddingVector img{std::move(img_vals), EmbeddingKind::image, backend->backend_id()};
    EmbeddingVector txt{std::move(txt_vals), EmbeddingKind::text, backend->backend_id()};
    return concat_embeddings(img, txt).values;
}

void check_backend(const ClassifierBundle& bundle, const EncoderBackend* backend) {
    if (!backend) raise_usage("MissingBackend", "hybrid model requires an encoder backend");
    if (backend->backend_id() != bundle.backend_id)
        raise_backend("BackendMismatch", "model was trained with backend '" + bundle.backend_id +
                                             "', got '" + backend->backend_id() + "'");
    if (backend->image_dim() != bundle.backend_image_dim ||
        backend->text_dim() != bundle.backend_text_dim)
        raise_backend("BackendMismatch", "backend dims changed since training");
}

std::string prompt_for_record(const PromptImagePair& rec, PromptSource source,
                              const EncoderBackend* captioner, const Image& image) {
    if (source == PromptSource::natural) {
        if (rec.prompt.empty())
            raise_data("PromptMissing", "record '" + rec.id + "' has an empty prompt");
        return rec.prompt;
    }
    if (!captioner) raise_usage("MissingCaptioner", "generated prompts need a caption backend");
    if (!captioner->can_caption())
        raise_backend("CaptionUnsupported",
                      "backend '" + captioner->backend_id() + "' cannot caption");
    return captioner->generate_caption(image);
}

FeatureSet build_hybrid_features(const DatasetManifest& manifest,
                                 const std::vector<LabeledId>& records,
                                 const EncoderBackend* backend, bool l2, PromptSource source,
                                 const EncoderBackend* captioner, EmbeddingCache* cache) {
    FeatureSet fs;
    fs.stride = backend->image_dim() + backend->text_dim();
    fs.data.resize(records.size() * fs.stride);
    fs.labels.resize(records.size());

    // The cache is not thread safe; with it enabled the build runs serially.
    std::vector<std::exception_ptr> errs(records.size());
    auto one = [&](std::size_t i) {
        try {
            const PromptImagePair& rec = manifest.at(records[i].id);
            Image image = load_image(rec.resolved_path);
            std::string text = prompt_for_record(rec, source, captioner, image);
            bool cache_text = source == PromptSource::natural;
            std::vector<double> row =
                assemble_hybrid(backend, image, text, l2, cache, rec.id, cache_text);
            std::copy(row.begin(), row.end(), fs.data.begin() + i * fs.stride);
            fs.labels[i] = records[i].label;
        } catch (...) {
            errs[i] = std::current_exception();
        }
    };
    if (cache) {
        for (std::size_t i = 0; i < records.size(); ++i) one(i);
    } else {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(records.size()); ++i)
            one(static_cast<std::size_t>(i));
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    return fs;
}

FeatureSet build_raster_features(const DatasetManifest& manifest,
                                 const std::vector<LabeledId>& records, int resolution) {
    FeatureSet fs;
    fs.stride = 3ull * resolution * resolution;
    fs.data.resize(records.size() * fs.stride);
    fs.labels.resize(records.size());
    std::vector<std::exception_ptr> errs(records.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(records.size()); ++i) {
        try {
            const PromptImagePair& rec = manifest.at(records[static_cast<std::size_t>(i)].id);
            Image image = resize_bilinear(load_image(rec.resolved_path), resolution, resolution);
            std::vector<double> row = to_chw_float(image);
            std::copy(row.begin(), row.end(),
                      fs.data.begin() + static_cast<std::size_t>(i) * fs.stride);
            fs.labels[static_cast<std::size_t>(i)] = records[static_cast<std::size_t>(i)].label;
        } catch (...) {
            errs[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    return fs;
}

std::unique_ptr<BatchModel> instantiate(const ClassifierBundle& bundle) {
    if (bundle.is_conv()) return std::make_unique<ConvNetModel>(bundle.conv);
    return std::make_unique<MlpModel>(bundle.mlp);
}

}  // namespace

// ---------------------------------------------------------------------------
// training

TrainResult train_classifier(const std::string& kind, const DatasetManifest& manifest,
                             const DatasetSplit& split, const EncoderBackend* backend,
                             const TrainPipelineOptions& options) {
    LabelScheme want = kind == "detector" ? LabelScheme::detection : LabelScheme::attribution;
    if (split.scheme != want)
        raise_data("SchemeMismatch", kind + " training requires the " + scheme_name(want) +
                                         " label scheme");
    if (split.train.empty()) raise_data("EmptyDataset", "training split is empty");
    const int classes = scheme_classes(want);

    ClassifierBundle bundle;
    bundle.kind = kind;
    bundle.mode = options.mode;
    bundle.scheme = want;
    bundle.l2_normalize = options.l2_normalize;
    bundle.training_tag = options.training_tag;
    bundle.train_digest = train_config_digest(options.train);

    FeatureSet train_set, holdout;
    std::unique_ptr<BatchModel> model;
    if (options.mode == PipelineMode::hybrid) {
        if (!backend) raise_usage("MissingBackend", "hybrid mode requires --backend");
        bundle.core_type = "mlp";
        bundle.backend_id = backend->backend_id();
        bundle.backend_image_dim = backend->image_dim();
        bundle.backend_text_dim = backend->text_dim();
        train_set = build_hybrid_features(manifest, split.train, backend, options.l2_normalize,
                                          PromptSource::natural, nullptr, options.cache);
        if (!split.test.empty())
            holdout = build_hybrid_features(manifest, split.test, backend, options.l2_normalize,
                                            PromptSource::natural, nullptr, options.cache);
        model = std::make_unique<MlpModel>(init_mlp(static_cast<int>(train_set.stride),
                                                    options.mlp_hidden, classes,
                                                    options.train.seed));
    } else {
        bundle.core_type = "convnet";
        ConvNetConfig cfg = options.conv;
        cfg.n_classes = classes;
        train_set = build_raster_features(manifest, split.train, cfg.input_resolution);
        if (!split.test.empty())
            holdout = build_raster_features(manifest, split.test, cfg.input_resolution);
        model = std::make_unique<ConvNetModel>(init_convnet(cfg, options.train.seed));
    }

    TrainHistory history = train_model(
        *model, train_set.data.data(), train_set.labels.data(), train_set.size(),
        holdout.size() ? holdout.data.data() : nullptr,
        holdout.size() ? holdout.labels.data() : nullptr, holdout.size(), options.train);

    // Gradient gate before the model may be persisted. The probe batch gets a
    // seeded jitter so no pre-activation sits exactly on the relu kink.
    {
        int probe_n = static_cast<int>(std::min<std::size_t>(4, train_set.size()));
        std::vector<double> probe(train_set.data.begin(),
                                  train_set.data.begin() + probe_n * train_set.stride);
        std::vector<int> probe_y(train_set.labels.begin(), train_set.labels.begin() + probe_n);
        Rng jitter(mix_seed(options.train.seed, 0x6a697474ULL));
        for (double& v : probe) v += jitter.uniform(-1e-3, 1e-3);

        std::size_t total = 0;
        for (const auto& view : model->params()) total += view.size;
        double err = total <= 20000
                         ? gradient_check(*model, probe.data(), probe_y.data(), probe_n, 1e-5)
                         : gradient_check_sampled(*model, probe.data(), probe_y.data(), probe_n,
                                                  1e-5, 200, options.train.seed);
        double limit = bundle.core_type == "mlp" ? 1e-4 : 1e-3;
        if (!(err < limit))
            raise_internal("GradientCheckFailed",
                           "max relative error " + std::to_string(err) + " exceeds " +
                               std::to_string(limit));
    }

    if (bundle.is_conv())
        bundle.conv = static_cast<ConvNetModel*>(model.get())->take();
    else
        bundle.mlp = static_cast<MlpModel*>(model.get())->take();
    return {std::move(bundle), std::move(history)};
}

// ---------------------------------------------------------------------------
// inference

BundlePrediction predict_record(const ClassifierBundle& bundle, const EncoderBackend* backend,
                                const Image& image, const std::optional<std::string>& prompt,
                                const EncoderBackend* captioner) {
    BundlePrediction out;
    std::vector<double> logits;
    if (bundle.mode == PipelineMode::image_only) {
        out.provenance = PromptProvenance::none;
        Image r = resize_bilinear(image, bundle.conv.config.input_resolution,
                                  bundle.conv.config.input_resolution);
        logits = convnet_forward(bundle.conv, to_chw_float(r));
    } else {
        check_backend(bundle, backend);
        std::string text;
        if (prompt && !prompt->empty()) {
            text = *prompt;
            out.provenance = PromptProvenance::natural;
        } else {
            if (!captioner || !captioner->can_caption())
                raise_backend("CaptionUnsupported",
                              "hybrid model needs a prompt or a caption-capable backend");
            text = captioner->generate_caption(image);
            out.provenance = PromptProvenance::generated;
        }
        std::vector<double> feat =
            assemble_hybrid(backend, image, text, bundle.l2_normalize, nullptr, "", false);
        logits = mlp_forward(bundle.mlp, feat);
    }
    out.probabilities = softmax(logits);
    Prediction p = predict_from_logits(logits);
    out.label = p.label;
    out.confidence = p.confidence;
    return out;
}

namespace {

// Chunked batch inference over manifest records; fills softmax rows.
std::vector<std::vector<double>> probabilities_for(const ClassifierBundle& bundle,
                                                   const EncoderBackend* backend,
                                                   const DatasetManifest& manifest,
                                                   const std::vector<LabeledId>& records,
                                                   const EvalOptions& options) {
    if (bundle.mode == PipelineMode::hybrid) check_backend(bundle, backend);
    if (options.prompts == PromptSource::generated && bundle.mode == PipelineMode::hybrid) {
        if (!options.captioner)
            raise_usage("MissingCaptioner", "generated prompts need a caption backend");
        if (!options.captioner->can_caption())
            raise_backend("CaptionUnsupported",
                          "backend '" + options.captioner->backend_id() + "' cannot caption");
    }

    std::unique_ptr<BatchModel> model = instantiate(bundle);
    const int classes = model->n_classes();
    std::vector<std::vector<double>> probs(records.size());

    constexpr std::size_t kChunk = 256;
    std::vector<double> logits;
    for (std::size_t off = 0; off < records.size(); off += kChunk) {
        std::size_t take = std::min(kChunk, records.size() - off);
        std::vector<LabeledId> chunk(records.begin() + off, records.begin() + off + take);
        FeatureSet fs =
            bundle.mode == PipelineMode::hybrid
                ? build_hybrid_features(manifest, chunk, backend, bundle.l2_normalize,
                                        options.prompts, options.captioner, options.cache)
                : build_raster_features(manifest, chunk, bundle.conv.config.input_resolution);
        logits.resize(take * static_cast<std::size_t>(classes));
        model->forward(fs.data.data(), static_cast<int>(take), logits.data());
        for (std::size_t s = 0; s < take; ++s) {
            std::vector<double> row(logits.begin() + s * classes,
                                    logits.begin() + (s + 1) * classes);
            probs[off + s] = softmax(row);
        }
    }
    return probs;
}

}  // namespace

EvaluationReport evaluate_classifier(const ClassifierBundle& bundle, const EncoderBackend* backend,
                                     const DatasetManifest& manifest,
                                     const std::vector<LabeledId>& records,
                                     const EvalOptions& options) {
    if (records.empty()) raise_data("EmptyDataset", "evaluation set is empty");
    const int classes = bundle.n_classes();
    std::vector<std::size_t> per_class(static_cast<std::size_t>(classes), 0);
    for (const auto& r : records) {
        if (r.label < 0 || r.label >= classes)
            raise_data("SchemeMismatch", "label " + std::to_string(r.label) +
                                             " outside the model's " + scheme_name(bundle.scheme) +
                                             " scheme");
        ++per_class[static_cast<std::size_t>(r.label)];
    }
    for (std::size_t c = 1; c < per_class.size(); ++c)
        if (per_class[c] != per_class[0])
            raise_data("UnbalancedEvalSet", "per-class counts differ (" +
                                                std::to_string(per_class[0]) + " vs " +
                                                std::to_string(per_class[c]) + ")");

    auto probs = probabilities_for(bundle, backend, manifest, records, options);
    std::vector<int> truth(records.size()), pred(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        truth[i] = records[i].label;
        int best = 0;
        for (int c = 1; c < classes; ++c)
            if (probs[i][static_cast<std::size_t>(c)] > probs[i][static_cast<std::size_t>(best)])
                best = c;
        pred[i] = best;
    }
    return report_from_predictions(bundle.scheme, classes, truth, pred,
                                   dataset_tag_of(manifest, records), bundle_digest(bundle));
}

std::vector<std::vector<double>> batch_probabilities(const ClassifierBundle& bundle,
                                                     const EncoderBackend* backend,
                                                     const DatasetManifest& manifest,
                                                     const std::vector<std::string>& ids,
                                                     const EvalOptions& options) {
    std::vector<LabeledId> records;
    records.reserve(ids.size());
    for (const auto& id : ids) records.push_back({id, 0});
    return probabilities_for(bundle, backend, manifest, records, options);
}

std::string dataset_tag_of(const DatasetManifest& manifest, const std::vector<LabeledId>& records) {
    std::set<std::string> tags;
    for (const auto& r : records) {
        const PromptImagePair* rec = manifest.find(r.id);
        if (rec && !rec->dataset_tag.empty()) tags.insert(rec->dataset_tag);
    }
    std::string out;
    for (const auto& t : tags) {
        if (!out.empty()) out += "+";
        out += t;
    }
    return out;
}

}  // namespace synthscan
