// synthscan: one CLI over the detection, attribution, fingerprint and prompt
// analysis pipelines. Every run is deterministic given its flags and --seed,
// and writes a runconfig echo next to its outputs.
//
// Exit codes: 0 success, 2 usage, 3 data error, 4 backend error, 5 internal.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "synthscan/attribution.hpp"
#include "synthscan/detection.hpp"
#include "synthscan/errors.hpp"
#include "synthscan/experiments.hpp"
#include "synthscan/fingerprint.hpp"
#include "synthscan/plot.hpp"
#include "synthscan/prompt_analysis.hpp"
#include "synthscan/rng.hpp"
#include "synthscan/toycorpus.hpp"

using namespace synthscan;

namespace {

std::filesystem::path sibling(const std::filesystem::path& anchor, const std::string& suffix) {
    return std::filesystem::path(anchor.string() + suffix);
}

void write_runconfig(const CLI::App* sub, const std::filesystem::path& anchor) {
    nlohmann::json flags = nlohmann::json::object();
    for (const CLI::Option* opt : sub->get_options()) {
        if (opt->get_name() == "--help" || opt->count() == 0) continue;
        flags[opt->get_name()] = opt->results();
    }
    nlohmann::json j;
    j["subcommand"] = sub->get_name();
    j["flags"] = flags;
    std::ofstream out(sibling(anchor, ".runconfig.json"));
    if (!out) raise_data("UnwritablePath", "cannot write runconfig next to " + anchor.string());
    out << j.dump(2) << "\n";
}

DatasetManifest load_checked(const std::filesystem::path& path, bool check_paths = true) {
    ManifestLoadResult res = load_manifest(path, {check_paths});
    for (const auto& rej : res.rejected)
        std::cerr << "warning: " << path.string() << ":" << rej.line << ": " << rej.reason << "\n";
    if (res.manifest.records.empty())
        raise_data("EmptyDataset", "manifest " + path.string() + " has no usable records");
    return std::move(res.manifest);
}

void write_history(const TrainHistory& h, const std::filesystem::path& path) {
    nlohmann::json j;
    j["train_loss"] = h.train_loss;
    j["train_acc"] = h.train_acc;
    j["holdout_loss"] = h.holdout_loss;  // NaN serializes as null
    j["holdout_acc"] = h.holdout_acc;
    std::ofstream out(path);
    if (!out) raise_data("UnwritablePath", "cannot write " + path.string());
    out << j.dump(2) << "\n";
}

std::filesystem::path cache_dir_resolved(const std::string& flag_value) {
    std::filesystem::path p(flag_value);
    if (p.is_absolute()) return p;
    if (const char* env = std::getenv("SYNTHSCAN_CACHE_DIR")) return std::filesystem::path(env) / p;
    return p;
}

struct TrainFlags {
    std::string manifest, mode, out, backend_id, arch = "small", cache_file;
    std::string fake_origin;
    std::size_t n_per_class = 0;
    std::uint64_t seed = 0;
    int epochs = 30, batch_size = 32, hidden = 256, jobs = 0;
    double lr = 0.01, momentum = 0.9, train_fraction = 0.8;
    bool l2_normalize = false;
};

void add_train_flags(CLI::App* sub, TrainFlags& f, bool with_origin) {
    sub->add_option("--manifest", f.manifest, "prompt-image manifest (JSONL)")->required();
    sub->add_option("--mode", f.mode, "image-only | hybrid")->required();
    if (with_origin)
        sub->add_option("--fake-origin", f.fake_origin, "origin of the fake class")->required();
    sub->add_option("--n-per-class", f.n_per_class, "records sampled per class")->required();
    sub->add_option("--seed", f.seed, "seed for every random draw in the run")->required();
    sub->add_option("--out", f.out, "model file to write")->required();
    sub->add_option("--backend", f.backend_id, "encoder backend id (hybrid)");
    sub->add_option("--epochs", f.epochs);
    sub->add_option("--batch-size", f.batch_size);
    sub->add_option("--lr", f.lr);
    sub->add_option("--momentum", f.momentum);
    sub->add_option("--hidden", f.hidden, "MLP hidden width (hybrid)");
    sub->add_option("--arch", f.arch, "conv preset: tiny | small | resnet18 (image-only)");
    sub->add_option("--train-fraction", f.train_fraction, "per-class share going to train");
    sub->add_option("--embedding-cache", f.cache_file, "embedding cache file (hybrid)");
    sub->add_flag("--l2-normalize", f.l2_normalize, "L2-normalize embeddings before concat");
    sub->add_option("--jobs", f.jobs, "cap worker threads");
}

TrainPipelineOptions pipeline_from_flags(const TrainFlags& f, int classes) {
    TrainPipelineOptions opt;
    opt.mode = mode_from_name(f.mode);
    opt.train = {f.epochs, f.batch_size, f.lr, f.momentum, f.seed};
    opt.mlp_hidden = f.hidden;
    opt.conv = convnet_preset(f.arch, classes);
    opt.l2_normalize = f.l2_normalize;
    return opt;
}

void run_training(const CLI::App* sub, const TrainFlags& f, bool detector) {
    if (f.jobs > 0) kernels::set_max_threads(f.jobs);
    DatasetManifest manifest = load_checked(f.manifest);
    DatasetSplit split =
        detector ? build_detection_split(manifest, Origin::parse(f.fake_origin), f.n_per_class,
                                         f.seed, f.train_fraction)
                 : build_attribution_split(manifest, f.n_per_class, f.seed, f.train_fraction);

    TrainPipelineOptions opt = pipeline_from_flags(f, scheme_classes(split.scheme));
    std::unique_ptr<EncoderBackend> backend;
    if (!f.backend_id.empty()) backend = make_backend(f.backend_id);

    std::unique_ptr<EmbeddingCache> cache;
    if (!f.cache_file.empty()) {
        if (!backend) raise_usage("MissingBackend", "--embedding-cache needs --backend");
        cache = std::make_unique<EmbeddingCache>(cache_dir_resolved(f.cache_file),
                                                 backend->backend_id());
        opt.cache = cache.get();
    }
    std::string tag = dataset_tag_of(manifest, split.all());
    opt.training_tag =
        (detector ? Origin::parse(f.fake_origin).str() : std::string("4class")) + "+" + tag;

    TrainResult result = train_classifier(detector ? "detector" : "attributor", manifest, split,
                                          backend.get(), opt);
    if (cache) cache->flush();

    save_bundle(result.bundle, f.out);
    std::filesystem::path history_path(f.out);
    history_path.replace_extension(".history");
    write_history(result.history, history_path);
    write_runconfig(sub, f.out);

    double holdout = result.history.holdout_acc.empty() ? 0.0 : result.history.holdout_acc.back();
    std::printf("trained %s mode=%s records=%zu holdout_acc=%.4f -> %s\n",
                detector ? "detector" : "attributor", f.mode.c_str(),
                split.train.size() + split.test.size(), holdout, f.out.c_str());
}

// Shared inference flag bag for detect / attribute / eval / analyses.
struct InferFlags {
    std::string model, backend_id, captioner_id, image, manifest, out, prompts = "natural";
    std::string prompt;
    int jobs = 0;
};

struct LoadedModel {
    ClassifierBundle bundle;
    std::unique_ptr<EncoderBackend> backend;    // null for image-only
    std::unique_ptr<EncoderBackend> captioner;  // null unless requested
};

LoadedModel open_model(const InferFlags& f) {
    LoadedModel m;
    m.bundle = load_bundle(f.model);
    if (m.bundle.mode == PipelineMode::hybrid)
        m.backend = make_backend(f.backend_id.empty() ? m.bundle.backend_id : f.backend_id);
    else if (!f.backend_id.empty())
        m.backend = make_backend(f.backend_id);
    if (!f.captioner_id.empty()) m.captioner = make_backend(f.captioner_id);
    return m;
}

const EncoderBackend* captioner_or_backend(const LoadedModel& m) {
    if (m.captioner) return m.captioner.get();
    if (m.backend && m.backend->can_caption()) return m.backend.get();
    return nullptr;
}

EvalOptions eval_options(const InferFlags& f, const LoadedModel& m) {
    EvalOptions opt;
    if (f.prompts == "generated") {
        opt.prompts = PromptSource::generated;
        opt.captioner = captioner_or_backend(m);
    } else if (f.prompts != "natural") {
        raise_usage("BadConfig", "--prompts must be natural or generated");
    }
    return opt;
}

std::optional<std::string> natural_prompt(const PromptImagePair& rec, const EvalOptions& opt) {
    if (opt.prompts == PromptSource::generated) return std::nullopt;
    if (rec.prompt.empty()) return std::nullopt;
    return rec.prompt;
}

// Fake records of one origin, seeded order; n == 0 keeps all of them.
std::vector<const PromptImagePair*> sampled_fakes(const DatasetManifest& manifest,
                                                  const Origin& origin, std::size_t n,
                                                  std::uint64_t seed) {
    auto it = manifest.counts_by_origin.find(origin.str());
    std::size_t available = it == manifest.counts_by_origin.end() ? 0 : it->second;
    std::size_t want = n == 0 ? available : n;
    std::vector<std::string> ids = sample_origin_ids(manifest, origin, want, seed);
    std::vector<const PromptImagePair*> records;
    records.reserve(ids.size());
    for (const auto& id : ids) records.push_back(&manifest.at(id));
    return records;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthscan: detect generated images, attribute them to source models, "
                 "and analyze which prompts yield convincing fakes"};
    app.require_subcommand(1);

    // ---- gen-corpus -------------------------------------------------------
    auto* gen = app.add_subcommand("gen-corpus", "write a deterministic synthetic demo corpus");
    struct {
        std::string out, dataset_tag = "toy";
        std::vector<std::string> origins = {"real", "SD", "LD", "GLIDE"};
        std::size_t n = 50;
        std::uint64_t seed = 0;
        int resolution = 24;
        double marker_prob = 1.0;
        bool no_markers = false;
    } gf;
    gen->add_option("--out", gf.out, "corpus directory")->required();
    gen->add_option("--seed", gf.seed)->required();
    gen->add_option("--n-per-origin", gf.n);
    gen->add_option("--resolution", gf.resolution);
    gen->add_option("--origins", gf.origins)->delimiter(',');
    gen->add_option("--marker-prob", gf.marker_prob);
    gen->add_option("--dataset-tag", gf.dataset_tag);
    gen->add_flag("--no-markers", gf.no_markers, "omit origin marker tokens from fake prompts");
    gen->callback([&] {
        ToyCorpusOptions opt;
        opt.dir = gf.out;
        opt.n_per_origin = gf.n;
        opt.seed = gf.seed;
        opt.resolution = gf.resolution;
        opt.origins.clear();
        for (const auto& o : gf.origins) opt.origins.push_back(Origin::parse(o));
        opt.marker_prob = gf.marker_prob;
        opt.dataset_tag = gf.dataset_tag;
        if (gf.no_markers)
            for (const auto& o : opt.origins) opt.marker_overrides[o.str()] = "";
        std::filesystem::path manifest = generate_toy_corpus(opt);
        write_runconfig(gen, manifest);
        std::printf("wrote %s\n", manifest.string().c_str());
    });

    // ---- train-detector / train-attributor --------------------------------
    auto* td = app.add_subcommand("train-detector", "train a fake/real detector");
    static TrainFlags tdf;
    add_train_flags(td, tdf, true);
    td->callback([&] { run_training(td, tdf, true); });

    auto* ta = app.add_subcommand("train-attributor", "train a 4-class source attributor");
    static TrainFlags taf;
    add_train_flags(ta, taf, false);
    ta->callback([&] { run_training(ta, taf, false); });

    // ---- detect ------------------------------------------------------------
    auto* det = app.add_subcommand("detect", "classify images as fake or real");
    static InferFlags df;
    det->add_option("--model", df.model)->required();
    det->add_option("--backend", df.backend_id);
    det->add_option("--captioner", df.captioner_id);
    det->add_option("--image", df.image, "single image");
    det->add_option("--manifest", df.manifest, "batch over a manifest");
    det->add_option("--prompt", df.prompt, "natural prompt for --image");
    det->add_option("--prompts", df.prompts, "batch prompt source: natural | generated");
    det->add_option("--out", df.out, "batch output (JSONL)");
    det->add_option("--jobs", df.jobs);
    det->callback([&] {
        if (df.jobs > 0) kernels::set_max_threads(df.jobs);
        if (df.image.empty() == df.manifest.empty())
            raise_usage("BadConfig", "give exactly one of --image or --manifest");
        LoadedModel m = open_model(df);
        if (!df.image.empty()) {
            Image img = load_image(df.image);
            std::optional<std::string> prompt;
            if (det->count("--prompt")) prompt = df.prompt;
            Verdict v = detect(m.bundle, m.backend.get(), img, prompt, captioner_or_backend(m));
            std::printf("label=%s confidence=%.9g provenance=%s\n", v.is_real() ? "real" : "fake",
                        v.confidence, provenance_name(v.provenance).c_str());
            return;
        }
        if (df.out.empty()) raise_usage("BadConfig", "batch mode needs --out");
        DatasetManifest manifest = load_checked(df.manifest);
        EvalOptions opt = eval_options(df, m);
        std::ofstream out(df.out);
        if (!out) raise_data("UnwritablePath", "cannot write " + df.out);
        for (const auto& rec : manifest.records) {
            Image img = load_image(rec.resolved_path);
            Verdict v = detect(m.bundle, m.backend.get(), img, natural_prompt(rec, opt),
                               opt.captioner ? opt.captioner : captioner_or_backend(m));
            nlohmann::json line = {{"id", rec.id},
                                   {"label", v.is_real() ? "real" : "fake"},
                                   {"confidence", v.confidence},
                                   {"prompt_provenance", provenance_name(v.provenance)}};
            out << line.dump() << "\n";
        }
        write_runconfig(det, df.out);
    });

    // ---- attribute ----------------------------------------------------------
    auto* att = app.add_subcommand("attribute", "attribute images to source models");
    static InferFlags af;
    struct {
        double threshold = -1.0;
        bool sweep = false;
        std::vector<double> thresholds;
        std::size_t n_per_class = 0;
        std::uint64_t seed = 0;
    } ax;
    att->add_option("--model", af.model)->required();
    att->add_option("--backend", af.backend_id);
    att->add_option("--captioner", af.captioner_id);
    att->add_option("--image", af.image);
    att->add_option("--manifest", af.manifest);
    att->add_option("--prompt", af.prompt);
    att->add_option("--prompts", af.prompts);
    att->add_option("--out", af.out);
    att->add_option("--threshold", ax.threshold, "route below-threshold samples to unseen");
    att->add_flag("--sweep", ax.sweep, "evaluate the 11-point threshold grid on a 5-class set");
    att->add_option("--thresholds", ax.thresholds, "custom sweep grid")->delimiter(',');
    att->add_option("--n-per-class", ax.n_per_class, "5-class sweep samples per class");
    att->add_option("--seed", ax.seed, "seed for the sweep evaluation set");
    att->add_option("--jobs", af.jobs);
    att->callback([&] {
        if (af.jobs > 0) kernels::set_max_threads(af.jobs);
        LoadedModel m = open_model(af);
        std::optional<double> threshold;
        if (att->count("--threshold")) threshold = ax.threshold;

        if (ax.sweep) {
            if (af.manifest.empty() || af.out.empty() || !att->count("--n-per-class") ||
                !att->count("--seed"))
                raise_usage("BadConfig", "--sweep needs --manifest, --out, --n-per-class, --seed");
            DatasetManifest manifest = load_checked(af.manifest);
            auto fiveclass = build_fiveclass_eval(manifest, ax.n_per_class, ax.seed);
            std::vector<double> grid =
                ax.thresholds.empty() ? default_threshold_grid() : ax.thresholds;
            auto rows = sweep_thresholds(m.bundle, m.backend.get(), manifest, fiveclass, grid,
                                         eval_options(af, m));
            std::ofstream out(af.out);
            if (!out) raise_data("UnwritablePath", "cannot write " + af.out);
            out << "threshold\taccuracy\n";
            char buf[64];
            for (const auto& [t, acc] : rows) {
                std::snprintf(buf, sizeof(buf), "%g\t%.9g\n", t, acc);
                out << buf;
            }
            write_runconfig(att, af.out);
            auto best = std::max_element(rows.begin(), rows.end(),
                                         [](auto& a, auto& b) { return a.second < b.second; });
            std::printf("sweep rows=%zu best_threshold=%g best_accuracy=%.4f -> %s\n", rows.size(),
                        best->first, best->second, af.out.c_str());
            return;
        }

        if (af.image.empty() == af.manifest.empty())
            raise_usage("BadConfig", "give exactly one of --image or --manifest");
        if (!af.image.empty()) {
            Image img = load_image(af.image);
            std::optional<std::string> prompt;
            if (att->count("--prompt")) prompt = af.prompt;
            AttributionResult r = attribute(m.bundle, m.backend.get(), img, prompt,
                                            captioner_or_backend(m), threshold);
            std::printf("source=%s confidence=%.9g threshold=%s\n", source_name(r.source).c_str(),
                        r.confidence,
                        r.threshold_used ? std::to_string(*r.threshold_used).c_str() : "none");
            return;
        }
        if (af.out.empty()) raise_usage("BadConfig", "batch mode needs --out");
        DatasetManifest manifest = load_checked(af.manifest);
        EvalOptions opt = eval_options(af, m);
        std::ofstream out(af.out);
        if (!out) raise_data("UnwritablePath", "cannot write " + af.out);
        for (const auto& rec : manifest.records) {
            Image img = load_image(rec.resolved_path);
            AttributionResult r =
                attribute(m.bundle, m.backend.get(), img, natural_prompt(rec, opt),
                          opt.captioner ? opt.captioner : captioner_or_backend(m), threshold);
            nlohmann::json line = {{"id", rec.id},
                                   {"source", source_name(r.source)},
                                   {"confidence", r.confidence}};
            line["threshold_used"] =
                r.threshold_used ? nlohmann::json(*r.threshold_used) : nlohmann::json(nullptr);
            out << line.dump() << "\n";
        }
        write_runconfig(att, af.out);
    });

    // ---- eval ---------------------------------------------------------------
    auto* ev = app.add_subcommand("eval", "evaluate a model on a balanced set");
    static InferFlags ef;
    struct {
        std::string fake_origin;
        std::size_t n_per_class = 0;
        std::uint64_t seed = 0;
    } ex;
    ev->add_option("--model", ef.model)->required();
    ev->add_option("--manifest", ef.manifest)->required();
    ev->add_option("--backend", ef.backend_id);
    ev->add_option("--captioner", ef.captioner_id);
    ev->add_option("--prompts", ef.prompts);
    ev->add_option("--fake-origin", ex.fake_origin, "fake class origin (detector models)");
    ev->add_option("--n-per-class", ex.n_per_class)->required();
    ev->add_option("--seed", ex.seed)->required();
    ev->add_option("--out", ef.out, "report path prefix")->required();
    ev->add_option("--jobs", ef.jobs);
    ev->callback([&] {
        if (ef.jobs > 0) kernels::set_max_threads(ef.jobs);
        LoadedModel m = open_model(ef);
        DatasetManifest manifest = load_checked(ef.manifest);
        std::vector<LabeledId> records;
        if (m.bundle.scheme == LabelScheme::detection) {
            if (ex.fake_origin.empty())
                raise_usage("BadConfig", "detector evaluation needs --fake-origin");
            records = build_detection_split(manifest, Origin::parse(ex.fake_origin),
                                            ex.n_per_class, ex.seed, 1.0)
                          .all();
        } else {
            records = build_attribution_split(manifest, ex.n_per_class, ex.seed, 1.0).all();
        }
        EvaluationReport rep = evaluate_classifier(m.bundle, m.backend.get(), manifest, records,
                                                   eval_options(ef, m));
        save_report(rep, sibling(ef.out, ".report.json"), sibling(ef.out, ".confusion.tsv"));
        write_runconfig(ev, ef.out);
        std::printf("accuracy=%.6f n=%zu tag=%s -> %s.report.json\n", rep.accuracy, rep.n_total,
                    rep.dataset_tag.c_str(), ef.out.c_str());
    });

    // ---- cross-eval -----------------------------------------------------------
    auto* ce = app.add_subcommand("cross-eval", "evaluate one model across origins and datasets");
    static InferFlags cf;
    struct {
        std::vector<std::string> manifests, origins;
        std::size_t n_per_class = 0;
        std::uint64_t seed = 0;
    } cx;
    ce->add_option("--model", cf.model)->required();
    ce->add_option("--manifests", cx.manifests)->required()->delimiter(',');
    ce->add_option("--origins", cx.origins)->delimiter(',');
    ce->add_option("--backend", cf.backend_id);
    ce->add_option("--captioner", cf.captioner_id);
    ce->add_option("--prompts", cf.prompts);
    ce->add_option("--n-per-class", cx.n_per_class)->required();
    ce->add_option("--seed", cx.seed)->required();
    ce->add_option("--out", cf.out, "output path prefix")->required();
    ce->add_option("--jobs", cf.jobs);
    ce->callback([&] {
        if (cf.jobs > 0) kernels::set_max_threads(cf.jobs);
        LoadedModel m = open_model(cf);
        std::vector<DatasetManifest> manifests;
        manifests.reserve(cx.manifests.size());
        for (const auto& p : cx.manifests) manifests.push_back(load_checked(p));
        std::vector<const DatasetManifest*> ptrs;
        for (const auto& man : manifests) ptrs.push_back(&man);
        std::vector<Origin> origins;
        for (const auto& o : cx.origins) origins.push_back(Origin::parse(o));

        auto rows = cross_matrix(m.bundle, m.backend.get(), ptrs, origins, cx.n_per_class, cx.seed,
                                 eval_options(cf, m));
        std::ofstream out(sibling(cf.out, ".tsv"));
        if (!out) raise_data("UnwritablePath", "cannot write " + cf.out);
        out << "train_source\teval_source\taccuracy\tn\n";
        char buf[256];
        nlohmann::json jrows = nlohmann::json::array();
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof(buf), "%s\t%s\t%.9g\t%zu\n", r.train_source.c_str(),
                          r.eval_source.c_str(), r.accuracy, r.n_total);
            out << buf;
            jrows.push_back({{"train_source", r.train_source},
                             {"eval_source", r.eval_source},
                             {"accuracy", r.accuracy},
                             {"n", r.n_total}});
            std::printf("%s -> %s : %.4f (n=%zu)\n", r.train_source.c_str(), r.eval_source.c_str(),
                        r.accuracy, r.n_total);
        }
        std::ofstream summary(sibling(cf.out, ".summary.json"));
        summary << nlohmann::json{{"rows", jrows}}.dump(2) << "\n";
        write_runconfig(ce, cf.out);
    });

    // ---- size-ablation ---------------------------------------------------------
    auto* sa = app.add_subcommand("size-ablation", "accuracy vs training-set size");
    static TrainFlags sf;
    struct {
        std::vector<std::size_t> sizes;
        std::size_t n_eval_per_class = 32;
    } sx;
    sa->add_option("--manifest", sf.manifest)->required();
    sa->add_option("--mode", sf.mode)->required();
    sa->add_option("--fake-origin", sf.fake_origin)->required();
    sa->add_option("--sizes", sx.sizes, "total training sizes, e.g. 8,32,128")
        ->required()
        ->delimiter(',');
    sa->add_option("--n-eval-per-class", sx.n_eval_per_class);
    sa->add_option("--seed", sf.seed)->required();
    sa->add_option("--out", sf.out, "output path prefix")->required();
    sa->add_option("--backend", sf.backend_id);
    sa->add_option("--epochs", sf.epochs);
    sa->add_option("--batch-size", sf.batch_size);
    sa->add_option("--lr", sf.lr);
    sa->add_option("--momentum", sf.momentum);
    sa->add_option("--hidden", sf.hidden);
    sa->add_option("--arch", sf.arch);
    sa->add_flag("--l2-normalize", sf.l2_normalize);
    sa->add_option("--jobs", sf.jobs);
    sa->callback([&] {
        if (sf.jobs > 0) kernels::set_max_threads(sf.jobs);
        DatasetManifest manifest = load_checked(sf.manifest);
        SizeAblationOptions opt;
        opt.pipeline = pipeline_from_flags(sf, 2);
        opt.fake_origin = Origin::parse(sf.fake_origin);
        opt.n_eval_per_class = sx.n_eval_per_class;
        std::unique_ptr<EncoderBackend> backend;
        if (!sf.backend_id.empty()) backend = make_backend(sf.backend_id);
        auto rows = size_ablation(manifest, sx.sizes, backend.get(), opt, sf.seed);
        std::ofstream out(sibling(sf.out, ".tsv"));
        if (!out) raise_data("UnwritablePath", "cannot write " + sf.out);
        out << "size\taccuracy\n";
        char buf[64];
        nlohmann::json jrows = nlohmann::json::array();
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof(buf), "%zu\t%.9g\n", r.size, r.accuracy);
            out << buf;
            jrows.push_back({{"size", r.size}, {"accuracy", r.accuracy}});
            std::printf("size=%zu accuracy=%.4f\n", r.size, r.accuracy);
        }
        std::ofstream summary(sibling(sf.out, ".summary.json"));
        summary << nlohmann::json{{"rows", jrows}}.dump(2) << "\n";
        write_runconfig(sa, sf.out);
    });

    // ---- fingerprint -------------------------------------------------------------
    auto* fp = app.add_subcommand("fingerprint", "average Fourier spectrum of one source");
    struct {
        std::string manifest, source, out, compare;
        std::size_t n = 1000;
        std::uint64_t seed = 0;
        int resolution = 0;  // 0 = native
        int jobs = 0;
    } ff;
    fp->add_option("--manifest", ff.manifest)->required();
    fp->add_option("--source", ff.source, "origin whose images are averaged")->required();
    fp->add_option("--n", ff.n, "images to sample");
    fp->add_option("--seed", ff.seed)->required();
    fp->add_option("--resolution", ff.resolution, "resize before the transform (0 = native)");
    fp->add_option("--out", ff.out, "output path prefix")->required();
    fp->add_option("--compare", ff.compare, "second fingerprint file; prints RMS distance");
    fp->add_option("--jobs", ff.jobs);
    fp->callback([&] {
        if (ff.jobs > 0) kernels::set_max_threads(ff.jobs);
        DatasetManifest manifest = load_checked(ff.manifest);
        Origin origin = Origin::parse(ff.source);
        std::vector<std::string> ids = sample_origin_ids(manifest, origin, ff.n, ff.seed);
        std::vector<GrayImage> grays;
        grays.reserve(ids.size());
        for (const auto& id : ids) {
            Image img = load_image(manifest.at(id).resolved_path);
            if (ff.resolution > 0) img = resize_bilinear(img, ff.resolution, ff.resolution);
            grays.push_back(to_gray(img));
        }
        SpectralFingerprint print = average_spectrum(grays, origin.str());
        save_fingerprint(print, sibling(ff.out, ".fp.json"));
        render_spectrum(print, sibling(ff.out, ".pgm"));
        write_runconfig(fp, ff.out);
        std::printf("fingerprint source=%s n=%zu %dx%d -> %s.fp.json\n", print.source.c_str(),
                    print.n_images, print.height, print.width, ff.out.c_str());
        if (!ff.compare.empty()) {
            SpectralFingerprint other = load_fingerprint(ff.compare);
            std::printf("distance=%.9g\n", fingerprint_distance(print, other));
        }
    });

    // ---- prompt-analyze ------------------------------------------------------------
    auto* pa = app.add_subcommand("prompt-analyze", "prompt-side analyses");
    static InferFlags pf;
    struct {
        std::string what, fake_origin = "SD";
        double temperature = 100.0, eps = -1.0;
        int min_pts = 0, top_k = 20, length_bins = 5, ratio_bins = 5;
        std::size_t n = 0, n_per_class = 0;
        std::uint64_t seed = 0;
    } px;
    pa->add_option("--what", px.what,
                   "connection | descriptiveness | topics | clusters | structure")
        ->required();
    pa->add_option("--manifest", pf.manifest)->required();
    pa->add_option("--out", pf.out, "output path prefix")->required();
    pa->add_option("--seed", px.seed)->required();
    pa->add_option("--model", pf.model, "detector model (authenticity verdicts)");
    pa->add_option("--backend", pf.backend_id, "encoder backend for embeddings/similarity");
    pa->add_option("--captioner", pf.captioner_id);
    pa->add_option("--fake-origin", px.fake_origin);
    pa->add_option("--temperature", px.temperature, "connection softmax temperature");
    pa->add_option("--n", px.n, "sample size (0 = all)");
    pa->add_option("--n-per-class", px.n_per_class, "descriptiveness eval set size");
    pa->add_option("--eps", px.eps, "DBSCAN radius (clusters; required)");
    pa->add_option("--min-pts", px.min_pts, "DBSCAN density (clusters; required)");
    pa->add_option("--top-k", px.top_k, "topics kept in the ranking");
    pa->add_option("--length-bins", px.length_bins);
    pa->add_option("--ratio-bins", px.ratio_bins);
    pa->add_option("--jobs", pf.jobs);
    pa->callback([&] {
        if (pf.jobs > 0) kernels::set_max_threads(pf.jobs);
        DatasetManifest manifest = load_checked(pf.manifest);
        Origin fake_origin = Origin::parse(px.fake_origin);

        // --backend here selects the analysis backend (joint similarity, text
        // embeddings); the detector model always runs with its recorded backend.
        auto open_detector = [&]() -> LoadedModel {
            if (pf.model.empty())
                raise_usage("BadConfig", "--what " + px.what + " needs --model");
            InferFlags mf = pf;
            mf.backend_id.clear();
            return open_model(mf);
        };
        auto real_probability = [](const LoadedModel& m, const PromptImagePair& rec) {
            Image img = load_image(rec.resolved_path);
            std::optional<std::string> prompt;
            if (!rec.prompt.empty()) prompt = rec.prompt;
            BundlePrediction p =
                predict_record(m.bundle, m.backend.get(), img, prompt, captioner_or_backend(m));
            return p.probabilities[1];
        };

        if (px.what == "connection") {
            if (pf.backend_id.empty())
                raise_usage("BadConfig", "connection analysis needs a joint --backend");
            std::unique_ptr<EncoderBackend> backend = make_backend(pf.backend_id);
            // Pair fakes with reals: identical prompt text when possible,
            // id-rank otherwise (fake prompts often carry extra tokens).
            std::vector<const PromptImagePair*> fakes, reals;
            for (const auto& r : manifest.records) {
                if (r.origin == fake_origin) fakes.push_back(&r);
                if (r.origin.kind == OriginKind::real) reals.push_back(&r);
            }
            auto by_id = [](const PromptImagePair* a, const PromptImagePair* b) {
                return a->id < b->id;
            };
            std::sort(fakes.begin(), fakes.end(), by_id);
            std::sort(reals.begin(), reals.end(), by_id);
            if (fakes.empty() || reals.empty())
                raise_data("InsufficientRecords", "need both real and fake records");
            std::map<std::string, const PromptImagePair*> real_by_prompt;
            for (const auto* r : reals) real_by_prompt.emplace(r->prompt, r);
            std::vector<std::pair<const PromptImagePair*, const PromptImagePair*>> pairs;
            for (std::size_t i = 0; i < fakes.size(); ++i) {
                auto it = real_by_prompt.find(fakes[i]->prompt);
                const PromptImagePair* mate =
                    it != real_by_prompt.end() ? it->second : reals[i % reals.size()];
                pairs.emplace_back(mate, fakes[i]);
            }
            if (px.n > 0 && pairs.size() > px.n) {
                Rng rng(mix_seed(px.seed, 0x70616972ULL));
                rng.shuffle(pairs);
                pairs.resize(px.n);
            }
            std::ofstream out(sibling(pf.out, ".tsv"));
            if (!out) raise_data("UnwritablePath", "cannot write " + pf.out);
            out << "id\tp_real\tp_fake\n";
            char buf[160];
            std::vector<double> p_reals, p_fakes;
            for (const auto& [real_rec, fake_rec] : pairs) {
                Image real_img = load_image(real_rec->resolved_path);
                Image fake_img = load_image(fake_rec->resolved_path);
                ConnectionDistribution d =
                    connection_distribution(*backend, fake_rec->id, real_rec->prompt, real_img,
                                            fake_img, px.temperature);
                std::snprintf(buf, sizeof(buf), "%s\t%.9g\t%.9g\n", d.prompt_id.c_str(), d.p_real,
                              d.p_fake);
                out << buf;
                p_reals.push_back(d.p_real);
                p_fakes.push_back(d.p_fake);
            }
            render_histogram_pair(p_reals, p_fakes, 20, sibling(pf.out, ".ppm"));
            double mr = 0, mf = 0;
            for (double v : p_reals) mr += v;
            for (double v : p_fakes) mf += v;
            std::ofstream summary(sibling(pf.out, ".summary.json"));
            summary << nlohmann::json{{"n", pairs.size()},
                                      {"mean_p_real", mr / pairs.size()},
                                      {"mean_p_fake", mf / pairs.size()},
                                      {"temperature", px.temperature}}
                           .dump(2)
                    << "\n";
            std::printf("connection pairs=%zu mean_p_real=%.4f mean_p_fake=%.4f\n", pairs.size(),
                        mr / pairs.size(), mf / pairs.size());
        } else if (px.what == "descriptiveness") {
            if (pf.backend_id.empty())
                raise_usage("BadConfig", "descriptiveness needs a joint --backend");
            if (!pa->count("--n-per-class"))
                raise_usage("BadConfig", "descriptiveness needs --n-per-class");
            std::unique_ptr<EncoderBackend> joint = make_backend(pf.backend_id);
            LoadedModel m = open_detector();
            const EncoderBackend* captioner =
                m.captioner ? m.captioner.get() : (joint->can_caption() ? joint.get() : nullptr);
            if (!captioner) raise_usage("MissingCaptioner", "descriptiveness needs a captioner");
            auto records =
                build_detection_split(manifest, fake_origin, px.n_per_class, px.seed, 1.0).all();
            std::vector<ScoredSample> samples;
            for (const auto& lid : records) {
                const auto& rec = manifest.at(lid.id);
                Image img = load_image(rec.resolved_path);
                std::string caption = captioner->generate_caption(img);
                double score = descriptiveness(*joint, caption, img);
                Verdict v = detect(m.bundle, m.backend.get(), img, std::nullopt, captioner);
                samples.push_back({lid.id, score, v.label == lid.label ? 1.0 : 0.0});
            }
            auto bins = bin_by_descriptiveness(std::move(samples), 5);
            std::ofstream out(sibling(pf.out, ".bins.tsv"));
            out << "bin\tscore_min\tscore_max\tn\taccuracy\n";
            char buf[160];
            std::vector<double> accs;
            for (std::size_t b = 0; b < bins.size(); ++b) {
                std::snprintf(buf, sizeof(buf), "%zu\t%.9g\t%.9g\t%zu\t%.9g\n", b,
                              bins[b].score_min, bins[b].score_max, bins[b].size(),
                              bins[b].mean_value);
                out << buf;
                accs.push_back(bins[b].mean_value);
                std::printf("bin %zu [%.4f, %.4f] n=%zu accuracy=%.4f\n", b, bins[b].score_min,
                            bins[b].score_max, bins[b].size(), bins[b].mean_value);
            }
            render_bar_chart(accs, sibling(pf.out, ".ppm"));
        } else if (px.what == "topics") {
            LoadedModel m = open_detector();
            auto records = sampled_fakes(manifest, fake_origin, px.n, px.seed);
            auto rows = topic_authenticity(
                records,
                [&](const PromptImagePair& rec) {
                    Image img = load_image(rec.resolved_path);
                    std::optional<std::string> prompt;
                    if (!rec.prompt.empty()) prompt = rec.prompt;
                    return detect(m.bundle, m.backend.get(), img, prompt, captioner_or_backend(m))
                        .is_real();
                },
                static_cast<std::size_t>(px.top_k));
            std::ofstream out(sibling(pf.out, ".tsv"));
            out << "topic\tn_prompts\treal_proportion\n";
            char buf[160];
            std::vector<double> props;
            for (const auto& r : rows) {
                std::snprintf(buf, sizeof(buf), "%s\t%zu\t%.9g\n", r.topic.c_str(), r.n_prompts,
                              r.real_proportion);
                out << buf;
                props.push_back(r.real_proportion);
                std::printf("%-16s n=%zu real_proportion=%.4f\n", r.topic.c_str(), r.n_prompts,
                            r.real_proportion);
            }
            render_bar_chart(props, sibling(pf.out, ".ppm"));
        } else if (px.what == "clusters") {
            if (!(px.eps > 0.0) || px.min_pts < 1)
                raise_usage("BadConfig", "clustering needs explicit --eps > 0 and --min-pts >= 1");
            if (pf.backend_id.empty())
                raise_usage("BadConfig", "clustering needs --backend for prompt embeddings");
            std::unique_ptr<EncoderBackend> backend = make_backend(pf.backend_id);
            LoadedModel m = open_detector();
            auto records = sampled_fakes(manifest, fake_origin, px.n, px.seed);
            std::vector<EmbeddingVector> embs;
            std::vector<std::string> ids;
            std::vector<bool> real_flags;
            for (const auto* rec : records) {
                embs.push_back(backend->encode_text(rec->prompt));
                ids.push_back(rec->id);
                Image img = load_image(rec->resolved_path);
                std::optional<std::string> prompt;
                if (!rec->prompt.empty()) prompt = rec->prompt;
                real_flags.push_back(
                    detect(m.bundle, m.backend.get(), img, prompt, captioner_or_backend(m))
                        .is_real());
            }
            auto reports = cluster_prompts(embs, ids, real_flags, px.eps, px.min_pts);
            std::ofstream out(sibling(pf.out, ".tsv"));
            out << "cluster\tsize\treal_proportion\trepresentatives\n";
            char buf[512];
            for (const auto& c : reports) {
                std::string reps;
                for (const auto& r : c.representatives) {
                    if (!reps.empty()) reps += "|";
                    reps += r;
                }
                std::snprintf(buf, sizeof(buf), "%d\t%zu\t%.9g\t%s\n", c.cluster_id,
                              c.member_ids.size(), c.real_proportion, reps.c_str());
                out << buf;
                std::printf("cluster %d size=%zu real_proportion=%.4f\n", c.cluster_id,
                            c.member_ids.size(), c.real_proportion);
            }
            nlohmann::json jc = nlohmann::json::array();
            for (const auto& c : reports)
                jc.push_back({{"cluster", c.cluster_id},
                              {"members", c.member_ids},
                              {"representatives", c.representatives},
                              {"real_proportion", c.real_proportion}});
            std::ofstream summary(sibling(pf.out, ".summary.json"));
            summary << nlohmann::json{{"eps", px.eps}, {"min_pts", px.min_pts}, {"clusters", jc}}
                           .dump(2)
                    << "\n";
        } else if (px.what == "structure") {
            LoadedModel m = open_detector();
            auto records = sampled_fakes(manifest, fake_origin, px.n, px.seed);
            LexiconTagger tagger;
            StructureReport rep = structure_report(
                records,
                [&](const PromptImagePair& rec) { return real_probability(m, rec); }, tagger,
                px.length_bins, px.ratio_bins);
            std::ofstream rows(sibling(pf.out, ".rows.tsv"));
            rows << "id\tlength\tnoun_ratio\tauthenticity\n";
            char buf[256];
            for (const auto& r : rep.rows) {
                std::snprintf(buf, sizeof(buf), "%s\t%zu\t%.9g\t%.9g\n", r.id.c_str(), r.length,
                              r.noun_ratio, r.authenticity);
                rows << buf;
            }
            auto dump_bins = [&](const std::vector<Bin>& bins, const std::string& suffix,
                                 const std::string& chart_suffix) {
                std::ofstream out(sibling(pf.out, suffix));
                out << "bin\tscore_min\tscore_max\tn\tmean_authenticity\n";
                std::vector<double> means;
                for (std::size_t b = 0; b < bins.size(); ++b) {
                    std::snprintf(buf, sizeof(buf), "%zu\t%.9g\t%.9g\t%zu\t%.9g\n", b,
                                  bins[b].score_min, bins[b].score_max, bins[b].size(),
                                  bins[b].mean_value);
                    out << buf;
                    means.push_back(bins[b].mean_value);
                }
                render_bar_chart(means, sibling(pf.out, chart_suffix));
            };
            dump_bins(rep.by_length, ".length_bins.tsv", ".length.ppm");
            dump_bins(rep.by_noun_ratio, ".ratio_bins.tsv", ".ratio.ppm");
            std::printf("structure rows=%zu length_bins=%zu ratio_bins=%zu -> %s.rows.tsv\n",
                        rep.rows.size(), rep.by_length.size(), rep.by_noun_ratio.size(),
                        pf.out.c_str());
        } else {
            raise_usage("BadConfig", "unknown --what '" + px.what + "'");
        }
        write_runconfig(pa, pf.out);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error(Usage): " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error(" << e.code() << "): " << e.what() << "\n";
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error(Internal): " << e.what() << "\n";
        return 5;
    }
    return 0;
}
