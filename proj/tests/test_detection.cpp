#include <doctest.h>

#include "synthscan/detection.hpp"
#include "synthscan/errors.hpp"
#include "synthscan/toycorpus.hpp"
#include "test_support.hpp"

using namespace synthscan;

namespace {

DatasetManifest load_corpus(const std::filesystem::path& manifest_path) {
    ManifestLoadResult res = load_manifest(manifest_path);
    REQUIRE(res.rejected.empty());
    return std::move(res.manifest);
}

DatasetManifest marker_corpus(const std::string& tag, std::size_t n_per_origin,
                              std::uint64_t seed,
                              std::map<std::string, std::string> overrides = {}) {
    ToyCorpusOptions opt;
    opt.dir = testsupport::fresh_dir(tag);
    opt.n_per_origin = n_per_origin;
    opt.seed = seed;
    opt.resolution = 12;
    opt.origins = {Origin::real(), Origin::sd()};
    opt.marker_overrides = std::move(overrides);
    return load_corpus(generate_toy_corpus(opt));
}

TrainPipelineOptions hybrid_options(std::uint64_t seed, int epochs = 40) {
    TrainPipelineOptions opt;
    opt.mode = PipelineMode::hybrid;
    opt.train.epochs = epochs;
    opt.train.learning_rate = 0.05;
    opt.train.seed = seed;
    opt.mlp_hidden = 64;
    opt.training_tag = "SD+toy";
    return opt;
}

// Zero-weight hybrid detector: argmax ties break to class 0 on every input.
ClassifierBundle constant_detector(const EncoderBackend& backend) {
    ClassifierBundle b;
    b.kind = "detector";
    b.mode = PipelineMode::hybrid;
    b.scheme = LabelScheme::detection;
    b.core_type = "mlp";
    b.mlp = init_mlp(static_cast<int>(backend.image_dim() + backend.text_dim()), 8, 2, 1);
    std::fill(b.mlp.w1.begin(), b.mlp.w1.end(), 0.0);
    std::fill(b.mlp.w2.begin(), b.mlp.w2.end(), 0.0);
    b.backend_id = backend.backend_id();
    b.backend_image_dim = backend.image_dim();
    b.backend_text_dim = backend.text_dim();
    return b;
}

}  // namespace

TEST_CASE("marker fixture is linearly separable (perceptron oracle), and the "
          "hybrid detector learns it") {
    DatasetManifest manifest = marker_corpus("det_hybrid", 60, 101);
    DatasetSplit split = build_detection_split(manifest, Origin::sd(), 60, 7);

    ToyBackend toy;
    std::vector<std::vector<double>> feats;
    std::vector<int> labels;
    for (const auto& rec : split.all()) {
        const auto& r = manifest.at(rec.id);
        EmbeddingVector img = toy.encode_image(load_image(r.resolved_path));
        EmbeddingVector txt = toy.encode_text(r.prompt);
        feats.push_back(concat_embeddings(img, txt).values);
        labels.push_back(rec.label);
    }
    CHECK(testsupport::perceptron_accuracy(feats, labels) == doctest::Approx(1.0));

    DetectorResult result = train_detector(manifest, split, &toy, hybrid_options(7));
    CHECK(result.model.backend_id == "toy");
    CHECK(result.model.core_type == "mlp");
    REQUIRE_FALSE(result.history.holdout_acc.empty());
    CHECK(result.history.holdout_acc.back() >= 0.95);

    EvaluationReport rep = evaluate_detector(result.model, &toy, manifest, split.test);
    CHECK(rep.accuracy >= 0.95);
    CHECK(rep.n_total == split.test.size());
}

TEST_CASE("image-only detection separates black fakes from white reals") {
    auto dir = testsupport::fresh_dir("det_bw");
    auto manifest_path = testsupport::write_solid_corpus(
        dir, {{Origin::sd(), {0, 0, 0}, 12, "p"}, {Origin::real(), {255, 255, 255}, 12, "p"}}, 8);
    DatasetManifest manifest = load_corpus(manifest_path);
    DatasetSplit split = build_detection_split(manifest, Origin::sd(), 12, 3);

    TrainPipelineOptions opt;
    opt.mode = PipelineMode::image_only;
    opt.conv = ConvNetConfig{8, {4}, 1, 2};
    opt.train.epochs = 15;
    opt.train.batch_size = 8;
    opt.train.learning_rate = 0.1;
    opt.train.seed = 5;
    DetectorResult result = train_detector(manifest, split, nullptr, opt);
    CHECK(result.model.core_type == "convnet");

    EvaluationReport rep = evaluate_detector(result.model, nullptr, manifest, split.all());
    CHECK(rep.accuracy == doctest::Approx(1.0));
}

TEST_CASE("hybrid training requires prompts on every record") {
    auto dir = testsupport::fresh_dir("det_noprompt");
    auto manifest_path = testsupport::write_solid_corpus(
        dir, {{Origin::sd(), {0, 0, 0}, 4, ""}, {Origin::real(), {255, 255, 255}, 4, "fine"}}, 8);
    DatasetManifest manifest = load_corpus(manifest_path);
    DatasetSplit split = build_detection_split(manifest, Origin::sd(), 4, 3);
    ToyBackend toy;
    try {
        (void)train_detector(manifest, split, &toy, hybrid_options(3, 2));
        FAIL("expected PromptMissing");
    } catch (const Error& e) {
        CHECK(e.code() == "PromptMissing");
        CHECK(std::string(e.what()).find("SD-") != std::string::npos);
    }
}

TEST_CASE("detect() provenance and mode contracts") {
    DatasetManifest manifest = marker_corpus("det_modes", 30, 202);
    DatasetSplit split = build_detection_split(manifest, Origin::sd(), 30, 9);
    ToyBackend toy;
    DetectorResult hybrid = train_detector(manifest, split, &toy, hybrid_options(9, 25));

    Image img = load_image(manifest.at(split.test.front().id).resolved_path);

    Verdict natural = detect(hybrid.model, &toy, img, std::string("a dog sitting on the field"));
    CHECK(natural.provenance == PromptProvenance::natural);
    CHECK(natural.confidence >= 0.5);

    Verdict generated = detect(hybrid.model, &toy, img, std::nullopt, &toy);
    CHECK(generated.provenance == PromptProvenance::generated);

    try {
        (void)detect(hybrid.model, &toy, img, std::nullopt, nullptr);
        FAIL("expected CaptionUnsupported");
    } catch (const Error& e) {
        CHECK(e.code() == "CaptionUnsupported");
        CHECK(e.kind() == ErrorKind::backend);
    }

    ToyJointBackend joint;
    try {
        (void)detect(hybrid.model, &joint, img, std::string("p"));
        FAIL("expected BackendMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == "BackendMismatch");
    }
}

TEST_CASE("image-only detect ignores prompts entirely") {
    auto dir = testsupport::fresh_dir("det_image_only");
    auto manifest_path = testsupport::write_solid_corpus(
        dir, {{Origin::sd(), {0, 0, 0}, 6, "p"}, {Origin::real(), {255, 255, 255}, 6, "p"}}, 8);
    DatasetManifest manifest = load_corpus(manifest_path);
    DatasetSplit split = build_detection_split(manifest, Origin::sd(), 6, 3);
    TrainPipelineOptions opt;
    opt.mode = PipelineMode::image_only;
    opt.conv = ConvNetConfig{8, {4}, 1, 2};
    opt.train.epochs = 8;
    opt.train.batch_size = 4;
    opt.train.learning_rate = 0.1;
    opt.train.seed = 5;
    DetectorResult model = train_detector(manifest, split, nullptr, opt);

    Image img = load_image(manifest.at(split.all().front().id).resolved_path);
    Verdict with_prompt = detect(model.model, nullptr, img, std::string("ignored"));
    Verdict without = detect(model.model, nullptr, img);
    CHECK(with_prompt.provenance == PromptProvenance::none);
    CHECK(with_prompt.label == without.label);
    CHECK(with_prompt.confidence == without.confidence);
}

TEST_CASE("caption path equals the explicit-prompt path bitwise") {
    DatasetManifest manifest = marker_corpus("det_caption", 30, 303);
    DatasetSplit split = build_detection_split(manifest, Origin::sd(), 30, 11);
    ToyBackend toy;
    DetectorResult hybrid = train_detector(manifest, split, &toy, hybrid_options(11, 25));

    int checked = 0;
    for (const auto& rec : split.test) {
        Image img = load_image(manifest.at(rec.id).resolved_path);
        std::string caption = toy.generate_caption(img);
        Verdict by_prompt = detect(hybrid.model, &toy, img, caption);
        Verdict by_caption = detect(hybrid.model, &toy, img, std::nullopt, &toy);
        CHECK(by_prompt.label == by_caption.label);
        CHECK(by_prompt.confidence == by_caption.confidence);  // bitwise
        CHECK(by_caption.provenance == PromptProvenance::generated);
        ++checked;
    }
    CHECK(checked >= 10);
}

TEST_CASE("a constant classifier scores exactly one half on a balanced set") {
    DatasetManifest manifest = marker_corpus("det_const", 20, 404);
    DatasetSplit split = build_detection_split(manifest, Origin::sd(), 20, 13);
    ToyBackend toy;
    ClassifierBundle constant = constant_detector(toy);
    EvaluationReport rep = evaluate_detector(constant, &toy, manifest, split.all());
    CHECK(rep.accuracy == 0.5);
    CHECK(rep.n_total == 40);
    CHECK(rep.cell(0, 0) + rep.cell(0, 1) == 20);
    CHECK(rep.cell(1, 0) + rep.cell(1, 1) == 20);
}

TEST_CASE("evaluation rejects unbalanced or mis-schemed sets") {
    DatasetManifest manifest = marker_corpus("det_badeval", 10, 505);
    DatasetSplit split = build_detection_split(manifest, Origin::sd(), 10, 17);
    ToyBackend toy;
    ClassifierBundle constant = constant_detector(toy);

    auto unbalanced = split.all();
    unbalanced.pop_back();
    CHECK_THROWS_AS((void)evaluate_detector(constant, &toy, manifest, unbalanced), Error);

    auto bad_labels = split.all();
    bad_labels[0].label = 3;
    try {
        (void)evaluate_detector(constant, &toy, manifest, bad_labels);
        FAIL("expected SchemeMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == "SchemeMismatch");
    }
}

TEST_CASE("model files round-trip through save and load") {
    DatasetManifest manifest = marker_corpus("det_io", 20, 606);
    DatasetSplit split = build_detection_split(manifest, Origin::sd(), 20, 19);
    ToyBackend toy;
    DetectorResult trained = train_detector(manifest, split, &toy, hybrid_options(19, 20));

    auto dir = testsupport::fresh_dir("det_io_files");
    save_bundle(trained.model, dir / "d.model");
    ClassifierBundle back = load_bundle(dir / "d.model");
    CHECK(back.kind == "detector");
    CHECK(back.mode == PipelineMode::hybrid);
    CHECK(back.mlp.w1 == trained.model.mlp.w1);
    CHECK(back.backend_id == "toy");
    CHECK(back.train_digest == trained.model.train_digest);
    CHECK(bundle_digest(back) == bundle_digest(trained.model));

    Image img = load_image(manifest.at(split.test.front().id).resolved_path);
    Verdict a = detect(trained.model, &toy, img, std::string("a dog"));
    Verdict b = detect(back, &toy, img, std::string("a dog"));
    CHECK(a.label == b.label);
    CHECK(a.confidence == b.confidence);
}
