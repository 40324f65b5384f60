// Acceptance suite: runs every toolkit-level criterion at its stated
// tolerance and prints one PASS/FAIL line per criterion. The CLI binary under
// test is passed as --cli <path> (used by the determinism and sweep checks).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "synthscan/attribution.hpp"
#include "synthscan/detection.hpp"
#include "synthscan/errors.hpp"
#include "synthscan/experiments.hpp"
#include "synthscan/fingerprint.hpp"
#include "synthscan/prompt_analysis.hpp"
#include "synthscan/reference.hpp"
#include "synthscan/rng.hpp"
#include "synthscan/toycorpus.hpp"
#include "test_support.hpp"

using namespace synthscan;

namespace {

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw CheckFailure(what);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    require(static_cast<bool>(in), "missing file " + p.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

DatasetManifest load_corpus(const std::filesystem::path& path) {
    ManifestLoadResult res = load_manifest(path);
    require(res.rejected.empty(), "corpus manifest had rejected lines");
    return std::move(res.manifest);
}

// Toy captioner fixed to one output string.
class FixedCaptioner : public EncoderBackend {
public:
    explicit FixedCaptioner(std::string caption) : caption_(std::move(caption)) {}
    std::string backend_id() const override { return "fixed-captioner"; }
    std::size_t image_dim() const override { return 1; }
    std::size_t text_dim() const override { return 1; }
    bool can_caption() const override { return true; }
    EmbeddingVector encode_image(const Image&) const override {
        return {{0.0}, EmbeddingKind::image, backend_id()};
    }
    EmbeddingVector encode_text(const std::string&) const override {
        return {{0.0}, EmbeddingKind::text, backend_id()};
    }
    std::string generate_caption(const Image&) const override { return caption_; }

private:
    std::string caption_;
};

// --------------------------------------------------------------------------

void criterion_1_dft_oracle() {
    auto start = std::chrono::steady_clock::now();
    Rng rng(1001);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> img(64);
        for (double& v : img) v = rng.uniform(0.0, 255.0);
        auto fast = kernels::dft2(img, 8, 8);
        auto naive = ref::dft2_naive(img, 8, 8);
        for (std::size_t i = 0; i < fast.size(); ++i)
            require(std::abs(fast[i] - naive[i]) < 1e-8, "fast/naive DFT disagree");
        double lhs = 0.0, rhs = 0.0;
        for (double v : img) lhs += v * v;
        lhs *= 64.0;
        for (const auto& c : fast) rhs += std::norm(c);
        require(std::fabs(lhs - rhs) <= 1e-6 * lhs, "Parseval identity violated");
    }
    require(elapsed_s(start) < 5.0, "DFT oracle check exceeded 5 s");
}

void criterion_2_spectrum_averaging() {
    std::vector<GrayImage> images;
    for (int i = 0; i < 5; ++i) images.push_back(testsupport::noise_gray(8, 8, 2000 + i));

    std::vector<double> oracle(64, 0.0);
    for (const auto& img : images) {
        auto spec = dft2(img);
        for (std::size_t c = 0; c < 64; ++c) oracle[c] += std::abs(spec[c]);
    }
    for (double& v : oracle) v /= 5.0;
    auto got = average_magnitude(images);
    for (std::size_t c = 0; c < 64; ++c)
        require(std::fabs(got[c] - oracle[c]) < 1e-9, "loop oracle mismatch");

    GrayImage flat;
    flat.height = flat.width = 8;
    flat.values.assign(64, 9.5);
    auto dc = average_magnitude({flat});
    for (std::size_t c = 1; c < 64; ++c)
        require(dc[c] < 1e-9, "constant image has non-DC energy pre-log");
}

void criterion_3_gradient_checks() {
    MlpModel mlp(init_mlp(3, 2, 2, 3001));
    Rng rng(3002);
    std::vector<double> x(4 * 3);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    std::vector<int> y = {0, 1, 1, 0};
    double mlp_err = gradient_check(mlp, x.data(), y.data(), 4, 1e-5);
    require(mlp_err < 1e-4, "MLP gradient check " + std::to_string(mlp_err));

    ConvNetModel conv(init_convnet(ConvNetConfig{8, {4}, 1, 2}, 3003));
    std::vector<double> xc(2 * 3 * 8 * 8);
    for (double& v : xc) v = rng.uniform(0.05, 0.95);
    std::vector<int> yc = {0, 1};
    double conv_err = gradient_check(conv, xc.data(), yc.data(), 2, 1e-5);
    require(conv_err < 1e-3, "conv gradient check " + std::to_string(conv_err));
}

void criterion_4_softmax_and_connection() {
    Rng rng(4001);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> logits = {rng.uniform(-60, 60), rng.uniform(-60, 60)};
        auto p = softmax(logits);
        require(std::fabs(p[0] + p[1] - 1.0) <= 1e-9, "softmax does not sum to one");
        double shift = rng.uniform(-30, 30);
        auto q = softmax({logits[0] + shift, logits[1] + shift});
        require(std::fabs(p[0] - q[0]) <= 1e-9 && std::fabs(p[1] - q[1]) <= 1e-9,
                "softmax not shift-invariant");
    }
    ToyJointBackend joint;
    Image img = testsupport::noise_image(8, 4002);
    ConnectionDistribution d =
        connection_distribution(joint, "id", "a dog near the park", img, img, 100.0);
    require(d.p_real == 0.5 && d.p_fake == 0.5, "identical images must split evenly");
}

void criterion_5_hybrid_detection(const std::filesystem::path& scratch) {
    auto start = std::chrono::steady_clock::now();
    ToyCorpusOptions copt;
    copt.dir = scratch / "det_corpus";
    copt.n_per_origin = 200;
    copt.seed = 5001;
    copt.resolution = 12;
    copt.origins = {Origin::real(), Origin::sd()};
    DatasetManifest manifest = load_corpus(generate_toy_corpus(copt));
    DatasetSplit split = build_detection_split(manifest, Origin::sd(), 200, 42);

    ToyBackend toy;
    TrainPipelineOptions opt;
    opt.mode = PipelineMode::hybrid;
    opt.train.epochs = 50;
    opt.train.learning_rate = 0.05;
    opt.train.seed = 42;
    opt.mlp_hidden = 64;
    opt.training_tag = "SD+toy";
    DetectorResult trained = train_detector(manifest, split, &toy, opt);
    require(trained.history.holdout_acc.size() == 50, "history must cover every epoch");
    double acc = trained.history.holdout_acc.back();
    require(acc >= 0.95, "hybrid holdout accuracy " + std::to_string(acc));

    ClassifierBundle constant = trained.model;
    std::fill(constant.mlp.w1.begin(), constant.mlp.w1.end(), 0.0);
    std::fill(constant.mlp.b1.begin(), constant.mlp.b1.end(), 0.0);
    std::fill(constant.mlp.w2.begin(), constant.mlp.w2.end(), 0.0);
    std::fill(constant.mlp.b2.begin(), constant.mlp.b2.end(), 0.0);
    EvaluationReport flat = evaluate_detector(constant, &toy, manifest, split.test);
    require(flat.accuracy == 0.5, "constant classifier must score exactly 0.5");

    require(elapsed_s(start) < 60.0, "hybrid detection fixture exceeded 60 s");
}

void criterion_6_attribution(const std::filesystem::path& scratch, const std::string& cli) {
    ToyCorpusOptions copt;
    copt.dir = scratch / "att_corpus";
    copt.n_per_origin = 100;
    copt.seed = 6001;
    copt.resolution = 12;
    copt.origins = {Origin::real(), Origin::sd(), Origin::ld(), Origin::glide(),
                    Origin::dalle2()};
    std::filesystem::path manifest_path = generate_toy_corpus(copt);
    DatasetManifest manifest = load_corpus(manifest_path);
    DatasetSplit split = build_attribution_split(manifest, 100, 61);

    ToyBackend toy;
    TrainPipelineOptions opt;
    opt.mode = PipelineMode::hybrid;
    opt.train.epochs = 40;
    opt.train.learning_rate = 0.05;
    opt.train.seed = 61;
    opt.mlp_hidden = 64;
    opt.training_tag = "4class+toy";
    AttributorResult trained = train_attributor(manifest, split, &toy, opt);
    double acc = trained.history.holdout_acc.back();
    require(acc >= 0.95, "attribution holdout accuracy " + std::to_string(acc));

    // monotone confidence routing on 1000 random probability vectors
    Rng rng(6002);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> p(4);
        double sum = 0.0;
        for (double& v : p) {
            v = rng.uniform(0.001, 1.0);
            sum += v;
        }
        for (double& v : p) v /= sum;
        double conf = *std::max_element(p.begin(), p.end());
        bool was_unseen = false;
        for (int i = 0; i <= 10; ++i) {
            bool unseen = conf < static_cast<double>(i) / 10.0;
            require(!was_unseen || unseen, "routing must be monotone in the threshold");
            was_unseen = unseen;
        }
    }

    // the CLI sweep emits exactly the 11-point grid
    std::filesystem::path model_path = scratch / "att.model";
    save_bundle(trained.model, model_path);
    std::filesystem::path sweep_path = scratch / "sweep.tsv";
    std::string cmd = cli + " attribute --model " + model_path.string() + " --manifest " +
                      manifest_path.string() + " --sweep --n-per-class 40 --seed 62 --out " +
                      sweep_path.string() + " > /dev/null 2>&1";
    require(std::system(cmd.c_str()) == 0, "attribute --sweep failed");
    std::istringstream rows(slurp(sweep_path));
    std::string line;
    int data_rows = -1;  // discount the header
    while (std::getline(rows, line))
        if (!line.empty()) ++data_rows;
    require(data_rows == 11, "sweep must emit exactly 11 rows, got " + std::to_string(data_rows));
}

void criterion_7_path_equivalence(const std::filesystem::path& scratch) {
    ToyCorpusOptions copt;
    copt.dir = scratch / "path_corpus";
    copt.n_per_origin = 40;
    copt.seed = 7001;
    copt.resolution = 12;
    copt.origins = {Origin::real(), Origin::sd()};
    DatasetManifest manifest = load_corpus(generate_toy_corpus(copt));
    DatasetSplit split = build_detection_split(manifest, Origin::sd(), 40, 71);

    ToyBackend toy;
    TrainPipelineOptions opt;
    opt.mode = PipelineMode::hybrid;
    opt.train.epochs = 20;
    opt.train.learning_rate = 0.05;
    opt.train.seed = 71;
    opt.mlp_hidden = 32;
    DetectorResult trained = train_detector(manifest, split, &toy, opt);

    const std::string prompt = "a zebra resting near the market";
    FixedCaptioner stub(prompt);
    int checked = 0;
    for (const auto& rec : split.all()) {
        if (checked >= 20) break;
        Image img = load_image(manifest.at(rec.id).resolved_path);
        Verdict by_prompt = detect(trained.model, &toy, img, prompt);
        Verdict by_caption = detect(trained.model, &toy, img, std::nullopt, &stub);
        require(by_prompt.label == by_caption.label, "caption path changed the verdict");
        require(by_prompt.confidence == by_caption.confidence,
                "caption path changed the confidence bits");
        require(by_caption.provenance == PromptProvenance::generated,
                "caption path must report generated provenance");
        ++checked;
    }
    require(checked == 20, "need 20 fixture images");
}

void criterion_8_binning_and_clustering() {
    std::vector<ScoredSample> ten, eleven;
    for (int i = 0; i < 10; ++i) ten.push_back({"t" + std::to_string(i), double(i), 0.0});
    for (int i = 0; i < 11; ++i) eleven.push_back({"e" + std::to_string(i), double(i), 0.0});
    auto bins10 = bin_by_descriptiveness(ten, 5);
    require(bins10.size() == 5, "expected five bins");
    for (const auto& b : bins10) require(b.size() == 2, "10/5 quantile sizes must be 2");
    auto bins11 = bin_by_descriptiveness(eleven, 5);
    std::size_t mn = 99, mx = 0;
    for (const auto& b : bins11) {
        mn = std::min(mn, b.size());
        mx = std::max(mx, b.size());
    }
    require(mx - mn <= 1, "11/5 quantile sizes must differ by at most one");

    // two blobs, then the brute-force density-reachability oracle
    Rng rng(8001);
    std::vector<EmbeddingVector> points;
    std::vector<std::string> ids;
    for (int i = 0; i < 16; ++i) {
        double cx = i < 8 ? 0.0 : 12.0;
        points.push_back({{cx + rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4)},
                          EmbeddingKind::text,
                          "toy"});
        ids.push_back("p" + std::to_string(i));
    }
    auto reports = cluster_prompts(points, ids, std::vector<bool>(16, false), 1.5, 3);
    require(reports.size() == 2, "expected exactly two clusters and no noise");
    for (const auto& r : reports) require(r.cluster_id >= 0, "no noise expected");

    auto dist = [&](std::size_t i, std::size_t j) {
        double dx = points[i].values[0] - points[j].values[0];
        double dy = points[i].values[1] - points[j].values[1];
        return std::sqrt(dx * dx + dy * dy);
    };
    // oracle: core points, connected components over eps-reachable cores
    std::vector<bool> core(16, false);
    for (std::size_t i = 0; i < 16; ++i) {
        int neighbors = 0;
        for (std::size_t j = 0; j < 16; ++j)
            if (dist(i, j) <= 1.5) ++neighbors;
        core[i] = neighbors >= 3;
    }
    std::vector<int> label(16, -1);
    int next = 0;
    for (std::size_t i = 0; i < 16; ++i) {
        if (!core[i] || label[i] != -1) continue;
        std::vector<std::size_t> stack = {i};
        label[i] = next;
        while (!stack.empty()) {
            std::size_t p = stack.back();
            stack.pop_back();
            for (std::size_t q = 0; q < 16; ++q)
                if (core[q] && label[q] == -1 && dist(p, q) <= 1.5) {
                    label[q] = next;
                    stack.push_back(q);
                }
        }
        ++next;
    }
    require(next == 2, "oracle expected two components");
    std::set<std::set<std::string>> oracle, produced;
    std::map<int, std::set<std::string>> by_label;
    for (std::size_t i = 0; i < 16; ++i) {
        require(core[i], "all fixture points must be core points");
        by_label[label[i]].insert(ids[i]);
    }
    for (auto& [l, members] : by_label) oracle.insert(members);
    for (const auto& r : reports)
        produced.insert(std::set<std::string>(r.member_ids.begin(), r.member_ids.end()));
    require(oracle == produced, "cluster partition differs from the oracle");
}

struct CliRun {
    std::string args;                       // after the binary name
    std::vector<std::string> outputs;       // files that must be byte-stable
};

void criterion_9_cli_determinism(const std::filesystem::path& scratch, const std::string& cli) {
    auto dir = scratch / "determinism";
    std::filesystem::create_directories(dir);
    std::string d = dir.string();

    auto run = [&](const std::string& args) {
        std::string cmd = cli + " " + args + " > /dev/null 2>&1";
        require(std::system(cmd.c_str()) == 0, "command failed: " + args);
    };

    // corpus used by every run below
    run("gen-corpus --out " + d + "/corpus --seed 91 --n-per-origin 30 --resolution 12 "
        "--origins real,SD,LD,GLIDE,DALLE2");
    std::string manifest = d + "/corpus/manifest.jsonl";

    std::vector<CliRun> runs = {
        {"train-detector --manifest " + manifest + " --mode hybrid --backend toy "
          "--fake-origin SD --n-per-class 30 --seed 92 --epochs 12 --lr 0.05 --hidden 32 "
          "--out " + d + "/det.model",
         {d + "/det.model", d + "/det.history", d + "/det.model.runconfig.json"}},
        {"train-detector --manifest " + manifest + " --mode image-only --fake-origin SD "
          "--n-per-class 16 --seed 93 --epochs 4 --arch tiny --lr 0.1 --out " + d + "/cdet.model",
         {d + "/cdet.model", d + "/cdet.history"}},
        {"train-attributor --manifest " + manifest + " --mode hybrid --backend toy "
          "--n-per-class 30 --seed 94 --epochs 12 --lr 0.05 --hidden 32 --out " + d + "/att.model",
         {d + "/att.model", d + "/att.history"}},
        {"detect --model " + d + "/det.model --manifest " + manifest + " --out " + d + "/batch.jsonl",
         {d + "/batch.jsonl"}},
        {"attribute --model " + d + "/att.model --manifest " + manifest + " --threshold 0.9 "
          "--out " + d + "/attbatch.jsonl",
         {d + "/attbatch.jsonl"}},
        {"attribute --model " + d + "/att.model --manifest " + manifest + " --sweep "
          "--n-per-class 20 --seed 95 --out " + d + "/sweep.tsv",
         {d + "/sweep.tsv"}},
        {"eval --model " + d + "/det.model --manifest " + manifest + " --fake-origin SD "
          "--n-per-class 25 --seed 96 --out " + d + "/eval",
         {d + "/eval.report.json", d + "/eval.confusion.tsv"}},
        {"cross-eval --model " + d + "/det.model --manifests " + manifest +
          " --origins SD,LD --n-per-class 20 --seed 97 --out " + d + "/cross",
         {d + "/cross.tsv", d + "/cross.summary.json"}},
        {"size-ablation --manifest " + manifest + " --mode hybrid --backend toy "
          "--fake-origin SD --sizes 8,16 --n-eval-per-class 10 --seed 98 --epochs 8 --lr 0.05 "
          "--hidden 32 --out " + d + "/ablate",
         {d + "/ablate.tsv", d + "/ablate.summary.json"}},
        {"fingerprint --manifest " + manifest + " --source SD --n 20 --seed 99 --out " + d + "/fp",
         {d + "/fp.fp.json", d + "/fp.pgm"}},
        {"prompt-analyze --what topics --manifest " + manifest + " --model " + d + "/det.model "
          "--fake-origin SD --seed 90 --out " + d + "/topics",
         {d + "/topics.tsv", d + "/topics.ppm"}},
        {"prompt-analyze --what clusters --manifest " + manifest + " --model " + d + "/det.model "
          "--backend toy --fake-origin SD --eps 0.4 --min-pts 2 --seed 90 --out " + d + "/clus",
         {d + "/clus.tsv", d + "/clus.summary.json"}},
        {"prompt-analyze --what structure --manifest " + manifest + " --model " + d +
          "/det.model --fake-origin SD --seed 90 --out " + d + "/struct",
         {d + "/struct.rows.tsv", d + "/struct.length_bins.tsv", d + "/struct.ratio_bins.tsv"}},
        {"prompt-analyze --what connection --manifest " + manifest + " --backend toy-joint "
          "--fake-origin SD --seed 90 --out " + d + "/conn",
         {d + "/conn.tsv", d + "/conn.summary.json", d + "/conn.ppm"}},
        {"prompt-analyze --what descriptiveness --manifest " + manifest + " --model " + d +
          "/det.model --backend toy-joint --fake-origin SD --n-per-class 20 --seed 90 --out " +
          d + "/desc",
         {d + "/desc.bins.tsv", d + "/desc.ppm"}},
    };

    for (const auto& step : runs) {
        run(step.args);
        std::map<std::string, std::string> first;
        for (const auto& f : step.outputs) first[f] = slurp(f);
        run(step.args);  // identical flags, same destinations
        for (const auto& f : step.outputs)
            require(first.at(f) == slurp(f), "re-run changed bytes of " + f);
    }

    // the corpus generator is deterministic as well
    run("gen-corpus --out " + d + "/corpus_b --seed 91 --n-per-origin 30 --resolution 12 "
        "--origins real,SD,LD,GLIDE,DALLE2");
    require(slurp(manifest) == slurp(d + "/corpus_b/manifest.jsonl"),
            "gen-corpus is not reproducible");
}

void criterion_10_split_invariants() {
    Rng rng(10001);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n_real = 5 + rng.below(60);
        std::size_t n_fake = 5 + rng.below(60);
        std::size_t n = 1 + rng.below(std::min(n_real, n_fake));
        auto manifest = testsupport::synthetic_manifest(
            {{Origin::real(), n_real}, {Origin::sd(), n_fake}});
        std::uint64_t seed = rng.next_u64();
        DatasetSplit split = build_detection_split(manifest, Origin::sd(), n, seed);

        std::size_t fake_count = 0, real_count = 0;
        std::set<std::string> train_ids;
        for (const auto& r : split.train) train_ids.insert(r.id);
        for (const auto& r : split.all()) (r.label == 0 ? fake_count : real_count) += 1;
        require(fake_count == n && real_count == n, "per-class counts differ");
        for (const auto& r : split.test)
            require(train_ids.count(r.id) == 0, "train and test overlap");

        DatasetSplit again = build_detection_split(manifest, Origin::sd(), n, seed);
        require(again.train.size() == split.train.size() && again.test.size() == split.test.size(),
                "re-run changed split sizes");
        for (std::size_t i = 0; i < split.train.size(); ++i)
            require(again.train[i].id == split.train[i].id, "re-run changed the train split");
        for (std::size_t i = 0; i < split.test.size(); ++i)
            require(again.test[i].id == split.test[i].id, "re-run changed the test split");
    }
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--cli") cli = argv[i + 1];
    if (cli.empty()) {
        std::fprintf(stderr, "usage: acceptance_tests --cli <path-to-synthscan>\n");
        return 2;
    }
    auto scratch = testsupport::fresh_dir("acceptance");

    struct Criterion {
        int id;
        const char* name;
        std::function<void()> fn;
    };
    const std::vector<Criterion> criteria = {
        {1, "fast DFT matches the naive oracle (1e-8) with Parseval (1e-6) under 5 s",
         [] { criterion_1_dft_oracle(); }},
        {2, "spectrum averaging matches the loop oracle (1e-9); constant image is DC-only",
         [] { criterion_2_spectrum_averaging(); }},
        {3, "gradient checks: MLP within 1e-4, conv net within 1e-3",
         [] { criterion_3_gradient_checks(); }},
        {4, "softmax sum/shift properties (1e-9); even connection split on identical images",
         [] { criterion_4_softmax_and_connection(); }},
        {5, "hybrid detection fixture reaches 0.95 holdout in 50 epochs; constant scores 0.5",
         [&] { criterion_5_hybrid_detection(scratch); }},
        {6, "attribution fixture reaches 0.95; routing monotone; sweep emits 11 rows",
         [&] { criterion_6_attribution(scratch, cli); }},
        {7, "explicit-prompt and stub-caption detection agree bitwise on 20 images",
         [&] { criterion_7_path_equivalence(scratch); }},
        {8, "quantile bin size profiles and two-blob clustering vs the reachability oracle",
         [] { criterion_8_binning_and_clustering(); }},
        {9, "every training/analysis subcommand is byte-identical across re-runs",
         [&] { criterion_9_cli_determinism(scratch, cli); }},
        {10, "balanced-split invariants over 100 random manifest/seed pairs",
         [] { criterion_10_split_invariants(); }},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        try {
            c.fn();
            std::printf("PASS criterion %2d: %s\n", c.id, c.name);
        } catch (const std::exception& e) {
            ++failures;
            std::printf("FAIL criterion %2d: %s -- %s\n", c.id, c.name, e.what());
        }
        std::fflush(stdout);
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
