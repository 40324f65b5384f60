#include <algorithm>
#include <cmath>
#include <set>

#include <doctest.h>

#include "synthscan/errors.hpp"
#include "synthscan/prompt_analysis.hpp"
#include "test_support.hpp"

using namespace synthscan;

namespace {

PromptImagePair record(const std::string& id, const std::string& prompt,
                       std::vector<std::string> topics = {}) {
    PromptImagePair r;
    r.id = id;
    r.prompt = prompt;
    r.origin = Origin::sd();
    r.topics = std::move(topics);
    return r;
}

EmbeddingVector point2d(double x, double y) {
    return {{x, y}, EmbeddingKind::text, "toy"};
}

// Independent DBSCAN oracle: core points via pairwise distances, clusters as
// connected components of the core graph, borders attached to any reachable
// core cluster. Compares partitions of the core points and the noise set.
struct DbscanOracle {
    std::vector<int> labels;  // -1 noise; non-core borders may touch several
    std::vector<bool> core;
};

DbscanOracle dbscan_oracle(const std::vector<EmbeddingVector>& points, double eps, int min_pts) {
    const std::size_t n = points.size();
    auto dist2 = [&](std::size_t i, std::size_t j) {
        double acc = 0.0;
        for (std::size_t d = 0; d < points[i].values.size(); ++d) {
            double diff = points[i].values[d] - points[j].values[d];
            acc += diff * diff;
        }
        return acc;
    };
    DbscanOracle out;
    out.core.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        int count = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (dist2(i, j) <= eps * eps) ++count;
        out.core[i] = count >= min_pts;
    }
    out.labels.assign(n, -1);
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!out.core[i] || out.labels[i] != -1) continue;
        // flood fill over eps-connected core points
        std::vector<std::size_t> stack = {i};
        out.labels[i] = next;
        while (!stack.empty()) {
            std::size_t p = stack.back();
            stack.pop_back();
            for (std::size_t q = 0; q < n; ++q) {
                if (!out.core[q] || out.labels[q] != -1 || dist2(p, q) > eps * eps) continue;
                out.labels[q] = next;
                stack.push_back(q);
            }
        }
        ++next;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (out.core[i] || out.labels[i] != -1) continue;
        for (std::size_t q = 0; q < n; ++q)
            if (out.core[q] && dist2(i, q) <= eps * eps) {
                out.labels[i] = out.labels[q];
                break;
            }
    }
    return out;
}

std::set<std::set<std::string>> partition_of(const std::vector<ClusterReport>& reports) {
    std::set<std::set<std::string>> partition;
    for (const auto& c : reports) {
        if (c.cluster_id < 0) continue;
        partition.insert(std::set<std::string>(c.member_ids.begin(), c.member_ids.end()));
    }
    return partition;
}

}  // namespace

TEST_CASE("connection distribution: symmetry and closed form") {
    ConnectionDistribution same = connection_from_sims("p1", 0.9, 0.9, 100.0);
    CHECK(same.p_real == 0.5);
    CHECK(same.p_fake == 0.5);

    ConnectionDistribution d = connection_from_sims("p2", 0.2, 0.4, 100.0);
    double expect_fake = 1.0 / (1.0 + std::exp(-20.0));
    CHECK(d.p_fake == doctest::Approx(expect_fake).epsilon(1e-12));
    CHECK(d.p_real + d.p_fake == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(d.p_real > 0.0);
    CHECK(d.p_fake < 1.0);

    // swapping the similarities swaps the distribution exactly
    ConnectionDistribution swapped = connection_from_sims("p2", 0.4, 0.2, 100.0);
    CHECK(swapped.p_real == d.p_fake);
    CHECK(swapped.p_fake == d.p_real);

    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1), tau = rng.uniform(0.1, 200);
        ConnectionDistribution x = connection_from_sims("r", a, b, tau);
        CHECK(x.p_real + x.p_fake == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("connection distribution over identical images is exactly even") {
    ToyJointBackend joint;
    Image img = testsupport::noise_image(8, 42);
    ConnectionDistribution d =
        connection_distribution(joint, "id", "a dog on the field", img, img, 100.0);
    CHECK(d.p_real == 0.5);
    CHECK(d.p_fake == 0.5);
}

TEST_CASE("descriptiveness delegates to cosine similarity") {
    testsupport::StubBackend aligned({0.5, 0.5}, {0.5, 0.5});
    Image img = testsupport::noise_image(4, 1);
    CHECK(descriptiveness(aligned, "p", img) == doctest::Approx(1.0));

    testsupport::StubBackend orthogonal({1.0, 0.0}, {0.0, 1.0});
    CHECK(descriptiveness(orthogonal, "p", img) == doctest::Approx(0.0));

    // order-preserving over a batch
    std::vector<double> scores;
    for (int i = 0; i < 5; ++i) scores.push_back(descriptiveness(aligned, "p", img));
    CHECK(scores == std::vector<double>(5, scores[0]));
}

TEST_CASE("quantile binning: sizes, order and boundaries") {
    std::vector<ScoredSample> ten;
    for (int i = 0; i < 10; ++i) ten.push_back({"s" + std::to_string(i), double(i), 0.0});
    auto bins10 = bin_by_descriptiveness(ten, 5);
    REQUIRE(bins10.size() == 5);
    for (const auto& b : bins10) CHECK(b.size() == 2);

    std::vector<ScoredSample> eleven;
    for (int i = 0; i < 11; ++i) eleven.push_back({"s" + std::to_string(i), double(i), 0.0});
    auto bins11 = bin_by_descriptiveness(eleven, 5);
    REQUIRE(bins11.size() == 5);
    std::size_t mn = 99, mx = 0, total = 0;
    for (const auto& b : bins11) {
        mn = std::min(mn, b.size());
        mx = std::max(mx, b.size());
        total += b.size();
    }
    CHECK(total == 11);
    CHECK(mx - mn <= 1);

    // scores 1..100: slices cut at the 20/40/60/80 percentiles
    std::vector<ScoredSample> hundred;
    for (int i = 100; i >= 1; --i) hundred.push_back({"s" + std::to_string(i), double(i), 0.0});
    auto bins100 = bin_by_descriptiveness(hundred, 5);
    REQUIRE(bins100.size() == 5);
    CHECK(bins100[0].score_min == 1.0);
    CHECK(bins100[0].score_max == 20.0);
    CHECK(bins100[1].score_max == 40.0);
    CHECK(bins100[2].score_max == 60.0);
    CHECK(bins100[3].score_max == 80.0);
    CHECK(bins100[4].score_max == 100.0);
    for (std::size_t b = 1; b < 5; ++b) CHECK(bins100[b].score_min > bins100[b - 1].score_max);

    // the union of bins is the input multiset
    std::multiset<std::string> seen;
    for (const auto& b : bins100)
        for (const auto& id : b.ids) seen.insert(id);
    CHECK(seen.size() == 100);

    CHECK_THROWS_AS((void)bin_by_descriptiveness({{"a", 1, 0}, {"b", 2, 0}}, 5), Error);
}

TEST_CASE("per-bin means aggregate the value channel") {
    std::vector<ScoredSample> samples = {{"a", 1.0, 1.0}, {"b", 2.0, 0.0},
                                         {"c", 3.0, 1.0}, {"d", 4.0, 1.0}};
    auto bins = bin_by_scores(samples, 2, BinningMode::quantile);
    REQUIRE(bins.size() == 2);
    CHECK(bins[0].mean_value == doctest::Approx(0.5));
    CHECK(bins[1].mean_value == doctest::Approx(1.0));
}

TEST_CASE("topic authenticity counts hand-enumerated verdicts") {
    // six records; detector calls the first three real
    std::vector<PromptImagePair> storage = {
        record("r0", "p", {"skis", "person"}), record("r1", "p", {"skis"}),
        record("r2", "p", {"person"}),         record("r3", "p", {"skis"}),
        record("r4", "p", {"cat"}),            record("r5", "p", {"cat"})};
    std::vector<const PromptImagePair*> records;
    for (const auto& r : storage) records.push_back(&r);
    auto classified_real = [](const PromptImagePair& r) { return r.id <= "r2"; };

    // hand counts: person r0,r2 both real; skis r0,r1 real + r3 fake; cat never real
    auto rows = topic_authenticity(records, classified_real);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].topic == "person");
    CHECK(rows[0].n_prompts == 2);
    CHECK(rows[0].real_proportion == doctest::Approx(1.0));
    CHECK(rows[1].topic == "skis");
    CHECK(rows[1].n_prompts == 3);
    CHECK(rows[1].real_proportion == doctest::Approx(2.0 / 3.0));
    CHECK(rows[2].topic == "cat");
    CHECK(rows[2].real_proportion == doctest::Approx(0.0));

    auto top2 = topic_authenticity(records, classified_real, 2);
    CHECK(top2.size() == 2);

    std::vector<PromptImagePair> untagged = {record("u0", "p")};
    std::vector<const PromptImagePair*> bad = {&untagged[0]};
    try {
        (void)topic_authenticity(bad, classified_real);
        FAIL("expected NoTopics");
    } catch (const Error& e) {
        CHECK(e.code() == "NoTopics");
    }
}

TEST_CASE("two well-separated blobs form exactly two clusters with no noise") {
    std::vector<EmbeddingVector> points;
    std::vector<std::string> ids;
    Rng rng(4);
    for (int i = 0; i < 12; ++i) {
        double cx = i < 6 ? 0.0 : 10.0;
        points.push_back(point2d(cx + rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)));
        ids.push_back("p" + std::to_string(i));
    }
    std::vector<bool> real_flags(12, false);
    for (int i = 0; i < 6; ++i) real_flags[static_cast<std::size_t>(i)] = true;

    auto reports = cluster_prompts(points, ids, real_flags, 1.0, 3);
    REQUIRE(reports.size() == 2);
    CHECK(reports[0].member_ids.size() == 6);
    CHECK(reports[1].member_ids.size() == 6);
    CHECK(reports[0].real_proportion + reports[1].real_proportion == doctest::Approx(1.0));
    for (const auto& r : reports) {
        CHECK(r.cluster_id >= 0);
        CHECK(r.representatives.size() == 3);
        for (const auto& rep : r.representatives)
            CHECK(std::find(r.member_ids.begin(), r.member_ids.end(), rep) != r.member_ids.end());
    }

    // brute-force density-reachability oracle agrees on the partition
    DbscanOracle oracle = dbscan_oracle(points, 1.0, 3);
    std::set<std::set<std::string>> oracle_partition;
    std::map<int, std::set<std::string>> by_label;
    for (std::size_t i = 0; i < points.size(); ++i) {
        REQUIRE(oracle.labels[i] >= 0);  // no noise in this fixture
        by_label[oracle.labels[i]].insert(ids[i]);
    }
    for (auto& [label, members] : by_label) oracle_partition.insert(members);
    CHECK(partition_of(reports) == oracle_partition);
}

TEST_CASE("degenerate clustering cases") {
    std::vector<EmbeddingVector> same(5, point2d(1.0, 1.0));
    std::vector<std::string> ids = {"a", "b", "c", "d", "e"};
    std::vector<bool> flags(5, false);
    auto one = cluster_prompts(same, ids, flags, 0.5, 5);
    REQUIRE(one.size() == 1);
    CHECK(one[0].cluster_id == 0);
    CHECK(one[0].member_ids.size() == 5);

    std::vector<EmbeddingVector> lone = {point2d(0, 0)};
    auto noise = cluster_prompts(lone, {"x"}, {false}, 0.5, 2);
    REQUIRE(noise.size() == 1);
    CHECK(noise[0].cluster_id == -1);
    CHECK(noise[0].member_ids == std::vector<std::string>{"x"});

    CHECK_THROWS_AS((void)cluster_prompts(lone, {"x"}, {false}, 0.0, 2), Error);
    CHECK_THROWS_AS((void)cluster_prompts(lone, {"x"}, {false}, 0.5, 0), Error);
    std::vector<EmbeddingVector> mixed = {point2d(0, 0), {{1.0}, EmbeddingKind::text, "toy"}};
    CHECK_THROWS_AS((void)cluster_prompts(mixed, {"x", "y"}, {false, false}, 0.5, 1), Error);
}

TEST_CASE("cluster membership is stable under input permutation") {
    std::vector<EmbeddingVector> points;
    std::vector<std::string> ids;
    Rng rng(5);
    for (int i = 0; i < 10; ++i) {
        double cx = i < 5 ? 0.0 : 8.0;
        points.push_back(point2d(cx + rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)));
        ids.push_back("p" + std::to_string(i));
    }
    std::vector<bool> flags(10, false);
    auto forward = cluster_prompts(points, ids, flags, 1.0, 2);

    std::vector<EmbeddingVector> rpoints(points.rbegin(), points.rend());
    std::vector<std::string> rids(ids.rbegin(), ids.rend());
    auto reversed = cluster_prompts(rpoints, rids, flags, 1.0, 2);
    CHECK(partition_of(forward) == partition_of(reversed));
}

TEST_CASE("noun ratio under the built-in tagger") {
    LexiconTagger tagger;
    CHECK(noun_ratio("dog dog dog", tagger) == doctest::Approx(1.0));
    CHECK(noun_ratio("the a an", tagger) == doctest::Approx(0.0));
    CHECK(noun_ratio("a dog on a mat", tagger) == doctest::Approx(0.4));
    CHECK(noun_ratio("A DOG, on a mat!", tagger) == doctest::Approx(0.4));
    CHECK_THROWS_AS((void)noun_ratio("", tagger), Error);
    CHECK_THROWS_AS((void)noun_ratio("  ... ", tagger), Error);

    Rng rng(6);
    const char* words[] = {"a", "dog", "running", "nicely", "station", "the", "blueish"};
    for (int i = 0; i < 50; ++i) {
        std::string prompt;
        for (int w = 0; w < 6; ++w) {
            prompt += words[rng.below(7)];
            prompt += ' ';
        }
        double ratio = noun_ratio(prompt, tagger);
        CHECK(ratio >= 0.0);
        CHECK(ratio <= 1.0);
    }
}

TEST_CASE("structure report matches hand numbers on a fixed fixture") {
    std::vector<PromptImagePair> storage = {
        record("s0", "a dog"),            // length 5
        record("s1", "a dog on a mat"),   // length 14
        record("s2", "dog dog dog"),      // length 11
        record("s3", "the a an")};        // length 8
    std::vector<const PromptImagePair*> records;
    for (const auto& r : storage) records.push_back(&r);
    auto authenticity = [](const PromptImagePair& r) {
        if (r.id == "s0") return 1.0;
        if (r.id == "s1") return 0.5;
        if (r.id == "s2") return 0.25;
        return 0.0;
    };
    LexiconTagger tagger;
    StructureReport rep = structure_report(records, authenticity, tagger, 2, 2);
    REQUIRE(rep.rows.size() == 4);
    CHECK(rep.rows[0].length == 5);
    CHECK(rep.rows[0].noun_ratio == doctest::Approx(0.5));
    CHECK(rep.rows[1].length == 14);
    CHECK(rep.rows[1].noun_ratio == doctest::Approx(0.4));
    CHECK(rep.rows[2].noun_ratio == doctest::Approx(1.0));
    CHECK(rep.rows[3].noun_ratio == doctest::Approx(0.0));

    // equal-width length bins over [5, 14]: {5, 8} and {11, 14}
    REQUIRE(rep.by_length.size() == 2);
    CHECK(rep.by_length[0].size() == 2);
    CHECK(rep.by_length[0].mean_value == doctest::Approx(0.5));
    CHECK(rep.by_length[1].size() == 2);
    CHECK(rep.by_length[1].mean_value == doctest::Approx(0.375));
}

TEST_CASE("identical records collapse into one populated bin") {
    std::vector<PromptImagePair> storage = {record("t0", "a dog"), record("t1", "a dog"),
                                            record("t2", "a dog"), record("t3", "a dog")};
    std::vector<const PromptImagePair*> records;
    for (const auto& r : storage) records.push_back(&r);
    auto authenticity = [](const PromptImagePair&) { return 0.75; };
    LexiconTagger tagger;
    StructureReport rep = structure_report(records, authenticity, tagger, 3, 3);
    for (std::size_t i = 1; i < rep.rows.size(); ++i) {
        CHECK(rep.rows[i].length == rep.rows[0].length);
        CHECK(rep.rows[i].noun_ratio == rep.rows[0].noun_ratio);
        CHECK(rep.rows[i].authenticity == rep.rows[0].authenticity);
    }
    int populated = 0;
    for (const auto& b : rep.by_length) populated += b.size() > 0;
    CHECK(populated == 1);
}
