#include "synthscan/prompt_analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>

#include "synthscan/errors.hpp"

namespace synthscan {

ConnectionDistribution connection_from_sims(const std::string& prompt_id, double sim_real,
                                            double sim_fake, double temperature) {
    if (!std::isfinite(sim_real) || !std::isfinite(sim_fake))
        raise_data("NonFiniteInput", "similarities must be finite");
    double a = temperature * sim_real;
    double b = temperature * sim_fake;
    double mx = std::max(a, b);
    double ea = std::exp(a - mx);
    double eb = std::exp(b - mx);
    ConnectionDistribution d;
    d.prompt_id = prompt_id;
    d.p_real = ea / (ea + eb);
    d.p_fake = eb / (ea + eb);
    return d;
}

ConnectionDistribution connection_distribution(const EncoderBackend& backend,
                                               const std::string& prompt_id,
                                               const std::string& prompt, const Image& real_image,
                                               const Image& fake_image, double temperature) {
    EmbeddingVector p = backend.encode_text(prompt);
    double sim_real = cosine_similarity(p, backend.encode_image(real_image));
    double sim_fake = cosine_similarity(p, backend.encode_image(fake_image));
    return connection_from_sims(prompt_id, sim_real, sim_fake, temperature);
}

double descriptiveness(const EncoderBackend& backend, const std::string& prompt,
                       const Image& image) {
    return cosine_similarity(backend.encode_text(prompt), backend.encode_image(image));
}

// ---------------------------------------------------------------------------

std::vector<Bin> bin_by_scores(std::vector<ScoredSample> samples, int n_bins, BinningMode mode) {
    if (n_bins < 1) raise_data("BadBins", "n_bins must be >= 1");
    if (samples.empty()) raise_data("TooFewSamples", "no samples to bin");

    std::stable_sort(samples.begin(), samples.end(),
                     [](const ScoredSample& a, const ScoredSample& b) { return a.score < b.score; });

    std::vector<Bin> bins;
    auto finalize = [](Bin& bin, double value_sum) {
        bin.mean_value = bin.ids.empty() ? 0.0 : value_sum / static_cast<double>(bin.ids.size());
    };

    if (mode == BinningMode::quantile) {
        const std::size_t n = samples.size();
        const std::size_t base = n / static_cast<std::size_t>(n_bins);
        const std::size_t extra = n % static_cast<std::size_t>(n_bins);
        std::size_t pos = 0;
        for (int b = 0; b < n_bins; ++b) {
            std::size_t take = base + (static_cast<std::size_t>(b) < extra ? 1 : 0);
            Bin bin;
            double value_sum = 0.0;
            for (std::size_t i = 0; i < take; ++i, ++pos) {
                bin.ids.push_back(samples[pos].id);
                value_sum += samples[pos].value;
            }
            if (!bin.ids.empty()) {
                bin.score_min = samples[pos - take].score;
                bin.score_max = samples[pos - 1].score;
            }
            finalize(bin, value_sum);
            bins.push_back(std::move(bin));
        }
    } else {
        const double lo = samples.front().score;
        const double hi = samples.back().score;
        const double width = (hi - lo) / n_bins;
        bins.resize(static_cast<std::size_t>(n_bins));
        std::vector<double> sums(static_cast<std::size_t>(n_bins), 0.0);
        for (int b = 0; b < n_bins; ++b) {
            bins[static_cast<std::size_t>(b)].score_min = lo + b * width;
            bins[static_cast<std::size_t>(b)].score_max = lo + (b + 1) * width;
        }
        for (const auto& s : samples) {
            int b = width > 0.0 ? std::min(n_bins - 1, static_cast<int>((s.score - lo) / width))
                                : 0;
            bins[static_cast<std::size_t>(b)].ids.push_back(s.id);
            sums[static_cast<std::size_t>(b)] += s.value;
        }
        for (int b = 0; b < n_bins; ++b)
            finalize(bins[static_cast<std::size_t>(b)], sums[static_cast<std::size_t>(b)]);
    }
    return bins;
}

std::vector<Bin> bin_by_descriptiveness(std::vector<ScoredSample> samples, int n_bins,
                                        BinningMode mode) {
    if (static_cast<int>(samples.size()) < n_bins)
        raise_data("TooFewSamples", std::to_string(samples.size()) + " samples for " +
                                        std::to_string(n_bins) + " bins");
    return bin_by_scores(std::move(samples), n_bins, mode);
}

// ---------------------------------------------------------------------------

std::vector<TopicAuthenticity> topic_authenticity(
    const std::vector<const PromptImagePair*>& records,
    const std::function<bool(const PromptImagePair&)>& classified_real, std::size_t top_k) {
    if (records.empty()) raise_data("EmptyDataset", "no records for topic analysis");
    std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // topic -> {n, n_real}
    for (const PromptImagePair* rec : records) {
        if (rec->topics.empty())
            raise_data("NoTopics", "record '" + rec->id + "' carries no topic tags");
        bool real = classified_real(*rec);
        for (const auto& topic : rec->topics) {
            auto& c = counts[topic];
            ++c.first;
            if (real) ++c.second;
        }
    }
    std::vector<TopicAuthenticity> out;
    out.reserve(counts.size());
    for (const auto& [topic, c] : counts)
        out.push_back({topic, c.first,
                       static_cast<double>(c.second) / static_cast<double>(c.first)});
    std::stable_sort(out.begin(), out.end(), [](const TopicAuthenticity& a,
                                                const TopicAuthenticity& b) {
        if (a.real_proportion != b.real_proportion) return a.real_proportion > b.real_proportion;
        return a.topic < b.topic;
    });
    if (top_k > 0 && out.size() > top_k) out.resize(top_k);
    return out;
}

// ---------------------------------------------------------------------------

namespace {

double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

}  // namespace

std::vector<ClusterReport> cluster_prompts(const std::vector<EmbeddingVector>& embeddings,
                                           const std::vector<std::string>& ids,
                                           const std::vector<bool>& classified_real, double eps,
                                           int min_pts) {
    if (!(eps > 0.0)) raise_data("BadEps", "eps must be > 0");
    if (min_pts < 1) raise_data("BadMinPts", "min_pts must be >= 1");
    if (embeddings.size() != ids.size() || embeddings.size() != classified_real.size())
        raise_data("ShapeMismatch", "embeddings, ids and verdicts must align");
    const std::size_t n = embeddings.size();
    if (n == 0) return {};
    for (const auto& e : embeddings)
        if (e.dim() != embeddings[0].dim())
            raise_data("DimMismatch", "embeddings must share one dimension");

    const double eps2 = eps * eps;
    std::vector<std::vector<std::size_t>> neighbors(n);  // includes the point itself
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (sqdist(embeddings[i].values, embeddings[j].values) <= eps2)
                neighbors[i].push_back(j);

    constexpr int kUnvisited = -2, kNoise = -1;
    std::vector<int> label(n, kUnvisited);
    int next_cluster = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (label[i] != kUnvisited) continue;
        if (neighbors[i].size() < static_cast<std::size_t>(min_pts)) {
            label[i] = kNoise;
            continue;
        }
        int cid = next_cluster++;
        label[i] = cid;
        std::vector<std::size_t> frontier = neighbors[i];
        for (std::size_t f = 0; f < frontier.size(); ++f) {
            std::size_t q = frontier[f];
            if (label[q] == kNoise) label[q] = cid;  // border point
            if (label[q] != kUnvisited) continue;
            label[q] = cid;
            if (neighbors[q].size() >= static_cast<std::size_t>(min_pts))
                frontier.insert(frontier.end(), neighbors[q].begin(), neighbors[q].end());
        }
    }

    std::vector<ClusterReport> reports(static_cast<std::size_t>(next_cluster));
    for (int c = 0; c < next_cluster; ++c) reports[static_cast<std::size_t>(c)].cluster_id = c;
    ClusterReport noise;
    noise.cluster_id = -1;

    std::vector<std::size_t> real_counts(static_cast<std::size_t>(next_cluster) + 1, 0);
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(next_cluster));
    for (std::size_t i = 0; i < n; ++i) {
        if (label[i] == kNoise) {
            noise.member_ids.push_back(ids[i]);
            if (classified_real[i]) ++real_counts[static_cast<std::size_t>(next_cluster)];
        } else {
            reports[static_cast<std::size_t>(label[i])].member_ids.push_back(ids[i]);
            members[static_cast<std::size_t>(label[i])].push_back(i);
            if (classified_real[i]) ++real_counts[static_cast<std::size_t>(label[i])];
        }
    }

    for (int c = 0; c < next_cluster; ++c) {
        auto& rep = reports[static_cast<std::size_t>(c)];
        rep.real_proportion = static_cast<double>(real_counts[static_cast<std::size_t>(c)]) /
                              static_cast<double>(rep.member_ids.size());
        // centroid, then the 3 members closest to it
        const std::size_t dim = embeddings[0].dim();
        std::vector<double> mean(dim, 0.0);
        for (std::size_t idx : members[static_cast<std::size_t>(c)])
            for (std::size_t d = 0; d < dim; ++d) mean[d] += embeddings[idx].values[d];
        for (double& v : mean) v /= static_cast<double>(members[static_cast<std::size_t>(c)].size());
        std::vector<std::pair<double, std::size_t>> ranked;
        for (std::size_t idx : members[static_cast<std::size_t>(c)])
            ranked.emplace_back(sqdist(embeddings[idx].values, mean), idx);
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t r = 0; r < std::min<std::size_t>(3, ranked.size()); ++r)
            rep.representatives.push_back(ids[ranked[r].second]);
    }
    if (!noise.member_ids.empty()) {
        noise.real_proportion = static_cast<double>(real_counts[static_cast<std::size_t>(next_cluster)]) /
                                static_cast<double>(noise.member_ids.size());
        reports.push_back(std::move(noise));
    }
    return reports;
}

// ---------------------------------------------------------------------------

std::vector<std::string> tokenize_prompt(const std::string& prompt) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        // strip edge punctuation, keep inner characters verbatim
        std::size_t b = 0, e = cur.size();
        while (b < e && !std::isalnum(static_cast<unsigned char>(cur[b]))) ++b;
        while (e > b && !std::isalnum(static_cast<unsigned char>(cur[e - 1]))) --e;
        if (e > b) tokens.push_back(cur.substr(b, e - b));
        cur.clear();
    };
    for (unsigned char c : prompt) {
        if (std::isspace(c))
            flush();
        else
            cur.push_back(static_cast<char>(std::tolower(c)));
    }
    flush();
    return tokens;
}

double noun_ratio(const std::string& prompt, const PosTagger& tagger) {
    std::vector<std::string> tokens = tokenize_prompt(prompt);
    if (tokens.empty()) raise_data("EmptyPrompt", "prompt has no tokens");
    std::size_t nouns = 0;
    for (const auto& t : tokens)
        if (tagger.is_noun(t)) ++nouns;
    return static_cast<double>(nouns) / static_cast<double>(tokens.size());
}

StructureReport structure_report(const std::vector<const PromptImagePair*>& records,
                                 const std::function<double(const PromptImagePair&)>& authenticity,
                                 const PosTagger& tagger, int length_bins, int ratio_bins) {
    if (records.empty()) raise_data("EmptyDataset", "no records for structure analysis");
    StructureReport report;
    std::vector<ScoredSample> by_length, by_ratio;
    for (const PromptImagePair* rec : records) {
        StructureRow row;
        row.id = rec->id;
        row.length = rec->prompt.size();
        row.noun_ratio = noun_ratio(rec->prompt, tagger);
        row.authenticity = authenticity(*rec);
        by_length.push_back({row.id, static_cast<double>(row.length), row.authenticity});
        by_ratio.push_back({row.id, row.noun_ratio, row.authenticity});
        report.rows.push_back(std::move(row));
    }
    int lb = std::min<int>(length_bins, static_cast<int>(records.size()));
    int rb = std::min<int>(ratio_bins, static_cast<int>(records.size()));
    report.by_length = bin_by_scores(std::move(by_length), std::max(1, lb), BinningMode::equal_width);
    report.by_noun_ratio =
        bin_by_scores(std::move(by_ratio), std::max(1, rb), BinningMode::equal_width);
    return report;
}

}  // namespace synthscan
