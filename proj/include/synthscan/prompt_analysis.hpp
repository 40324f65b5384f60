#pragma once

#include <functional>
#include <string>
#include <vector>

#include "synthscan/dataset.hpp"
#include "synthscan/encoders.hpp"

namespace synthscan {

// ---------------------------------------------------------------------------
// prompt-image connection (which image a prompt binds to more strongly)

struct ConnectionDistribution {
    std::string prompt_id;
    double p_real = 0.5;
    double p_fake = 0.5;
};

// Softmax over (tau * sim_real, tau * sim_fake). Raw cosine gaps are small, so
// the default temperature is 100 (configurable at the call sites).
ConnectionDistribution connection_from_sims(const std::string& prompt_id, double sim_real,
                                            double sim_fake, double temperature);

ConnectionDistribution connection_distribution(const EncoderBackend& backend,
                                               const std::string& prompt_id,
                                               const std::string& prompt, const Image& real_image,
                                               const Image& fake_image, double temperature);

// Cosine similarity between a prompt's embedding and its image's embedding;
// needs a joint-space backend (equal image/text dims).
double descriptiveness(const EncoderBackend& backend, const std::string& prompt,
                       const Image& image);

// ---------------------------------------------------------------------------
// binning

struct ScoredSample {
    std::string id;
    double score = 0.0;
    double value = 0.0;  // whatever is aggregated per bin (accuracy, authenticity)
};

struct Bin {
    double score_min = 0.0;
    double score_max = 0.0;
    std::vector<std::string> ids;
    double mean_value = 0.0;

    std::size_t size() const { return ids.size(); }
};

enum class BinningMode { quantile, equal_width };

// Quantile mode: score-sorted slices whose sizes differ by at most one.
// Equal-width mode: fixed-width intervals over [min, max]; bins may be empty,
// and a degenerate score range collapses everything into the first bin.
std::vector<Bin> bin_by_scores(std::vector<ScoredSample> samples, int n_bins, BinningMode mode);

// Equal-count bins over descriptiveness scores (the default five).
std::vector<Bin> bin_by_descriptiveness(std::vector<ScoredSample> samples, int n_bins = 5,
                                        BinningMode mode = BinningMode::quantile);

// ---------------------------------------------------------------------------
// topic authenticity

struct TopicAuthenticity {
    std::string topic;
    std::size_t n_prompts = 0;
    double real_proportion = 0.0;
};

// Fraction of each topic's fake images the detector calls real, sorted
// descending. Records with several topics count toward each of them.
// top_k == 0 keeps every topic.
std::vector<TopicAuthenticity> topic_authenticity(
    const std::vector<const PromptImagePair*>& records,
    const std::function<bool(const PromptImagePair&)>& classified_real, std::size_t top_k = 0);

// ---------------------------------------------------------------------------
// prompt clustering (DBSCAN, Euclidean)

struct ClusterReport {
    int cluster_id = -1;  // -1 = noise
    std::vector<std::string> member_ids;
    std::vector<std::string> representatives;  // nearest to the cluster mean
    double real_proportion = 0.0;
};

std::vector<ClusterReport> cluster_prompts(const std::vector<EmbeddingVector>& embeddings,
                                           const std::vector<std::string>& ids,
                                           const std::vector<bool>& classified_real, double eps,
                                           int min_pts);

// ---------------------------------------------------------------------------
// structure analysis

class PosTagger {
public:
    virtual ~PosTagger() = default;
    // token arrives lowercased with edge punctuation stripped
    virtual bool is_noun(const std::string& token) const = 0;
};

// Deterministic built-in tagger: noun lexicon first, then a function-word
// lexicon, verbish suffixes (-ing/-ed/-ly), noun suffixes, default noun.
class LexiconTagger : public PosTagger {
public:
    bool is_noun(const std::string& token) const override;
};

std::vector<std::string> tokenize_prompt(const std::string& prompt);

double noun_ratio(const std::string& prompt, const PosTagger& tagger);

struct StructureRow {
    std::string id;
    std::size_t length = 0;  // characters, spaces included
    double noun_ratio = 0.0;
    double authenticity = 0.0;  // detector's real-class probability
};

struct StructureReport {
    std::vector<StructureRow> rows;
    std::vector<Bin> by_length;      // equal-width bins over prompt length
    std::vector<Bin> by_noun_ratio;  // equal-width bins over noun ratio
};

// bin counts are clamped to the record count so tiny fixtures stay valid
StructureReport structure_report(const std::vector<const PromptImagePair*>& records,
                                 const std::function<double(const PromptImagePair&)>& authenticity,
                                 const PosTagger& tagger, int length_bins = 5, int ratio_bins = 5);

}  // namespace synthscan
