#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace synthscan {

enum class OriginKind { real, sd, ld, glide, dalle2, other };

struct Origin {
    OriginKind kind = OriginKind::other;
    std::string name;  // only used when kind == other

    static Origin real() { return {OriginKind::real, {}}; }
    static Origin sd() { return {OriginKind::sd, {}}; }
    static Origin ld() { return {OriginKind::ld, {}}; }
    static Origin glide() { return {OriginKind::glide, {}}; }
    static Origin dalle2() { return {OriginKind::dalle2, {}}; }
    static Origin other(std::string n) { return {OriginKind::other, std::move(n)}; }

    // Canonical names: real, SD, LD, GLIDE, DALLE2 (case-insensitive on parse);
    // anything else becomes other(<verbatim string>).
    static Origin parse(const std::string& s);
    std::string str() const;

    bool operator==(const Origin& o) const { return kind == o.kind && name == o.name; }
    bool operator!=(const Origin& o) const { return !(*this == o); }
    bool operator<(const Origin& o) const {
        if (kind != o.kind) return kind < o.kind;
        return name < o.name;
    }
};

struct PromptImagePair {
    std::string id;
    std::string image_path;  // as given in the manifest
    std::filesystem::path resolved_path;
    std::string prompt;  // may be empty
    Origin origin;
    std::string dataset_tag;
    std::vector<std::string> topics;  // optional manifest key
};

struct LineError {
    int line = 0;
    std::string reason;
};

struct DatasetManifest {
    std::vector<PromptImagePair> records;
    std::string source_uri;
    std::map<std::string, std::size_t> counts_by_origin;  // keyed by Origin::str()

    const PromptImagePair* find(const std::string& id) const;
    const PromptImagePair& at(const std::string& id) const;
    void rebuild_index();

private:
    std::unordered_map<std::string, std::size_t> index_;
};

struct LoadOptions {
    // Records whose image file cannot be resolved are rejected into the error
    // report. Off for synthetic manifests that never touch pixels.
    bool check_paths = true;
};

struct ManifestLoadResult {
    DatasetManifest manifest;
    std::vector<LineError> rejected;
};

// Line-delimited JSON objects with keys id, image_path, prompt, origin,
// dataset_tag and an optional topics array. Relative image paths resolve
// against the manifest's directory. Malformed lines land in `rejected`;
// duplicate ids and a missing file are hard errors.
ManifestLoadResult load_manifest(const std::filesystem::path& path, const LoadOptions& opts = {});

// detection: 0 = fake, 1 = real.  attribution: 0 = real, 1 = SD, 2 = LD, 3 = GLIDE.
enum class LabelScheme { detection, attribution };

int scheme_classes(LabelScheme scheme);
std::string scheme_name(LabelScheme scheme);
LabelScheme scheme_from_name(const std::string& name);
int attribution_label(const Origin& origin);  // -1 when the origin has no seen class

struct LabeledId {
    std::string id;
    int label = 0;
};

struct DatasetSplit {
    std::vector<LabeledId> train;
    std::vector<LabeledId> test;
    LabelScheme scheme = LabelScheme::detection;
    std::uint64_t seed = 0;

    std::vector<LabeledId> all() const;
};

// Both builders sample per class with a seeded Fisher-Yates over records in
// canonical id order, so manifests written in any order yield the same split.
// train_fraction picks how much of each class lands in `train` (default 4/5).
DatasetSplit build_detection_split(const DatasetManifest& manifest, const Origin& fake_origin,
                                   std::size_t n_per_class, std::uint64_t seed,
                                   double train_fraction = 0.8);

DatasetSplit build_attribution_split(const DatasetManifest& manifest, std::size_t n_per_class,
                                     std::uint64_t seed, double train_fraction = 0.8);

// Balanced five-class evaluation set for unseen-model routing: labels 0..3 as
// in the attribution scheme, 4 = every other (unseen) origin pooled together.
inline constexpr int kUnseenLabel = 4;
std::vector<LabeledId> build_fiveclass_eval(const DatasetManifest& manifest,
                                            std::size_t n_per_class, std::uint64_t seed);

// Seeded draw of n record ids of one origin (same canonical-order sampling as
// the split builders).
std::vector<std::string> sample_origin_ids(const DatasetManifest& manifest, const Origin& origin,
                                           std::size_t n, std::uint64_t seed);

}  // namespace synthscan
