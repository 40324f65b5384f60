#include "synthscan/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <json.hpp>

#include "synthscan/errors.hpp"
#include "synthscan/rng.hpp"

namespace synthscan {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

Origin Origin::parse(const std::string& s) {
    std::string l = lower(s);
    if (l == "real") return real();
    if (l == "sd") return sd();
    if (l == "ld") return ld();
    if (l == "glide") return glide();
    if (l == "dalle2") return dalle2();
    return other(s);
}

std::string Origin::str() const {
    switch (kind) {
        case OriginKind::real: return "real";
        case OriginKind::sd: return "SD";
        case OriginKind::ld: return "LD";
        case OriginKind::glide: return "GLIDE";
        case OriginKind::dalle2: return "DALLE2";
        case OriginKind::other: return name;
    }
    return name;
}

const PromptImagePair* DatasetManifest::find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &records[it->second];
}

const PromptImagePair& DatasetManifest::at(const std::string& id) const {
    const PromptImagePair* r = find(id);
    if (!r) raise_data("UnknownRecord", "record id '" + id + "' not in manifest");
    return *r;
}

void DatasetManifest::rebuild_index() {
    index_.clear();
    counts_by_origin.clear();
    index_.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        index_.emplace(records[i].id, i);
        ++counts_by_origin[records[i].origin.str()];
    }
}

ManifestLoadResult load_manifest(const std::filesystem::path& path, const LoadOptions& opts) {
    std::ifstream in(path);
    if (!in) raise_data("MissingFile", "cannot open manifest " + path.string());

    const std::filesystem::path base = path.has_parent_path() ? path.parent_path()
                                                              : std::filesystem::path(".");
    ManifestLoadResult result;
    result.manifest.source_uri = path.string();

    std::set<std::string> seen_ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            result.rejected.push_back({line_no, "MalformedRecord: not a JSON object"});
            continue;
        }

        PromptImagePair rec;
        try {
            rec.id = obj.at("id").get<std::string>();
            rec.image_path = obj.at("image_path").get<std::string>();
            rec.prompt = obj.value("prompt", std::string{});
            rec.origin = Origin::parse(obj.at("origin").get<std::string>());
            rec.dataset_tag = obj.value("dataset_tag", std::string{});
            if (obj.contains("topics")) rec.topics = obj.at("topics").get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception& e) {
            result.rejected.push_back({line_no, std::string("MalformedRecord: ") + e.what()});
            continue;
        }
        if (rec.id.empty()) {
            result.rejected.push_back({line_no, "MalformedRecord: empty id"});
            continue;
        }
        if (!seen_ids.insert(rec.id).second)
            raise_data("DuplicateId", "duplicate record id '" + rec.id + "' at line " +
                                          std::to_string(line_no));

        std::filesystem::path p(rec.image_path);
        rec.resolved_path = p.is_absolute() ? p : base / p;
        if (opts.check_paths && !std::filesystem::exists(rec.resolved_path)) {
            result.rejected.push_back(
                {line_no, "UnresolvablePath: " + rec.resolved_path.string()});
            continue;
        }
        result.manifest.records.push_back(std::move(rec));
    }
    result.manifest.rebuild_index();
    return result;
}

int scheme_classes(LabelScheme scheme) {
    return scheme == LabelScheme::detection ? 2 : 4;
}

std::string scheme_name(LabelScheme scheme) {
    return scheme == LabelScheme::detection ? "detection" : "attribution";
}

LabelScheme scheme_from_name(const std::string& name) {
    if (name == "detection") return LabelScheme::detection;
    if (name == "attribution") return LabelScheme::attribution;
    raise_data("SchemeMismatch", "unknown label scheme '" + name + "'");
}

int attribution_label(const Origin& origin) {
    switch (origin.kind) {
        case OriginKind::real: return 0;
        case OriginKind::sd: return 1;
        case OriginKind::ld: return 2;
        case OriginKind::glide: return 3;
        default: return -1;
    }
}

std::vector<LabeledId> DatasetSplit::all() const {
    std::vector<LabeledId> out = train;
    out.insert(out.end(), test.begin(), test.end());
    return out;
}

namespace {

// Seeded selection of n records of one origin, in canonical id order, then a
// per-class train/test cut. Per-class RNG streams keep the draw independent of
// which other classes exist.
void sample_class(const DatasetManifest& manifest, const Origin& origin, int label,
                  std::size_t n, std::uint64_t seed, std::uint64_t stream, double train_fraction,
                  std::vector<LabeledId>& train, std::vector<LabeledId>& test) {
    std::vector<const PromptImagePair*> pool;
    for (const auto& r : manifest.records)
        if (r.origin == origin) pool.push_back(&r);
    if (pool.size() < n)
        raise_data("InsufficientRecords",
                   origin.str() + ": available " + std::to_string(pool.size()) + ", requested " +
                       std::to_string(n));
    if (n == 0) return;

    std::sort(pool.begin(), pool.end(),
              [](const PromptImagePair* a, const PromptImagePair* b) { return a->id < b->id; });
    Rng rng(mix_seed(seed, stream));
    rng.shuffle(pool);

    std::size_t n_train = static_cast<std::size_t>(static_cast<double>(n) * train_fraction);
    if (n_train > n) n_train = n;
    for (std::size_t i = 0; i < n; ++i) {
        LabeledId rec{pool[i]->id, label};
        if (i < n_train)
            train.push_back(std::move(rec));
        else
            test.push_back(std::move(rec));
    }
}

void check_fraction(double train_fraction) {
    if (train_fraction < 0.0 || train_fraction > 1.0)
        raise_data("BadFraction", "train_fraction must lie in [0, 1]");
}

}  // namespace

DatasetSplit build_detection_split(const DatasetManifest& manifest, const Origin& fake_origin,
                                   std::size_t n_per_class, std::uint64_t seed,
                                   double train_fraction) {
    check_fraction(train_fraction);
    if (fake_origin.kind == OriginKind::real)
        raise_data("BadOrigin", "fake_origin must not be 'real'");
    DatasetSplit split;
    split.scheme = LabelScheme::detection;
    split.seed = seed;
    sample_class(manifest, fake_origin, 0, n_per_class, seed, 0, train_fraction, split.train,
                 split.test);
    sample_class(manifest, Origin::real(), 1, n_per_class, seed, 1, train_fraction, split.train,
                 split.test);
    return split;
}

DatasetSplit build_attribution_split(const DatasetManifest& manifest, std::size_t n_per_class,
                                     std::uint64_t seed, double train_fraction) {
    check_fraction(train_fraction);
    DatasetSplit split;
    split.scheme = LabelScheme::attribution;
    split.seed = seed;
    const Origin origins[4] = {Origin::real(), Origin::sd(), Origin::ld(), Origin::glide()};
    for (int label = 0; label < 4; ++label)
        sample_class(manifest, origins[label], label, n_per_class, seed,
                     static_cast<std::uint64_t>(label), train_fraction, split.train, split.test);
    return split;
}

std::vector<std::string> sample_origin_ids(const DatasetManifest& manifest, const Origin& origin,
                                           std::size_t n, std::uint64_t seed) {
    std::vector<LabeledId> picked, unused;
    sample_class(manifest, origin, 0, n, seed, fnv1a64(origin.str()), 1.0, picked, unused);
    std::vector<std::string> ids;
    ids.reserve(picked.size());
    for (auto& r : picked) ids.push_back(std::move(r.id));
    return ids;
}

std::vector<LabeledId> build_fiveclass_eval(const DatasetManifest& manifest,
                                            std::size_t n_per_class, std::uint64_t seed) {
    std::vector<LabeledId> out, unused;
    const Origin origins[4] = {Origin::real(), Origin::sd(), Origin::ld(), Origin::glide()};
    for (int label = 0; label < 4; ++label)
        sample_class(manifest, origins[label], label, n_per_class, seed,
                     static_cast<std::uint64_t>(label), 1.0, out, unused);

    // Pool every remaining origin as the unseen class, sampled jointly.
    std::vector<const PromptImagePair*> pool;
    for (const auto& r : manifest.records)
        if (attribution_label(r.origin) < 0) pool.push_back(&r);
    if (pool.size() < n_per_class)
        raise_data("InsufficientRecords", "unseen: available " + std::to_string(pool.size()) +
                                              ", requested " + std::to_string(n_per_class));
    std::sort(pool.begin(), pool.end(),
              [](const PromptImagePair* a, const PromptImagePair* b) { return a->id < b->id; });
    Rng rng(mix_seed(seed, kUnseenLabel));
    rng.shuffle(pool);
    for (std::size_t i = 0; i < n_per_class; ++i) out.push_back({pool[i]->id, kUnseenLabel});
    return out;
}

}  // namespace synthscan
