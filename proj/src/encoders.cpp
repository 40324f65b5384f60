#include "synthscan/encoders.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "synthscan/errors.hpp"
#include "synthscan/rng.hpp"

namespace synthscan {

std::string embedding_kind_name(EmbeddingKind kind) {
    switch (kind) {
        case EmbeddingKind::image: return "image";
        case EmbeddingKind::text: return "text";
        case EmbeddingKind::concat: return "concat";
    }
    return "image";
}

EmbeddingKind embedding_kind_from_name(const std::string& name) {
    if (name == "image") return EmbeddingKind::image;
    if (name == "text") return EmbeddingKind::text;
    if (name == "concat") return EmbeddingKind::concat;
    raise_data("KindMismatch", "unknown embedding kind '" + name + "'");
}

namespace {

struct ChannelStats {
    double mean[3] = {0, 0, 0};
    double stdev[3] = {0, 0, 0};
};

ChannelStats channel_stats(const Image& img) {
    ChannelStats st;
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    for (int c = 0; c < 3; ++c) {
        int src_c = img.channels == 1 ? 0 : c;
        double sum = 0.0;
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) sum += img.at(y, x, src_c);
        double mean = sum / static_cast<double>(n);
        double var = 0.0;
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                double d = img.at(y, x, src_c) - mean;
                var += d * d;
            }
        st.mean[c] = mean;
        st.stdev[c] = std::sqrt(var / static_cast<double>(n));
    }
    return st;
}

// Signed and absolute means of adjacent-pixel luminance differences along one
// axis; both zero when the axis has fewer than two pixels.
void gradient_stats(const GrayImage& g, bool rows, double& signed_mean, double& abs_mean) {
    signed_mean = 0.0;
    abs_mean = 0.0;
    int h = g.height, w = g.width;
    std::size_t count = 0;
    double sum = 0.0, asum = 0.0;
    if (rows) {
        for (int y = 0; y + 1 < h; ++y)
            for (int x = 0; x < w; ++x) {
                double d = g.at(y + 1, x) - g.at(y, x);
                sum += d;
                asum += std::fabs(d);
                ++count;
            }
    } else {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x + 1 < w; ++x) {
                double d = g.at(y, x + 1) - g.at(y, x);
                sum += d;
                asum += std::fabs(d);
                ++count;
            }
    }
    if (count > 0) {
        signed_mean = sum / static_cast<double>(count);
        abs_mean = asum / static_cast<double>(count);
    }
}

std::vector<double> toy_image_features(const Image& img) {
    if (img.empty()) raise_data("UndecodableImage", "cannot encode empty image");
    ChannelStats st = channel_stats(img);
    GrayImage g = to_gray(img);
    double row_signed, row_abs, col_signed, col_abs;
    gradient_stats(g, true, row_signed, row_abs);
    gradient_stats(g, false, col_signed, col_abs);

    std::vector<double> f(10);
    for (int c = 0; c < 3; ++c) f[c] = st.mean[c] / 255.0;
    for (int c = 0; c < 3; ++c) f[3 + c] = st.stdev[c] / 127.5;
    f[6] = (row_signed / 255.0 + 1.0) / 2.0;
    f[7] = row_abs / 255.0;
    f[8] = (col_signed / 255.0 + 1.0) / 2.0;
    f[9] = col_abs / 255.0;
    return f;
}

std::vector<double> hashed_bow(const std::string& prompt, std::size_t dim) {
    std::vector<double> counts(dim, 0.0);
    std::string token;
    std::size_t n_tokens = 0;
    auto flush = [&] {
        if (token.empty()) return;
        counts[fnv1a64(token) % dim] += 1.0;
        ++n_tokens;
        token.clear();
    };
    for (unsigned char c : prompt) {
        if (std::isspace(c)) {
            flush();
        } else {
            token.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    flush();
    if (n_tokens == 0) raise_data("EmptyPrompt", "prompt has no tokens");
    l2_normalize(counts);
    return counts;
}

std::string caption_from_means(const Image& img) {
    if (img.empty()) raise_data("UndecodableImage", "cannot caption empty image");
    ChannelStats st = channel_stats(img);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "image with mean rgb (%ld,%ld,%ld)", std::lround(st.mean[0]),
                  std::lround(st.mean[1]), std::lround(st.mean[2]));
    return buf;
}

}  // namespace

EmbeddingVector ToyBackend::encode_image(const Image& image) const {
    return {toy_image_features(image), EmbeddingKind::image, backend_id()};
}

EmbeddingVector ToyBackend::encode_text(const std::string& prompt) const {
    return {hashed_bow(prompt, text_dim()), EmbeddingKind::text, backend_id()};
}

std::string ToyBackend::generate_caption(const Image& image) const {
    return caption_from_means(image);
}

EmbeddingVector ToyJointBackend::encode_image(const Image& image) const {
    std::vector<double> f = toy_image_features(image);
    GrayImage g = to_gray(image);
    double bands[6] = {0, 0, 0, 0, 0, 0};
    for (double v : g.values) {
        int b = std::min(5, static_cast<int>(v * 6.0 / 256.0));
        bands[std::max(0, b)] += 1.0;
    }
    for (double band : bands) f.push_back(band / static_cast<double>(g.values.size()));
    return {std::move(f), EmbeddingKind::image, backend_id()};
}

EmbeddingVector ToyJointBackend::encode_text(const std::string& prompt) const {
    return {hashed_bow(prompt, text_dim()), EmbeddingKind::text, backend_id()};
}

std::string ToyJointBackend::generate_caption(const Image& image) const {
    return caption_from_means(image);
}

std::unique_ptr<EncoderBackend> make_backend(const std::string& id) {
    if (id == "toy") return std::make_unique<ToyBackend>();
    if (id == "toy-joint") return std::make_unique<ToyJointBackend>();
    raise_backend("UnknownBackend", "no encoder backend named '" + id + "'");
}

EmbeddingVector concat_embeddings(const EmbeddingVector& img, const EmbeddingVector& txt) {
    if (img.kind != EmbeddingKind::image || txt.kind != EmbeddingKind::text)
        raise_data("KindMismatch", "concat expects (image, text) in that order");
    if (img.backend_id != txt.backend_id)
        raise_backend("BackendMismatch",
                      "embeddings come from '" + img.backend_id + "' and '" + txt.backend_id + "'");
    EmbeddingVector out;
    out.kind = EmbeddingKind::concat;
    out.backend_id = img.backend_id;
    out.values.reserve(img.values.size() + txt.values.size());
    out.values.insert(out.values.end(), img.values.begin(), img.values.end());
    out.values.insert(out.values.end(), txt.values.begin(), txt.values.end());
    return out;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim())
        raise_data("DimMismatch", "cosine over dims " + std::to_string(a.dim()) + " and " +
                                      std::to_string(b.dim()));
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) raise_data("ZeroVector", "cosine undefined for all-zero vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

void l2_normalize(std::vector<double>& values) {
    double n = 0.0;
    for (double v : values) n += v * v;
    if (n == 0.0) return;
    n = std::sqrt(n);
    for (double& v : values) v /= n;
}

void write_embedding_cache(const std::filesystem::path& path,
                           const std::vector<CachedEmbedding>& entries) {
    std::ofstream out(path);
    if (!out) raise_data("UnwritablePath", "cannot write cache " + path.string());
    char buf[48];
    for (const auto& e : entries) {
        nlohmann::json header = {{"id", e.id},
                                 {"kind", embedding_kind_name(e.vec.kind)},
                                 {"backend_id", e.vec.backend_id},
                                 {"dim", e.vec.dim()}};
        std::string line = header.dump();
        line.pop_back();  // reopen the object to append the values array
        line += ",\"values\":[";
        for (std::size_t i = 0; i < e.vec.values.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.9g", e.vec.values[i]);
            if (i) line += ',';
            line += buf;
        }
        line += "]}";
        out << line << "\n";
    }
}

std::vector<CachedEmbedding> read_embedding_cache(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise_data("MissingFile", "cannot open cache " + path.string());
    std::vector<CachedEmbedding> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
        if (obj.is_discarded())
            raise_data("MalformedRecord", "cache line " + std::to_string(line_no));
        CachedEmbedding e;
        e.id = obj.at("id").get<std::string>();
        e.vec.kind = embedding_kind_from_name(obj.at("kind").get<std::string>());
        e.vec.backend_id = obj.at("backend_id").get<std::string>();
        e.vec.values = obj.at("values").get<std::vector<double>>();
        if (e.vec.values.size() != obj.at("dim").get<std::size_t>())
            raise_data("MalformedRecord",
                       "cache line " + std::to_string(line_no) + ": dim mismatch");
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace synthscan
