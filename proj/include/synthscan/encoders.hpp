#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "synthscan/image.hpp"

namespace synthscan {

enum class EmbeddingKind { image, text, concat };

std::string embedding_kind_name(EmbeddingKind kind);
EmbeddingKind embedding_kind_from_name(const std::string& name);

struct EmbeddingVector {
    std::vector<double> values;
    EmbeddingKind kind = EmbeddingKind::image;
    std::string backend_id;

    std::size_t dim() const { return values.size(); }
};

// Feature-extraction backend. Implementations must be pure: byte-identical
// inputs yield bitwise-identical outputs, and instances are safe for
// concurrent read-only use once constructed.
class EncoderBackend {
public:
    virtual ~EncoderBackend() = default;

    virtual std::string backend_id() const = 0;
    virtual std::size_t image_dim() const = 0;
    virtual std::size_t text_dim() const = 0;
    virtual bool can_caption() const = 0;

    virtual EmbeddingVector encode_image(const Image& image) const = 0;
    virtual EmbeddingVector encode_text(const std::string& prompt) const = 0;
    virtual std::string generate_caption(const Image& image) const = 0;
};

// 10 image dims: per-channel mean (3, /255), per-channel std (3, /127.5),
// luminance row-gradient signed+absolute mean (2), column likewise (2).
// 16 text dims: hashed bag-of-words (lowercased whitespace tokens, fnv1a64
// mod 16, counts L2-normalized). Captions via a fixed template over rounded
// channel means.
class ToyBackend : public EncoderBackend {
public:
    std::string backend_id() const override { return "toy"; }
    std::size_t image_dim() const override { return 10; }
    std::size_t text_dim() const override { return 16; }
    bool can_caption() const override { return true; }

    EmbeddingVector encode_image(const Image& image) const override;
    EmbeddingVector encode_text(const std::string& prompt) const override;
    std::string generate_caption(const Image& image) const override;
};

// Joint-space variant for the cross-modal analyses (prompt-image similarity
// needs equal dims, as with CLIP-style encoders). Image side: the 10 toy
// features plus 6 luminance-histogram band fractions; text side unchanged.
class ToyJointBackend : public EncoderBackend {
public:
    std::string backend_id() const override { return "toy-joint"; }
    std::size_t image_dim() const override { return 16; }
    std::size_t text_dim() const override { return 16; }
    bool can_caption() const override { return true; }

    EmbeddingVector encode_image(const Image& image) const override;
    EmbeddingVector encode_text(const std::string& prompt) const override;
    std::string generate_caption(const Image& image) const override;
};

std::unique_ptr<EncoderBackend> make_backend(const std::string& id);

EmbeddingVector concat_embeddings(const EmbeddingVector& img, const EmbeddingVector& txt);

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

void l2_normalize(std::vector<double>& values);

// Line-delimited cache records {id, kind, backend_id, dim, values} with the
// values printed to 9 significant digits.
struct CachedEmbedding {
    std::string id;
    EmbeddingVector vec;
};

void write_embedding_cache(const std::filesystem::path& path,
                           const std::vector<CachedEmbedding>& entries);
std::vector<CachedEmbedding> read_embedding_cache(const std::filesystem::path& path);

}  // namespace synthscan
