#include "synthscan/fingerprint.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "synthscan/errors.hpp"
#include "synthscan/kernels.hpp"

namespace synthscan {

std::vector<std::complex<double>> dft2(const GrayImage& image) {
    if (image.height < 1 || image.width < 1) raise_data("EmptyImage", "dft2 of empty image");
    return kernels::dft2(image.values, image.height, image.width);
}

std::vector<double> average_magnitude(const std::vector<GrayImage>& images) {
    if (images.empty()) raise_data("EmptySequence", "no images to average");
    const int h = images[0].height, w = images[0].width;
    for (const auto& img : images)
        if (img.height != h || img.width != w)
            raise_data("MixedResolutions", "images must share one resolution");

    const std::size_t cells = static_cast<std::size_t>(h) * w;
    std::vector<double> acc(cells, 0.0);

    // Chunked map-reduce: per-image magnitudes in parallel, accumulation in
    // image order, so the result is independent of the thread count.
    constexpr std::size_t kChunk = 64;
    std::vector<std::vector<double>> mags(std::min(kChunk, images.size()));
    for (std::size_t base = 0; base < images.size(); base += kChunk) {
        const std::size_t take = std::min(kChunk, images.size() - base);
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(take); ++i) {
            auto spec = kernels::dft2(images[base + static_cast<std::size_t>(i)].values, h, w);
            auto& m = mags[static_cast<std::size_t>(i)];
            m.resize(cells);
            for (std::size_t c = 0; c < cells; ++c) m[c] = std::abs(spec[c]);
        }
        for (std::size_t i = 0; i < take; ++i)
            for (std::size_t c = 0; c < cells; ++c) acc[c] += mags[i][c];
    }
    const double inv = 1.0 / static_cast<double>(images.size());
    for (double& v : acc) v *= inv;
    return acc;
}

std::vector<double> center_shift(const std::vector<double>& m, int h, int w) {
    std::vector<double> out(m.size());
    const int sy = h / 2, sx = w / 2;
    for (int y = 0; y < h; ++y) {
        int ty = (y + sy) % h;
        for (int x = 0; x < w; ++x)
            out[static_cast<std::size_t>(ty) * w + (x + sx) % w] =
                m[static_cast<std::size_t>(y) * w + x];
    }
    return out;
}

SpectralFingerprint average_spectrum(const std::vector<GrayImage>& images,
                                     const std::string& source) {
    std::vector<double> avg = average_magnitude(images);
    for (double& v : avg) v = std::log1p(v);
    SpectralFingerprint fp;
    fp.height = images[0].height;
    fp.width = images[0].width;
    fp.magnitude = center_shift(avg, fp.height, fp.width);
    fp.n_images = images.size();
    fp.source = source;
    return fp;
}

double fingerprint_distance(const SpectralFingerprint& a, const SpectralFingerprint& b) {
    if (a.height != b.height || a.width != b.width)
        raise_data("ResolutionMismatch", "fingerprints have different resolutions");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.magnitude.size(); ++i) {
        double d = a.magnitude[i] - b.magnitude[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.magnitude.size()));
}

void render_spectrum(const SpectralFingerprint& fp, const std::filesystem::path& path) {
    if (fp.magnitude.empty()) raise_data("EmptyImage", "cannot render empty fingerprint");
    auto [mn_it, mx_it] = std::minmax_element(fp.magnitude.begin(), fp.magnitude.end());
    const double mn = *mn_it, mx = *mx_it;
    Image img = Image::create(fp.width, fp.height, 1);
    if (mx > mn) {
        const double scale = 255.0 / (mx - mn);
        for (std::size_t i = 0; i < fp.magnitude.size(); ++i)
            img.pixels[i] =
                static_cast<std::uint8_t>(std::lround((fp.magnitude[i] - mn) * scale));
    }
    save_image(img, path);
}

void save_fingerprint(const SpectralFingerprint& fp, const std::filesystem::path& path) {
    nlohmann::json j;
    j["source"] = fp.source;
    j["n_images"] = fp.n_images;
    j["height"] = fp.height;
    j["width"] = fp.width;
    j["magnitude"] = fp.magnitude;
    std::ofstream out(path);
    if (!out) raise_data("UnwritablePath", "cannot write " + path.string());
    out << j.dump() << "\n";
}

SpectralFingerprint load_fingerprint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise_data("MissingFile", "cannot open fingerprint " + path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) raise_data("MalformedRecord", "fingerprint file is not valid JSON");
    SpectralFingerprint fp;
    fp.source = j.at("source").get<std::string>();
    fp.n_images = j.at("n_images").get<std::size_t>();
    fp.height = j.at("height").get<int>();
    fp.width = j.at("width").get<int>();
    fp.magnitude = j.at("magnitude").get<std::vector<double>>();
    if (fp.magnitude.size() != static_cast<std::size_t>(fp.height) * fp.width)
        raise_data("MalformedRecord", "fingerprint magnitude size mismatch");
    return fp;
}

}  // namespace synthscan
