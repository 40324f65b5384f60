#include "synthscan/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "synthscan/errors.hpp"

namespace synthscan {

Image Image::create(int width, int height, int channels, std::uint8_t fill) {
    Image img;
    img.width = width;
    img.height = height;
    img.channels = channels;
    img.pixels.assign(static_cast<std::size_t>(width) * height * channels, fill);
    return img;
}

namespace {

// Reads one whitespace-delimited token, skipping '#' comments per the netpbm grammar.
bool next_token(std::istream& in, std::string& tok) {
    tok.clear();
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (std::isspace(ch)) {
            ch = in.get();
        } else {
            break;
        }
    }
    if (ch == EOF) return false;
    while (ch != EOF && !std::isspace(ch)) {
        tok.push_back(static_cast<char>(ch));
        ch = in.get();
    }
    return true;
}

int parse_dim(const std::string& tok, const std::filesystem::path& path) {
    try {
        std::size_t pos = 0;
        long v = std::stol(tok, &pos);
        if (pos != tok.size() || v <= 0 || v > 1 << 20) throw std::invalid_argument(tok);
        return static_cast<int>(v);
    } catch (const std::exception&) {
        raise_data("UndecodableImage", "bad header field '" + tok + "' in " + path.string());
    }
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise_data("MissingFile", "cannot open image " + path.string());

    std::string magic;
    if (!next_token(in, magic) || (magic != "P5" && magic != "P6"))
        raise_data("UndecodableImage", "unsupported format in " + path.string() + " (want P5/P6)");

    std::string tok;
    if (!next_token(in, tok)) raise_data("UndecodableImage", "truncated header in " + path.string());
    int width = parse_dim(tok, path);
    if (!next_token(in, tok)) raise_data("UndecodableImage", "truncated header in " + path.string());
    int height = parse_dim(tok, path);
    if (!next_token(in, tok)) raise_data("UndecodableImage", "truncated header in " + path.string());
    if (tok != "255") raise_data("UndecodableImage", "unsupported maxval " + tok + " in " + path.string());

    Image img;
    img.width = width;
    img.height = height;
    img.channels = magic == "P6" ? 3 : 1;
    std::size_t n = static_cast<std::size_t>(width) * height * img.channels;
    img.pixels.resize(n);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
        raise_data("UndecodableImage", "truncated pixel data in " + path.string());
    return img;
}

void save_image(const Image& img, const std::filesystem::path& path) {
    if (img.empty() || (img.channels != 1 && img.channels != 3))
        raise_data("UndecodableImage", "refusing to write empty or non-1/3-channel image");
    std::ofstream out(path, std::ios::binary);
    if (!out) raise_data("UnwritablePath", "cannot write " + path.string());
    out << (img.channels == 3 ? "P6" : "P5") << "\n"
        << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) raise_data("UnwritablePath", "short write to " + path.string());
}

Image resize_bilinear(const Image& img, int new_width, int new_height) {
    if (img.empty()) raise_data("EmptyImage", "cannot resize empty image");
    if (new_width <= 0 || new_height <= 0) raise_data("BadDimension", "resize target must be positive");
    if (img.width == new_width && img.height == new_height) return img;

    Image out = Image::create(new_width, new_height, img.channels);
    double sx = static_cast<double>(img.width) / new_width;
    double sy = static_cast<double>(img.height) / new_height;
    for (int y = 0; y < new_height; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
        int y0 = static_cast<int>(fy);
        int y1 = std::min(y0 + 1, img.height - 1);
        double wy = fy - y0;
        for (int x = 0; x < new_width; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
            int x0 = static_cast<int>(fx);
            int x1 = std::min(x0 + 1, img.width - 1);
            double wx = fx - x0;
            for (int c = 0; c < img.channels; ++c) {
                double top = (1.0 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c);
                double bot = (1.0 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c);
                double v = (1.0 - wy) * top + wy * bot;
                out.at(y, x, c) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
        }
    }
    return out;
}

GrayImage to_gray(const Image& img) {
    if (img.empty()) raise_data("EmptyImage", "cannot convert empty image");
    GrayImage g;
    g.height = img.height;
    g.width = img.width;
    g.values.resize(static_cast<std::size_t>(img.width) * img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double v;
            if (img.channels == 1) {
                v = img.at(y, x, 0);
            } else {
                v = 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
            }
            g.at(y, x) = v;
        }
    }
    return g;
}

std::vector<double> to_chw_float(const Image& img) {
    if (img.empty()) raise_data("EmptyImage", "cannot convert empty image");
    std::size_t plane = static_cast<std::size_t>(img.width) * img.height;
    std::vector<double> out(3 * plane);
    for (int c = 0; c < 3; ++c) {
        int src_c = img.channels == 1 ? 0 : c;
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                out[c * plane + static_cast<std::size_t>(y) * img.width + x] =
                    img.at(y, x, src_c) / 255.0;
    }
    return out;
}

}  // namespace synthscan
