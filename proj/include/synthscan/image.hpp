#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace synthscan {

// 8-bit raster, interleaved rows. channels is 1 (gray) or 3 (RGB).
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;

    bool empty() const { return width == 0 || height == 0; }

    std::uint8_t at(int y, int x, int c) const {
        return pixels[static_cast<std::size_t>((y * width + x) * channels + c)];
    }
    std::uint8_t& at(int y, int x, int c) {
        return pixels[static_cast<std::size_t>((y * width + x) * channels + c)];
    }

    static Image create(int width, int height, int channels, std::uint8_t fill = 0);
};

struct GrayImage {
    int height = 0;
    int width = 0;
    std::vector<double> values;  // row-major, [0, 255] scale

    double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
    double& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
};

// Binary PPM (P6) / PGM (P5), maxval 255.
Image load_image(const std::filesystem::path& path);
void save_image(const Image& img, const std::filesystem::path& path);

Image resize_bilinear(const Image& img, int new_width, int new_height);

// Luminance 0.299 R + 0.587 G + 0.114 B; gray images pass through.
GrayImage to_gray(const Image& img);

// CHW float planes scaled to [0, 1]; single-channel input is replicated to 3.
std::vector<double> to_chw_float(const Image& img);

}  // namespace synthscan
