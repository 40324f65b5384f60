#pragma once

#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include "synthscan/image.hpp"

namespace synthscan {

// Averaged, log1p-scaled, center-shifted Fourier magnitude of one image source.
struct SpectralFingerprint {
    std::vector<double> magnitude;  // H x W row-major
    int height = 0;
    int width = 0;
    std::size_t n_images = 0;
    std::string source;

    double at(int y, int x) const { return magnitude[static_cast<std::size_t>(y) * width + x]; }
};

// Forward 2-D DFT of a grayscale raster (fast along power-of-two dimensions,
// direct summation otherwise; both paths agree with the naive-definition
// oracle within 1e-8).
std::vector<std::complex<double>> dft2(const GrayImage& image);

// Mean per-cell |DFT| over the set, pre-log and unshifted. All images must
// share one resolution.
std::vector<double> average_magnitude(const std::vector<GrayImage>& images);

// log1p of the averaged magnitude, zero frequency moved to the matrix center.
SpectralFingerprint average_spectrum(const std::vector<GrayImage>& images,
                                     const std::string& source);

// Root-mean-square difference of the stored magnitudes.
double fingerprint_distance(const SpectralFingerprint& a, const SpectralFingerprint& b);

// out[(y + H/2) % H][(x + W/2) % W] = in[y][x]; its own inverse for even dims.
std::vector<double> center_shift(const std::vector<double>& m, int h, int w);

// 8-bit grayscale raster, min-max normalized to [0, 255]. A constant
// fingerprint renders as all zeros (the degenerate normalization convention).
void render_spectrum(const SpectralFingerprint& fp, const std::filesystem::path& path);

void save_fingerprint(const SpectralFingerprint& fp, const std::filesystem::path& path);
SpectralFingerprint load_fingerprint(const std::filesystem::path& path);

}  // namespace synthscan
