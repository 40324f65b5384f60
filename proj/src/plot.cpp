#include "synthscan/plot.hpp"

#include <algorithm>
#include <cmath>

#include "synthscan/errors.hpp"
#include "synthscan/image.hpp"

namespace synthscan {

namespace {

constexpr int kMargin = 24;

struct Rgb {
    std::uint8_t r, g, b;
};

constexpr Rgb kAxis{40, 40, 40};
constexpr Rgb kSeriesA{178, 34, 34};
constexpr Rgb kSeriesB{70, 130, 180};

void put(Image& img, int y, int x, Rgb c) {
    if (y < 0 || y >= img.height || x < 0 || x >= img.width) return;
    img.at(y, x, 0) = c.r;
    img.at(y, x, 1) = c.g;
    img.at(y, x, 2) = c.b;
}

void fill_rect(Image& img, int y0, int y1, int x0, int x1, Rgb c) {
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) put(img, y, x, c);
}

void draw_axes(Image& img) {
    for (int x = kMargin; x < img.width - kMargin; ++x) put(img, img.height - kMargin, x, kAxis);
    for (int y = kMargin; y <= img.height - kMargin; ++y) put(img, y, kMargin, kAxis);
}

std::vector<std::size_t> histogram(const std::vector<double>& values, int bins, double lo,
                                   double hi) {
    std::vector<std::size_t> h(static_cast<std::size_t>(bins), 0);
    const double width = (hi - lo) / bins;
    for (double v : values) {
        int b = width > 0.0 ? std::min(bins - 1, static_cast<int>((v - lo) / width)) : 0;
        ++h[static_cast<std::size_t>(std::max(0, b))];
    }
    return h;
}

}  // namespace

void render_bar_chart(const std::vector<double>& values, const std::filesystem::path& path,
                      int width, int height) {
    if (values.empty()) raise_data("EmptyDataset", "nothing to plot");
    Image img = Image::create(width, height, 3, 255);
    draw_axes(img);
    double mx = *std::max_element(values.begin(), values.end());
    if (mx <= 0.0) mx = 1.0;
    const int plot_w = width - 2 * kMargin;
    const int plot_h = height - 2 * kMargin;
    const double slot = static_cast<double>(plot_w) / static_cast<double>(values.size());
    const int bar_w = std::max(1, static_cast<int>(slot * 0.8));
    for (std::size_t i = 0; i < values.size(); ++i) {
        int h = static_cast<int>(std::lround(std::max(0.0, values[i]) / mx * plot_h));
        int x0 = kMargin + static_cast<int>(i * slot + slot * 0.1);
        fill_rect(img, height - kMargin - h, height - kMargin, x0, x0 + bar_w, kSeriesB);
    }
    save_image(img, path);
}

void render_histogram_pair(const std::vector<double>& a, const std::vector<double>& b, int bins,
                           const std::filesystem::path& path, int width, int height) {
    if (a.empty() || b.empty()) raise_data("EmptyDataset", "nothing to plot");
    if (bins < 1) raise_data("BadBins", "bins must be >= 1");
    double lo = std::min(*std::min_element(a.begin(), a.end()),
                         *std::min_element(b.begin(), b.end()));
    double hi = std::max(*std::max_element(a.begin(), a.end()),
                         *std::max_element(b.begin(), b.end()));
    auto ha = histogram(a, bins, lo, hi);
    auto hb = histogram(b, bins, lo, hi);
    std::size_t mx = 1;
    for (int i = 0; i < bins; ++i)
        mx = std::max({mx, ha[static_cast<std::size_t>(i)], hb[static_cast<std::size_t>(i)]});

    Image img = Image::create(width, height, 3, 255);
    draw_axes(img);
    const int plot_w = width - 2 * kMargin;
    const int plot_h = height - 2 * kMargin;
    const double slot = static_cast<double>(plot_w) / static_cast<double>(bins);
    const int bar_w = std::max(1, static_cast<int>(slot * 0.4));
    for (int i = 0; i < bins; ++i) {
        int x0 = kMargin + static_cast<int>(i * slot + slot * 0.1);
        int h1 = static_cast<int>(std::lround(static_cast<double>(ha[static_cast<std::size_t>(i)]) /
                                              static_cast<double>(mx) * plot_h));
        int h2 = static_cast<int>(std::lround(static_cast<double>(hb[static_cast<std::size_t>(i)]) /
                                              static_cast<double>(mx) * plot_h));
        fill_rect(img, height - kMargin - h1, height - kMargin, x0, x0 + bar_w, kSeriesA);
        fill_rect(img, height - kMargin - h2, height - kMargin, x0 + bar_w, x0 + 2 * bar_w,
                  kSeriesB);
    }
    save_image(img, path);
}

}  // namespace synthscan
