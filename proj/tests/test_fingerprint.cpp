#include <cmath>
#include <fstream>

#include <doctest.h>

#include "synthscan/errors.hpp"
#include "synthscan/fingerprint.hpp"
#include "synthscan/image.hpp"
#include "test_support.hpp"

using namespace synthscan;

namespace {

GrayImage constant_gray(int n, double value) {
    GrayImage g;
    g.height = n;
    g.width = n;
    g.values.assign(static_cast<std::size_t>(n) * n, value);
    return g;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("average_spectrum of a single image is its log1p shifted magnitude") {
    GrayImage img = testsupport::noise_gray(8, 8, 3);
    SpectralFingerprint fp = average_spectrum({img}, "real");
    CHECK(fp.n_images == 1);
    CHECK(fp.source == "real");

    auto spec = dft2(img);
    std::vector<double> expect(spec.size());
    for (std::size_t i = 0; i < spec.size(); ++i) expect[i] = std::log1p(std::abs(spec[i]));
    expect = center_shift(expect, 8, 8);
    REQUIRE(fp.magnitude.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i)
        CHECK(fp.magnitude[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("averaging two identical images equals one") {
    GrayImage img = testsupport::noise_gray(8, 8, 5);
    SpectralFingerprint one = average_spectrum({img}, "SD");
    SpectralFingerprint two = average_spectrum({img, img}, "SD");
    CHECK(two.n_images == 2);
    for (std::size_t i = 0; i < one.magnitude.size(); ++i)
        CHECK(two.magnitude[i] == doctest::Approx(one.magnitude[i]).epsilon(1e-12));
}

TEST_CASE("average_magnitude matches the explicit loop oracle") {
    std::vector<GrayImage> images;
    for (int i = 0; i < 5; ++i) images.push_back(testsupport::noise_gray(8, 8, 50 + i));

    std::vector<double> oracle(64, 0.0);
    for (const auto& img : images) {
        auto spec = dft2(img);
        for (std::size_t c = 0; c < spec.size(); ++c) oracle[c] += std::abs(spec[c]);
    }
    for (double& v : oracle) v /= 5.0;

    auto got = average_magnitude(images);
    REQUIRE(got.size() == oracle.size());
    for (std::size_t c = 0; c < got.size(); ++c)
        CHECK(std::fabs(got[c] - oracle[c]) < 1e-9);
}

TEST_CASE("averaging linearity on the pre-log accumulator") {
    std::vector<GrayImage> group_a, group_b, both;
    for (int i = 0; i < 3; ++i) group_a.push_back(testsupport::noise_gray(6, 6, 70 + i));
    for (int i = 0; i < 2; ++i) group_b.push_back(testsupport::noise_gray(6, 6, 90 + i));
    both = group_a;
    both.insert(both.end(), group_b.begin(), group_b.end());

    auto avg_a = average_magnitude(group_a);
    auto avg_b = average_magnitude(group_b);
    auto avg_all = average_magnitude(both);
    for (std::size_t c = 0; c < avg_all.size(); ++c) {
        double combined = (3.0 * avg_a[c] + 2.0 * avg_b[c]) / 5.0;
        CHECK(avg_all[c] == doctest::Approx(combined).epsilon(1e-12));
    }
}

TEST_CASE("a constant image produces a DC-only fingerprint") {
    GrayImage img = constant_gray(8, 7.5);
    auto mags = average_magnitude({img});
    for (std::size_t c = 1; c < mags.size(); ++c) CHECK(mags[c] < 1e-9);
    CHECK(mags[0] == doctest::Approx(64 * 7.5));

    SpectralFingerprint fp = average_spectrum({img}, "real");
    // after centering, the only non-zero cell sits at (H/2, W/2)
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            if (y == 4 && x == 4)
                CHECK(fp.at(y, x) > 0.0);
            else
                CHECK(fp.at(y, x) < 1e-9);
        }
}

TEST_CASE("mixed resolutions and empty input are rejected") {
    CHECK_THROWS_AS((void)average_magnitude({}), Error);
    GrayImage a = constant_gray(4, 1.0);
    GrayImage b = constant_gray(8, 1.0);
    try {
        (void)average_magnitude({a, b});
        FAIL("expected MixedResolutions");
    } catch (const Error& e) {
        CHECK(e.code() == "MixedResolutions");
    }
}

TEST_CASE("center_shift is its own inverse for even dims") {
    GrayImage img = testsupport::noise_gray(6, 8, 11);
    auto once = center_shift(img.values, 6, 8);
    auto twice = center_shift(once, 6, 8);
    CHECK(twice == img.values);
}

TEST_CASE("fingerprint distance is a metric-like RMS") {
    GrayImage img = testsupport::noise_gray(8, 8, 21);
    SpectralFingerprint a = average_spectrum({img}, "SD");
    CHECK(fingerprint_distance(a, a) == 0.0);

    GrayImage img2 = testsupport::noise_gray(8, 8, 22);
    SpectralFingerprint b = average_spectrum({img2}, "LD");
    CHECK(fingerprint_distance(a, b) == fingerprint_distance(b, a));
    CHECK(fingerprint_distance(a, b) > 0.0);

    // shifting every cell by delta gives distance exactly delta
    SpectralFingerprint c = a;
    const double delta = 0.375;
    for (double& v : c.magnitude) v += delta;
    CHECK(fingerprint_distance(a, c) == doctest::Approx(delta).epsilon(1e-12));

    SpectralFingerprint small;
    small.height = small.width = 4;
    small.magnitude.assign(16, 0.0);
    CHECK_THROWS_AS((void)fingerprint_distance(a, small), Error);
}

TEST_CASE("render normalizes to the full byte range, deterministically") {
    auto dir = testsupport::fresh_dir("render");
    GrayImage img = constant_gray(8, 3.0);
    SpectralFingerprint fp = average_spectrum({img}, "real");
    render_spectrum(fp, dir / "dc.pgm");
    Image raster = load_image(dir / "dc.pgm");
    CHECK(raster.channels == 1);
    CHECK(raster.at(4, 4, 0) == 255);
    int nonzero = 0;
    for (auto p : raster.pixels) nonzero += p != 0;
    CHECK(nonzero == 1);

    // constant fingerprint maps to all zeros by convention
    SpectralFingerprint flat;
    flat.height = flat.width = 4;
    flat.magnitude.assign(16, 2.5);
    render_spectrum(flat, dir / "flat.pgm");
    Image fraster = load_image(dir / "flat.pgm");
    for (auto p : fraster.pixels) CHECK(p == 0);

    render_spectrum(fp, dir / "dc2.pgm");
    CHECK(slurp(dir / "dc.pgm") == slurp(dir / "dc2.pgm"));
}

TEST_CASE("fingerprint files round-trip") {
    auto dir = testsupport::fresh_dir("fpio");
    GrayImage img = testsupport::noise_gray(6, 6, 31);
    SpectralFingerprint fp = average_spectrum({img, img}, "GLIDE");
    save_fingerprint(fp, dir / "g.fp.json");
    SpectralFingerprint back = load_fingerprint(dir / "g.fp.json");
    CHECK(back.source == "GLIDE");
    CHECK(back.n_images == 2);
    CHECK(back.height == 6);
    CHECK(back.magnitude == fp.magnitude);
}
