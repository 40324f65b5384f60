#include "synthscan/reference.hpp"

#include <cmath>
#include <cstdint>

namespace synthscan::ref {

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<std::int64_t>(i) * k;
        for (int j = 0; j < n; ++j) {
            const double* bj = b + static_cast<std::int64_t>(j) * k;
            double acc = 0.0;
            for (int t = 0; t < k; ++t) acc += ai[t] * bj[t];
            c[static_cast<std::int64_t>(i) * n + j] = acc;
        }
    }
}

void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<std::int64_t>(i) * k;
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int t = 0; t < k; ++t) acc += ai[t] * b[static_cast<std::int64_t>(t) * n + j];
            c[static_cast<std::int64_t>(i) * n + j] = acc;
        }
    }
}

void matmul_tn(const double* a, const double* b, double* c, int s, int m, int n) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int t = 0; t < s; ++t)
                acc += a[static_cast<std::int64_t>(t) * m + i] * b[static_cast<std::int64_t>(t) * n + j];
            c[static_cast<std::int64_t>(i) * n + j] = acc;
        }
    }
}

void conv2d_forward(const double* in, const double* w, const double* b, double* out,
                    int samples, const kernels::Conv2dShape& s) {
    const int oh = s.out_h(), ow = s.out_w();
    const std::int64_t in_sample = static_cast<std::int64_t>(s.in_c) * s.in_plane();
    const std::int64_t out_sample = static_cast<std::int64_t>(s.out_c) * s.out_plane();

    for (int smp = 0; smp < samples; ++smp) {
        for (int oc = 0; oc < s.out_c; ++oc) {
            const double* x = in + smp * in_sample;
            double* y = out + smp * out_sample + static_cast<std::int64_t>(oc) * s.out_plane();
            const double* wc = w + static_cast<std::int64_t>(oc) * s.in_c * s.ksize * s.ksize;
            const double bias = b ? b[oc] : 0.0;
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = bias;
                    for (int ic = 0; ic < s.in_c; ++ic) {
                        const double* xc = x + static_cast<std::int64_t>(ic) * s.in_plane();
                        const double* wk = wc + static_cast<std::int64_t>(ic) * s.ksize * s.ksize;
                        for (int ky = 0; ky < s.ksize; ++ky) {
                            int iy = oy * s.stride + ky - s.pad;
                            if (iy < 0 || iy >= s.in_h) continue;
                            for (int kx = 0; kx < s.ksize; ++kx) {
                                int ix = ox * s.stride + kx - s.pad;
                                if (ix < 0 || ix >= s.in_w) continue;
                                acc += wk[ky * s.ksize + kx] * xc[static_cast<std::int64_t>(iy) * s.in_w + ix];
                            }
                        }
                    }
                    y[static_cast<std::int64_t>(oy) * ow + ox] = acc;
                }
            }
        }
    }
}

void dft2_naive(const double* img, int h, int w, std::complex<double>* out) {
    constexpr double kPi = 3.14159265358979323846;
    for (int u = 0; u < h; ++u) {
        for (int v = 0; v < w; ++v) {
            double re = 0.0, im = 0.0;
            for (int m = 0; m < h; ++m) {
                for (int n = 0; n < w; ++n) {
                    double ang = -2.0 * kPi * (static_cast<double>(u) * m / h +
                                               static_cast<double>(v) * n / w);
                    double x = img[static_cast<std::int64_t>(m) * w + n];
                    re += x * std::cos(ang);
                    im += x * std::sin(ang);
                }
            }
            out[static_cast<std::int64_t>(u) * w + v] = {re, im};
        }
    }
}

std::vector<std::complex<double>> dft2_naive(const std::vector<double>& img, int h, int w) {
    std::vector<std::complex<double>> out(img.size());
    dft2_naive(img.data(), h, w, out.data());
    return out;
}

}  // namespace synthscan::ref
