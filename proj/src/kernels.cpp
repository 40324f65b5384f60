#include "synthscan/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "synthscan/errors.hpp"

namespace synthscan::kernels {

namespace {
constexpr double kPi = 3.14159265358979323846;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Iterative radix-2, forward sign convention (-i).
void fft_pow2_inplace(std::complex<double>* a, int n, const std::vector<std::complex<double>>& tw) {
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        int step = n / len;
        for (int i = 0; i < n; i += len) {
            for (int k = 0; k < len / 2; ++k) {
                std::complex<double> w = tw[static_cast<std::size_t>(k) * step];
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
}

// Twiddles for the full circle of size n: tw[k] = exp(-2*pi*i*k/n).
std::vector<std::complex<double>> make_twiddles(int n) {
    std::vector<std::complex<double>> tw(n);
    for (int k = 0; k < n; ++k) {
        double ang = -2.0 * kPi * k / n;
        tw[k] = {std::cos(ang), std::sin(ang)};
    }
    return tw;
}

void dft_direct_1d(const std::complex<double>* in, std::complex<double>* out, int n,
                   const std::vector<std::complex<double>>& tw) {
    for (int k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (int j = 0; j < n; ++j) {
            acc += in[j] * tw[static_cast<std::size_t>(std::int64_t(j) * k % n)];
        }
        out[k] = acc;
    }
}

void transform_1d(std::complex<double>* buf, std::complex<double>* scratch, int n, bool pow2,
                  const std::vector<std::complex<double>>& tw) {
    if (pow2) {
        fft_pow2_inplace(buf, n, tw);
    } else {
        dft_direct_1d(buf, scratch, n, tw);
        for (int i = 0; i < n; ++i) buf[i] = scratch[i];
    }
}

}  // namespace

void set_max_threads(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
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
#pragma omp parallel for schedule(static)
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
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int t = 0; t < s; ++t)
                acc += a[static_cast<std::int64_t>(t) * m + i] * b[static_cast<std::int64_t>(t) * n + j];
            c[static_cast<std::int64_t>(i) * n + j] = acc;
        }
    }
}

void col_sums(const double* a, double* out, int s, int n) {
#pragma omp parallel for schedule(static)
    for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int t = 0; t < s; ++t) acc += a[static_cast<std::int64_t>(t) * n + j];
        out[j] = acc;
    }
}

void conv2d_forward(const double* in, const double* w, const double* b, double* out,
                    int samples, const Conv2dShape& s) {
    const int oh = s.out_h(), ow = s.out_w();
    const std::int64_t in_sample = static_cast<std::int64_t>(s.in_c) * s.in_plane();
    const std::int64_t out_sample = static_cast<std::int64_t>(s.out_c) * s.out_plane();

#pragma omp parallel for collapse(2) schedule(static)
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

void conv2d_backward_input(const double* dout, const double* w, double* din,
                           int samples, const Conv2dShape& s) {
    const int oh = s.out_h(), ow = s.out_w();
    const std::int64_t in_sample = static_cast<std::int64_t>(s.in_c) * s.in_plane();
    const std::int64_t out_sample = static_cast<std::int64_t>(s.out_c) * s.out_plane();

#pragma omp parallel for collapse(2) schedule(static)
    for (int smp = 0; smp < samples; ++smp) {
        for (int ic = 0; ic < s.in_c; ++ic) {
            double* dx = din + smp * in_sample + static_cast<std::int64_t>(ic) * s.in_plane();
            for (int iy = 0; iy < s.in_h; ++iy) {
                for (int ix = 0; ix < s.in_w; ++ix) {
                    double acc = 0.0;
                    for (int oc = 0; oc < s.out_c; ++oc) {
                        const double* dy = dout + smp * out_sample +
                                           static_cast<std::int64_t>(oc) * s.out_plane();
                        const double* wk = w + (static_cast<std::int64_t>(oc) * s.in_c + ic) *
                                                   s.ksize * s.ksize;
                        for (int ky = 0; ky < s.ksize; ++ky) {
                            int num_y = iy + s.pad - ky;
                            if (num_y < 0 || num_y % s.stride != 0) continue;
                            int oy = num_y / s.stride;
                            if (oy >= oh) continue;
                            for (int kx = 0; kx < s.ksize; ++kx) {
                                int num_x = ix + s.pad - kx;
                                if (num_x < 0 || num_x % s.stride != 0) continue;
                                int ox = num_x / s.stride;
                                if (ox >= ow) continue;
                                acc += wk[ky * s.ksize + kx] * dy[static_cast<std::int64_t>(oy) * ow + ox];
                            }
                        }
                    }
                    dx[static_cast<std::int64_t>(iy) * s.in_w + ix] = acc;
                }
            }
        }
    }
}

void conv2d_backward_weights(const double* in, const double* dout, double* dw, double* db,
                             int samples, const Conv2dShape& s) {
    const int oh = s.out_h(), ow = s.out_w();
    const std::int64_t in_sample = static_cast<std::int64_t>(s.in_c) * s.in_plane();
    const std::int64_t out_sample = static_cast<std::int64_t>(s.out_c) * s.out_plane();

#pragma omp parallel for collapse(2) schedule(static)
    for (int oc = 0; oc < s.out_c; ++oc) {
        for (int ic = 0; ic < s.in_c; ++ic) {
            double* wk = dw + (static_cast<std::int64_t>(oc) * s.in_c + ic) * s.ksize * s.ksize;
            for (int ky = 0; ky < s.ksize; ++ky) {
                for (int kx = 0; kx < s.ksize; ++kx) {
                    double acc = 0.0;
                    for (int smp = 0; smp < samples; ++smp) {
                        const double* xc = in + smp * in_sample +
                                           static_cast<std::int64_t>(ic) * s.in_plane();
                        const double* dy = dout + smp * out_sample +
                                           static_cast<std::int64_t>(oc) * s.out_plane();
                        for (int oy = 0; oy < oh; ++oy) {
                            int iy = oy * s.stride + ky - s.pad;
                            if (iy < 0 || iy >= s.in_h) continue;
                            for (int ox = 0; ox < ow; ++ox) {
                                int ix = ox * s.stride + kx - s.pad;
                                if (ix < 0 || ix >= s.in_w) continue;
                                acc += dy[static_cast<std::int64_t>(oy) * ow + ox] *
                                       xc[static_cast<std::int64_t>(iy) * s.in_w + ix];
                            }
                        }
                    }
                    wk[ky * s.ksize + kx] = acc;
                }
            }
        }
    }

#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < s.out_c; ++oc) {
        double acc = 0.0;
        for (int smp = 0; smp < samples; ++smp) {
            const double* dy = dout + smp * out_sample + static_cast<std::int64_t>(oc) * s.out_plane();
            for (std::int64_t p = 0; p < s.out_plane(); ++p) acc += dy[p];
        }
        db[oc] = acc;
    }
}

void dft2(const double* img, int h, int w, std::complex<double>* out) {
    if (h < 1 || w < 1) raise_data("EmptyImage", "dft2 requires H, W >= 1");

    const bool row_pow2 = is_pow2(w);
    const bool col_pow2 = is_pow2(h);
    const auto tw_row = make_twiddles(w);
    const auto tw_col = make_twiddles(h);

#pragma omp parallel for schedule(static)
    for (int m = 0; m < h; ++m) {
        std::vector<std::complex<double>> buf(w), scratch(row_pow2 ? 0 : w);
        for (int n = 0; n < w; ++n) buf[n] = {img[static_cast<std::int64_t>(m) * w + n], 0.0};
        transform_1d(buf.data(), scratch.data(), w, row_pow2, tw_row);
        for (int n = 0; n < w; ++n) out[static_cast<std::int64_t>(m) * w + n] = buf[n];
    }

#pragma omp parallel for schedule(static)
    for (int n = 0; n < w; ++n) {
        std::vector<std::complex<double>> buf(h), scratch(col_pow2 ? 0 : h);
        for (int m = 0; m < h; ++m) buf[m] = out[static_cast<std::int64_t>(m) * w + n];
        transform_1d(buf.data(), scratch.data(), h, col_pow2, tw_col);
        for (int m = 0; m < h; ++m) out[static_cast<std::int64_t>(m) * w + n] = buf[m];
    }
}

std::vector<std::complex<double>> dft2(const std::vector<double>& img, int h, int w) {
    if (static_cast<std::int64_t>(img.size()) != static_cast<std::int64_t>(h) * w)
        raise_data("ShapeMismatch", "dft2 buffer size does not match H*W");
    std::vector<std::complex<double>> out(img.size());
    dft2(img.data(), h, w, out.data());
    return out;
}

}  // namespace synthscan::kernels
