#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace synthscan::kernels {

// Every kernel parallelizes over independent output cells only; the reduction
// inside one cell stays serial. Results are therefore identical for any thread
// count, which the reproducibility contract of the toolkit relies on.

void set_max_threads(int n);
int max_threads();

// C[m x n] = A[m x k] * B[n x k]^T
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n);
// C[m x n] = A[m x k] * B[k x n]
void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n);
// C[m x n] = A[s x m]^T * B[s x n]
void matmul_tn(const double* a, const double* b, double* c, int s, int m, int n);
// col_sums[n] = sum over rows of A[s x n]
void col_sums(const double* a, double* out, int s, int n);

struct Conv2dShape {
    int in_c = 0, in_h = 0, in_w = 0;
    int out_c = 0;
    int ksize = 3;
    int stride = 1;
    int pad = 1;

    int out_h() const { return (in_h + 2 * pad - ksize) / stride + 1; }
    int out_w() const { return (in_w + 2 * pad - ksize) / stride + 1; }
    std::int64_t in_plane() const { return static_cast<std::int64_t>(in_h) * in_w; }
    std::int64_t out_plane() const { return static_cast<std::int64_t>(out_h()) * out_w(); }
    std::int64_t weight_count() const {
        return static_cast<std::int64_t>(out_c) * in_c * ksize * ksize;
    }
};

// in:  samples x in_c x in_h x in_w      w: out_c x in_c x k x k
// out: samples x out_c x out_h x out_w
void conv2d_forward(const double* in, const double* w, const double* b, double* out,
                    int samples, const Conv2dShape& s);
void conv2d_backward_input(const double* dout, const double* w, double* din,
                           int samples, const Conv2dShape& s);
// dw/db are written as full-batch sums.
void conv2d_backward_weights(const double* in, const double* dout, double* dw, double* db,
                             int samples, const Conv2dShape& s);

// Forward 2-D DFT, X[u,v] = sum x[m,n] exp(-2*pi*i*(u*m/H + v*n/W)).
// Radix-2 FFT along power-of-two dimensions, direct summation otherwise.
void dft2(const double* img, int h, int w, std::complex<double>* out);

std::vector<std::complex<double>> dft2(const std::vector<double>& img, int h, int w);

}  // namespace synthscan::kernels
