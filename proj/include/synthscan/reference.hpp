#pragma once

#include <complex>
#include <vector>

#include "synthscan/kernels.hpp"

namespace synthscan::ref {

// Serial reference implementations. They are not called by the production
// code paths; tests compare the OpenMP kernels against them (bitwise for the
// loop kernels, within tolerance for the transforms) and the benchmark target
// reports the speedup of the parallel versions.

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_tn(const double* a, const double* b, double* c, int s, int m, int n);

void conv2d_forward(const double* in, const double* w, const double* b, double* out,
                    int samples, const kernels::Conv2dShape& s);

// Naive O((H*W)^2) direct evaluation of the 2-D DFT definition.
void dft2_naive(const double* img, int h, int w, std::complex<double>* out);
std::vector<std::complex<double>> dft2_naive(const std::vector<double>& img, int h, int w);

}  // namespace synthscan::ref
