// Serial reference kernels vs the OpenMP production kernels. Run manually:
//   ./build/bench/kernel_bench

#include <benchmark/benchmark.h>

#include <vector>

#include "synthscan/kernels.hpp"
#include "synthscan/reference.hpp"
#include "synthscan/rng.hpp"

namespace {

using synthscan::Rng;
namespace kernels = synthscan::kernels;
namespace ref = synthscan::ref;

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

void BM_MatmulRef(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0)), k = 256, n = 256;
    auto a = random_vec(static_cast<std::size_t>(m) * k, 1);
    auto b = random_vec(static_cast<std::size_t>(n) * k, 2);
    std::vector<double> c(static_cast<std::size_t>(m) * n);
    for (auto _ : state) {
        ref::matmul_nt(a.data(), b.data(), c.data(), m, k, n);
        benchmark::DoNotOptimize(c.data());
    }
}

void BM_MatmulOmp(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0)), k = 256, n = 256;
    auto a = random_vec(static_cast<std::size_t>(m) * k, 1);
    auto b = random_vec(static_cast<std::size_t>(n) * k, 2);
    std::vector<double> c(static_cast<std::size_t>(m) * n);
    for (auto _ : state) {
        kernels::matmul_nt(a.data(), b.data(), c.data(), m, k, n);
        benchmark::DoNotOptimize(c.data());
    }
}

void BM_Conv2dRef(benchmark::State& state) {
    const int res = static_cast<int>(state.range(0));
    kernels::Conv2dShape s{16, res, res, 16, 3, 1, 1};
    auto in = random_vec(4ull * 16 * res * res, 3);
    auto w = random_vec(static_cast<std::size_t>(s.weight_count()), 4);
    auto b = random_vec(16, 5);
    std::vector<double> out(4ull * 16 * static_cast<std::size_t>(s.out_plane()));
    for (auto _ : state) {
        ref::conv2d_forward(in.data(), w.data(), b.data(), out.data(), 4, s);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_Conv2dOmp(benchmark::State& state) {
    const int res = static_cast<int>(state.range(0));
    kernels::Conv2dShape s{16, res, res, 16, 3, 1, 1};
    auto in = random_vec(4ull * 16 * res * res, 3);
    auto w = random_vec(static_cast<std::size_t>(s.weight_count()), 4);
    auto b = random_vec(16, 5);
    std::vector<double> out(4ull * 16 * static_cast<std::size_t>(s.out_plane()));
    for (auto _ : state) {
        kernels::conv2d_forward(in.data(), w.data(), b.data(), out.data(), 4, s);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_Dft2Naive(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    auto img = random_vec(static_cast<std::size_t>(n) * n, 6);
    std::vector<std::complex<double>> out(img.size());
    for (auto _ : state) {
        ref::dft2_naive(img.data(), n, n, out.data());
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_Dft2Fast(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    auto img = random_vec(static_cast<std::size_t>(n) * n, 6);
    std::vector<std::complex<double>> out(img.size());
    for (auto _ : state) {
        kernels::dft2(img.data(), n, n, out.data());
        benchmark::DoNotOptimize(out.data());
    }
}

BENCHMARK(BM_MatmulRef)->Arg(64)->Arg(256);
BENCHMARK(BM_MatmulOmp)->Arg(64)->Arg(256);
BENCHMARK(BM_Conv2dRef)->Arg(32)->Arg(64);
BENCHMARK(BM_Conv2dOmp)->Arg(32)->Arg(64);
BENCHMARK(BM_Dft2Naive)->Arg(16)->Arg(32);
BENCHMARK(BM_Dft2Fast)->Arg(16)->Arg(32)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
