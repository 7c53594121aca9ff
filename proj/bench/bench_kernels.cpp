// OpenMP kernels against the serial reference loops.

#include <benchmark/benchmark.h>

#include "lhbd/kernels.hpp"
#include "lhbd/ops.hpp"
#include "lhbd/random.hpp"

namespace {

using namespace lhbd;

Tensor random_tensor(Shape s, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Tensor t(s);
  for (auto& v : t.vec()) v = scale * rng.uniform(-1.0, 1.0);
  return t;
}

// Args: spatial size, channels (in = out).
template <bool Reference>
void BM_Conv2dForward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0)), c = static_cast<int>(state.range(1));
  const Tensor x = random_tensor(Shape{4, c, n, n}, 1);
  const Tensor w = random_tensor(Shape{c, c, 3, 3}, 2, 0.1);
  const Tensor b = random_tensor(Shape{1, c, 1, 1}, 3);
  const kernels::ConvGeometry g{1, 1};
  for (auto _ : state) {
    Tensor y = Reference ? kernels::reference::conv2d_forward(x, w, b, g) : kernels::conv2d_forward(x, w, b, g);
    benchmark::DoNotOptimize(y.vec().data());
  }
  state.SetItemsProcessed(state.iterations() * 4LL * c * c * 9 * n * n);
}

template <bool Reference>
void BM_Conv2dBackwardWeight(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0)), c = static_cast<int>(state.range(1));
  const Tensor x = random_tensor(Shape{4, c, n, n}, 1);
  const Tensor gy = random_tensor(Shape{4, c, n, n}, 2);
  const kernels::ConvGeometry g{1, 1};
  const Shape ws{c, c, 3, 3};
  for (auto _ : state) {
    Tensor gw = Reference ? kernels::reference::conv2d_backward_weight(x, gy, ws, g)
                          : kernels::conv2d_backward_weight(x, gy, ws, g);
    benchmark::DoNotOptimize(gw.vec().data());
  }
}

template <bool Reference>
void BM_Warp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Tensor ref = random_tensor(Shape{4, 3, n, n}, 1);
  const Tensor flow = random_tensor(Shape{4, 2, n, n}, 2, 4.0);
  for (auto _ : state) {
    Tensor y = Reference ? kernels::reference::warp_forward(ref, flow) : kernels::warp_forward(ref, flow);
    benchmark::DoNotOptimize(y.vec().data());
  }
  state.SetItemsProcessed(state.iterations() * 4LL * 3 * n * n);
}

template <bool Reference>
void BM_Upsample(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Tensor x = random_tensor(Shape{4, 2, n, n}, 1);
  const auto a = ag::matrices::bilinear_up2(n);
  for (auto _ : state) {
    Tensor y = Reference ? kernels::reference::separable_apply(x, *a, *a) : kernels::separable_apply(x, *a, *a);
    benchmark::DoNotOptimize(y.vec().data());
  }
}

}  // namespace

BENCHMARK(BM_Conv2dForward<false>)->Name("conv2d_forward/openmp")->Args({64, 16})->Args({128, 32});
BENCHMARK(BM_Conv2dForward<true>)->Name("conv2d_forward/reference")->Args({64, 16})->Args({128, 32});
BENCHMARK(BM_Conv2dBackwardWeight<false>)->Name("conv2d_backward_weight/openmp")->Args({64, 16});
BENCHMARK(BM_Conv2dBackwardWeight<true>)->Name("conv2d_backward_weight/reference")->Args({64, 16});
BENCHMARK(BM_Warp<false>)->Name("warp/openmp")->Arg(64)->Arg(256);
BENCHMARK(BM_Warp<true>)->Name("warp/reference")->Arg(64)->Arg(256);
BENCHMARK(BM_Upsample<false>)->Name("upsample2/openmp")->Arg(32)->Arg(128);
BENCHMARK(BM_Upsample<true>)->Name("upsample2/reference")->Arg(32)->Arg(128);

BENCHMARK_MAIN();
