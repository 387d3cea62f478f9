#include <benchmark/benchmark.h>

#include "jdsr/cfa.hpp"
#include "jdsr/demosaic.hpp"
#include "jdsr/image_io.hpp"
#include "jdsr/losses.hpp"
#include "jdsr/metrics.hpp"
#include "jdsr/network.hpp"
#include "jdsr/ops.hpp"
#include "jdsr/random.hpp"
#include "jdsr/trainer.hpp"

using namespace jdsr;
using Tf = ad::Tensor<float>;

namespace {

Tf random_tensor(ad::Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  Tf t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-1, 1));
  return t;
}

// 3x3 conv, C -> C channels on a side x side map.
void BM_Conv2dForward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto side = static_cast<std::size_t>(state.range(1));
  const auto x = random_tensor({1, c, side, side}, 1);
  const auto w = random_tensor({c, c, 3, 3}, 2);
  const auto b = random_tensor({c}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(ad::conv2d(x, w, b, 1, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(2 * c * c * 9 * side * side));
}
BENCHMARK(BM_Conv2dForward)->Args({8, 32})->Args({64, 24})->Args({64, 48})->Unit(benchmark::kMillisecond);

void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto side = static_cast<std::size_t>(state.range(1));
  auto x = random_tensor({1, c, side, side}, 1);
  auto w = random_tensor({c, c, 3, 3}, 2);
  auto b = random_tensor({c}, 3);
  x.set_requires_grad(true);
  w.set_requires_grad(true);
  b.set_requires_grad(true);
  for (auto _ : state) {
    ad::Tape<float> tape;
    ad::TapeScope<float> scope(tape);
    tape.backward(ad::mean(ad::conv2d(x, w, b, 1, 1)));
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Args({64, 24})->Unit(benchmark::kMillisecond);

void BM_ToyGeneratorTrainStep(benchmark::State& state) {
  auto cfg = config::parse(R"({"seed": 1, "network": {"toy_mode": true, "scale": 2},
    "trainer": {"batch_size": 1, "patch_size": 16, "pretrain_steps": 1, "augment": false},
    "data": {"synthetic": {"count": 1, "size": 32, "seed": 3}}})");
  const auto data = train::build_dataset(cfg);
  net::Generator<float> g(cfg.network, 1);
  for (auto _ : state) benchmark::DoNotOptimize(train::pretrain_generator(g, data, cfg));
}
BENCHMARK(BM_ToyGeneratorTrainStep)->Unit(benchmark::kMillisecond);

void BM_PaperGeneratorForward(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const net::Generator<float> g(net::NetworkConfig::paper(4), 1);
  const auto cfa3 = random_tensor({1, 3, side, side}, 4);
  ad::NoTapeScope<float> off;
  for (auto _ : state) benchmark::DoNotOptimize(g(cfa3, cfa3));
}
BENCHMARK(BM_PaperGeneratorForward)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_BilinearDemosaic(benchmark::State& state) {
  const auto m = cfa::mosaic(io::synthetic_image(256, 256, 1), cfa::Phase::kRGGB);
  for (auto _ : state) benchmark::DoNotOptimize(demosaic::bilinear_demosaic(m));
}
BENCHMARK(BM_BilinearDemosaic)->Unit(benchmark::kMicrosecond);

void BM_ResidualRefineDemosaic(benchmark::State& state) {
  const auto m = cfa::mosaic(io::synthetic_image(256, 256, 1), cfa::Phase::kRGGB);
  for (auto _ : state) benchmark::DoNotOptimize(demosaic::residual_refine_demosaic(m, 2));
}
BENCHMARK(BM_ResidualRefineDemosaic)->Unit(benchmark::kMicrosecond);

void BM_BicubicUpsample(benchmark::State& state) {
  const auto img = io::synthetic_image(128, 128, 1);
  for (auto _ : state) benchmark::DoNotOptimize(cfa::bicubic_upsample(img, 4));
}
BENCHMARK(BM_BicubicUpsample)->Unit(benchmark::kMicrosecond);

void BM_Ssim(benchmark::State& state) {
  const auto a = io::synthetic_image(256, 256, 1), b = io::synthetic_image(256, 256, 2);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::ssim(a, b));
}
BENCHMARK(BM_Ssim)->Unit(benchmark::kMicrosecond);

void BM_TraganLoss(benchmark::State& state) {
  const loss::CriticScores<float> s{random_tensor({16}, 5), random_tensor({16}, 6)};
  for (auto _ : state) benchmark::DoNotOptimize(loss::g_loss_tragan(s, 1.0));
}
BENCHMARK(BM_TraganLoss);

}  // namespace
BENCHMARK_MAIN();
