#include <gtest/gtest.h>

#include "jdsr/errors.hpp"
#include "jdsr/image_io.hpp"
#include "jdsr/network.hpp"
#include "jdsr/ops.hpp"

using namespace jdsr;
using namespace jdsr::net;

namespace {

// Weights plus biases of a k x k convolution.
std::size_t conv(std::size_t in, std::size_t out, std::size_t k) { return in * out * k * k + out; }

// Closed-form parameter count of the generator, independent of the model code.
std::size_t expected_generator_params(const NetworkConfig& raw) {
  const auto c = raw.effective();
  const std::size_t C = c.channels, n = c.modules_per_block, s = c.scale;
  const std::size_t in = c.input == InputRepresentation::kThreeChannel ? 3 : 1;
  std::size_t rdsen = conv(in, C, 3) + conv(C, C, 3) + conv(C, 3, 3);
  rdsen += c.num_blocks * ((n - 1) * (conv(C, C, 3) + conv(C, C / c.reduction, 1) +
                                      conv(C / c.reduction, C, 1)) +
                           conv(n * C, C, 1));
  rdsen += s == 4 ? 2 * conv(C, 4 * C, 3) : conv(C, s * s * C, 3);
  if (!c.use_pdnet) return rdsen;
  const std::size_t P = c.pdnet_width;
  const std::size_t pdnet =
      3 * conv(1, P, 3) + 2 * conv(P, 4 * P, 3) + conv(3 * P, P, 1) + conv(P, 4 * P, 3) + conv(P, 3, 3);
  return rdsen + pdnet;
}

ad::Tensor<float> uniform(ad::Shape shape, float v) { return ad::Tensor<float>(std::move(shape), v); }

}  // namespace

TEST(Network, ParameterCountsMatchClosedForm) {
  for (std::size_t s : {2u, 3u, 4u}) {
    for (bool toy : {true, false}) {
      auto cfg = toy ? NetworkConfig::toy(s) : NetworkConfig::paper(s);
      const Generator<float> g(cfg, 1);
      EXPECT_EQ(g.parameters().scalar_count(), expected_generator_params(cfg)) << s << toy;
    }
  }
  EXPECT_EQ(Generator<float>(NetworkConfig::paper(4), 1).parameters().scalar_count(), 3846662u);
  EXPECT_EQ(Generator<float>(NetworkConfig::toy(2), 1).parameters().scalar_count(), 12554u);
}

TEST(Network, OutputShapeForEveryScale) {
  for (std::size_t s : {2u, 3u, 4u}) {
    const Generator<float> g(NetworkConfig::toy(s), 2);
    const auto out = g(uniform({2, 3, 8, 12}, 0.3f), uniform({2, 3, 8, 12}, 0.4f));
    EXPECT_EQ(out.shape(), (ad::Shape{2, 3, 8 * s, 12 * s}));
  }
}

TEST(Network, OneChannelVariantWithoutPdnet) {
  auto cfg = NetworkConfig::toy(2);
  cfg.use_pdnet = false;
  cfg.input = InputRepresentation::kOneChannel;
  const Generator<float> g(cfg, 3);
  EXPECT_EQ(g.parameters().scalar_count(), expected_generator_params(cfg));
  EXPECT_EQ(g(uniform({1, 1, 6, 6}, 0.5f), uniform({1, 3, 6, 6}, 0.5f)).shape(),
            (ad::Shape{1, 3, 12, 12}));
}

TEST(Network, VariantsShareParametersButDifferInOutput) {
  const auto x = uniform({1, 3, 8, 8}, 0.6f);
  auto base = NetworkConfig::toy(2);
  const auto ref = Generator<float>(base, 4)(x, x);
  auto act = base;
  act.activation_position = ActivationPosition::kAfterAttention;
  auto skip = base;
  skip.long_skip = LongSkip::kAfterConv;
  for (const auto& cfg : {act, skip}) {
    const Generator<float> g(cfg, 4);
    EXPECT_EQ(g.parameters().scalar_count(), expected_generator_params(base));
    const auto out = g(x, x);
    bool differs = false;
    for (std::size_t i = 0; i < out.numel(); ++i) differs |= out.data()[i] != ref.data()[i];
    EXPECT_TRUE(differs);
  }
}

TEST(Network, SeedDeterminesWeights) {
  const Generator<float> a(NetworkConfig::toy(2), 9), b(NetworkConfig::toy(2), 9),
      c(NetworkConfig::toy(2), 10);
  const auto& ea = a.parameters().entries();
  const auto& eb = b.parameters().entries();
  const auto& ec = c.parameters().entries();
  bool any_diff = false;
  for (std::size_t i = 0; i < ea.size(); ++i) {
    EXPECT_EQ(ea[i].first, eb[i].first);
    for (std::size_t k = 0; k < ea[i].second.numel(); ++k) {
      EXPECT_EQ(ea[i].second.data()[k], eb[i].second.data()[k]);
      any_diff |= ea[i].second.data()[k] != ec[i].second.data()[k];
    }
  }
  EXPECT_TRUE(any_diff);
}

TEST(Network, BlockTraceStructure) {
  const auto cfg = NetworkConfig::toy(2).effective();
  const Generator<double> g(cfg, 5);
  ad::Tensor<double> m1({1, cfg.channels, 5, 5});
  for (std::size_t i = 0; i < m1.numel(); ++i) m1.data()[i] = std::sin(0.3 * i);
  const auto t = g.rdsen().blocks[0].trace(m1);
  EXPECT_EQ(t.stages.size(), cfg.modules_per_block);
  EXPECT_EQ(t.gates.size(), cfg.modules_per_block - 1);
  EXPECT_EQ(t.concatenated.dim(1), cfg.modules_per_block * cfg.channels);
  EXPECT_EQ(t.output.shape(), m1.shape());
  for (const auto& gate : t.gates) {
    for (double v : gate.data()) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
  // The first stage is the block input itself.
  EXPECT_TRUE(t.stages[0].shares_storage_with(m1) || t.stages[0].data()[0] == m1.data()[0]);
}

TEST(Network, PdnetNeedsSidesDivisibleByFour) {
  const Generator<float> g(NetworkConfig::toy(2), 6);
  EXPECT_ANY_THROW(g(uniform({1, 3, 6, 6}, 0.1f), uniform({1, 3, 6, 6}, 0.1f)));
}

TEST(Network, ConfigValidationNamesTheField) {
  auto bad = NetworkConfig::paper(4);
  bad.reduction = 5;
  try {
    bad.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "network.reduction");
  }
  bad = NetworkConfig::paper(5);
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = NetworkConfig::toy(2);
  bad.input = InputRepresentation::kOneChannel;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Network, DiscriminatorScoresOnePerImage) {
  DiscriminatorConfig dc;
  dc.base_channels = 4;
  dc.dense_units = 16;
  const Discriminator<float> d(dc, 32, 7);
  const auto s = d(uniform({3, 3, 32, 32}, 0.5f));
  EXPECT_EQ(s.shape(), (ad::Shape{3}));
  EXPECT_ANY_THROW(d(uniform({1, 3, 16, 16}, 0.5f)));
}

TEST(Network, MakeInputsStacksFrames) {
  const auto img = io::synthetic_image(8, 8, 1);
  const std::vector<cfa::CfaFrame> frames = {cfa::mosaic(img, cfa::Phase::kRGGB),
                                             cfa::mosaic(img, cfa::Phase::kRGGB)};
  const auto in = make_inputs<float>(frames, NetworkConfig::toy(2), demosaic::DemosaicMethod::bilinear());
  EXPECT_EQ(in.cfa.shape(), (ad::Shape{2, 3, 8, 8}));
  EXPECT_EQ(in.init.shape(), (ad::Shape{2, 3, 8, 8}));
}

TEST(Network, ParameterSetSaveLoadRoundTrip) {
  const Generator<float> a(NetworkConfig::toy(3), 1);
  Generator<float> b(NetworkConfig::toy(3), 2);
  ad::Checkpoint ck;
  a.parameters().save(ck, "g.");
  b.parameters().load(ck, "g.");
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    const auto& x = a.parameters().entries()[i].second;
    const auto& y = b.parameters().entries()[i].second;
    for (std::size_t k = 0; k < x.numel(); ++k) EXPECT_EQ(x.data()[k], y.data()[k]);
  }
  Generator<float> other(NetworkConfig::toy(2), 1);
  EXPECT_THROW(other.parameters().load(ck, "g."), DataError);
}
