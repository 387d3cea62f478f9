#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "jdsr/checkpoint.hpp"
#include "jdsr/errors.hpp"
#include "jdsr/ops.hpp"
#include "jdsr/tensor.hpp"

namespace ad = jdsr::ad;
using Td = ad::Tensor<double>;
using Tf = ad::Tensor<float>;

TEST(Tensor, HandlesAliasStorageAndCloneCopies) {
  Td a({2, 2}, 1.0);
  Td b = a;
  b.data()[0] = 5.0;
  EXPECT_EQ(a.data()[0], 5.0);
  EXPECT_TRUE(a.shares_storage_with(b));
  Td c = a.clone();
  c.data()[0] = 7.0;
  EXPECT_EQ(a.data()[0], 5.0);
  EXPECT_FALSE(a.shares_storage_with(c));
}

TEST(Tensor, ShapeValidation) {
  EXPECT_THROW(Td({2, 3}, std::vector<double>(5)), jdsr::DimensionError);
  EXPECT_THROW(Td({2, 2}).item(), jdsr::DimensionError);
  EXPECT_THROW(Td().shape(), jdsr::Error);
  EXPECT_THROW(ad::add(Td({2, 3}), Td({3, 2})), jdsr::DimensionError);
  EXPECT_THROW(ad::reshape(Td({2, 3}), {4}), jdsr::DimensionError);
}

TEST(Tensor, DomainAndFiniteness) {
  EXPECT_THROW(ad::log(Td::from({2}, {1.0, 0.0})), jdsr::DomainError);
  EXPECT_THROW(ad::pow_scalar(Td::from({1}, {-1.0}), 0.5), jdsr::DomainError);
  const double big = std::numeric_limits<double>::max();
  EXPECT_THROW(ad::mul_scalar(Td::from({1}, {big}), 10.0), jdsr::NumericalError);
}

TEST(Tape, ReplaysEachAdjointOnceAndAccumulatesSharedUse) {
  Td x = Td::from({3}, {1.0, 2.0, 3.0});
  x.set_requires_grad(true);
  ad::Tape<double> tape;
  {
    ad::TapeScope<double> scope(tape);
    // y = sum(x*x + x): dy/dx = 2x + 1
    const auto y = ad::sum(ad::add(ad::mul(x, x), x));
    EXPECT_EQ(tape.size(), 3u);
    tape.backward(y);
  }
  EXPECT_EQ(tape.last_replay_count(), 3u);
  EXPECT_EQ(tape.size(), 0u);
  const auto g = x.grad();
  EXPECT_DOUBLE_EQ(g[0], 3.0);
  EXPECT_DOUBLE_EQ(g[1], 5.0);
  EXPECT_DOUBLE_EQ(g[2], 7.0);
}

TEST(Tape, NoRecordingWithoutScopeOrUnderNoTape) {
  Td x = Td::from({2}, {1.0, 2.0});
  x.set_requires_grad(true);
  ad::Tape<double> tape;
  ad::TapeScope<double> scope(tape);
  {
    ad::NoTapeScope<double> off;
    (void)ad::square(x);
  }
  EXPECT_EQ(tape.size(), 0u);
  (void)ad::square(x);
  EXPECT_EQ(tape.size(), 1u);
}

TEST(Tape, RejectsNonScalarLoss) {
  Td x({2}, 1.0);
  x.set_requires_grad(true);
  ad::Tape<double> tape;
  ad::TapeScope<double> scope(tape);
  EXPECT_THROW(tape.backward(ad::square(x)), jdsr::DimensionError);
}

TEST(Ops, Conv2dMatchesHandComputation) {
  // 1x1x3x3 input, 2x2 ones kernel, no padding -> sums of 2x2 windows plus bias.
  const Td x = Td::from({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const Td w({1, 1, 2, 2}, 1.0);
  const Td b = Td::from({1}, {0.5});
  const auto y = ad::conv2d(x, w, b);
  ASSERT_EQ(y.shape(), (ad::Shape{1, 1, 2, 2}));
  EXPECT_DOUBLE_EQ(y.data()[0], 12.5);
  EXPECT_DOUBLE_EQ(y.data()[1], 16.5);
  EXPECT_DOUBLE_EQ(y.data()[2], 24.5);
  EXPECT_DOUBLE_EQ(y.data()[3], 28.5);
  const auto s = ad::conv2d(x, w, b, 2, 1);
  EXPECT_EQ(s.shape(), (ad::Shape{1, 1, 2, 2}));
  EXPECT_DOUBLE_EQ(s.data()[0], 1.5);
}

TEST(Ops, PixelShuffleIndexConventionAndInverse) {
  Td x({1, 4, 2, 2});
  for (std::size_t i = 0; i < x.numel(); ++i) x.data()[i] = static_cast<double>(i);
  const auto y = ad::pixel_shuffle(x, 2);
  ASSERT_EQ(y.shape(), (ad::Shape{1, 1, 4, 4}));
  // out[y,x] = in[(y%2)*2 + x%2, y/2, x/2]
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      EXPECT_EQ(y.at(0, 0, r, c), x.at(0, (r % 2) * 2 + c % 2, r / 2, c / 2));
    }
  }
  const auto back = ad::pixel_unshuffle(y, 2);
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(back.data()[i], x.data()[i]);
}

TEST(Ops, ChannelAttentionPrimitives) {
  const Td x = Td::from({1, 2, 1, 2}, {1, 3, 2, 6});
  const auto gap = ad::global_avg_pool(x);
  EXPECT_DOUBLE_EQ(gap.data()[0], 2.0);
  EXPECT_DOUBLE_EQ(gap.data()[1], 4.0);
  const auto scaled = ad::scale_channels(x, Td::from({1, 2, 1, 1}, {0.5, 2.0}));
  EXPECT_DOUBLE_EQ(scaled.data()[1], 1.5);
  EXPECT_DOUBLE_EQ(scaled.data()[3], 12.0);
}

TEST(Ops, MaxPoolDropsOddEdge) {
  const Td x = Td::from({1, 1, 3, 3}, {1, 5, 9, 2, 3, 9, 9, 9, 9});
  const auto y = ad::max_pool2x2(x);
  ASSERT_EQ(y.shape(), (ad::Shape{1, 1, 1, 1}));
  EXPECT_DOUBLE_EQ(y.item(), 5.0);
}

TEST(Ops, BatchNormNormalisesPerChannel) {
  Td x({4, 1, 1, 1});
  for (std::size_t i = 0; i < 4; ++i) x.data()[i] = static_cast<double>(i);
  const auto y = ad::batch_norm2d(x, Td::from({1}, {1.0}), Td::from({1}, {0.0}), 0.0);
  double m = 0, v = 0;
  for (double e : y.data()) m += e / 4;
  for (double e : y.data()) v += (e - m) * (e - m) / 4;
  EXPECT_NEAR(m, 0.0, 1e-12);
  EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Checkpoint, RoundTripIsExactAndDetectsCorruption) {
  ad::Checkpoint ck;
  Tf a = Tf::from({2, 2}, {1.5f, -2.25f, 3.0f, 1e-8f});
  Td b = Td::from({3}, {0.1, 0.2, 0.3});
  ck.put("a", a);
  ck.put("b", b);
  ck.put_text("meta", "hello");
  const auto bytes = ck.serialize();
  const auto back = ad::Checkpoint::deserialize(bytes);
  EXPECT_EQ(back.serialize(), bytes);
  const auto a2 = back.get<float>("a");
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(a2.data()[i], a.data()[i]);
  EXPECT_EQ(back.get<double>("b").data()[1], 0.2);
  EXPECT_EQ(back.text("meta"), "hello");
  EXPECT_THROW(back.get<float>("missing"), jdsr::DataError);

  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(ad::Checkpoint::deserialize(truncated), jdsr::DataError);
  auto bad_magic = bytes;
  bad_magic[0] ^= 0xFF;
  EXPECT_THROW(ad::Checkpoint::deserialize(bad_magic), jdsr::DataError);
}
