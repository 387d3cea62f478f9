#include <gtest/gtest.h>

#include <fstream>
#include <json.hpp>

#include "jdsr/config.hpp"
#include "jdsr/errors.hpp"

using namespace jdsr;
using namespace jdsr::config;
namespace fs = std::filesystem;

TEST(Config, DefaultsFromEmptyDocument) {
  const auto c = parse("{}");
  EXPECT_EQ(c.network, net::NetworkConfig{});
  EXPECT_EQ(c.trainer.batch_size, 16u);
  EXPECT_DOUBLE_EQ(c.loss.weights.lambda_adv, 5e-3);
  EXPECT_DOUBLE_EQ(c.loss.weights.lambda_l1, 1e-2);
  EXPECT_EQ(c.loss.adversarial, loss::AdversarialKind::kTragan);
  EXPECT_EQ(c.demosaic.kind, demosaic::DemosaicMethod::Kind::kBilinear);
}

TEST(Config, ShippedConfigsLoad) {
  const fs::path dir = fs::path(JDSR_SOURCE_DIR) / "configs";
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load(e.path())) << e.path();
    ++n;
  }
  EXPECT_GE(n, 2u);
  const auto paper = load(dir / "paper.json");
  EXPECT_EQ(paper.network, net::NetworkConfig::paper(4));
  EXPECT_EQ(paper.demosaic.kind, demosaic::DemosaicMethod::Kind::kResidualRefine);
}

TEST(Config, DumpIsCanonicalAndRoundTrips) {
  const auto c = parse(R"({"seed": 3, "network": {"toy_mode": true, "scale": 3},
                           "trainer": {"schedule": {"divisor": 100}}})");
  const auto text = dump(c);
  const auto back = parse(text);
  EXPECT_EQ(dump(back), text);
  EXPECT_EQ(hash(back), hash(c));
  EXPECT_EQ(hash(c).size(), 64u);
  // Key order in the input does not change the hash.
  const auto d = parse(R"({"trainer": {"schedule": {"divisor": 100}},
                           "network": {"scale": 3, "toy_mode": true}, "seed": 3})");
  EXPECT_EQ(hash(d), hash(c));
  EXPECT_NE(hash(parse(R"({"seed": 4})")), hash(parse(R"({"seed": 3})")));
}

TEST(Config, MilestonesAreScaledByDivisor) {
  const auto c = parse(R"({"trainer": {"schedule": {"divisor": 100}}})");
  EXPECT_EQ(scaled_milestones(c.trainer.schedule), (std::vector<std::uint64_t>{800, 1200, 1500, 1800}));
  const auto clash = R"({"trainer": {"schedule": {"milestones": [10, 15], "divisor": 100}}})";
  EXPECT_THROW(parse(clash), ConfigError);
}

TEST(Config, ToyModeUsesToySizes) {
  const auto c = parse(R"({"network": {"toy_mode": true, "scale": 2}})");
  const auto e = c.network.effective();
  EXPECT_EQ(e.num_blocks, 2u);
  EXPECT_EQ(e.modules_per_block, 2u);
  EXPECT_EQ(e.channels, 8u);
  EXPECT_EQ(e.scale, 2u);
}

TEST(Config, MalformedCorpusNamesTheOffendingKey) {
  const fs::path dir = fs::path(JDSR_TEST_DATA) / "malformed_configs";
  std::ifstream in(dir / "expected.json");
  const auto expected = nlohmann::json::parse(in);
  ASSERT_GE(expected.size(), 15u);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename() == "expected.json") continue;
    ++files;
    const auto name = e.path().filename().string();
    ASSERT_TRUE(expected.contains(name)) << name << " has no expected entry";
    try {
      load(e.path());
      ADD_FAILURE() << name << " was accepted";
    } catch (const ConfigError& err) {
      EXPECT_EQ(err.path(), expected[name]["path"].get<std::string>()) << name << ": " << err.what();
    }
  }
  EXPECT_EQ(files, expected.size());
}

TEST(Config, MissingFileIsAConfigError) {
  EXPECT_THROW(load("/nonexistent/run.json"), ConfigError);
}
