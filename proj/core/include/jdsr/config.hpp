#pragma once

// Run configuration: one JSON document per run, validated strictly (unknown
// keys, wrong types and out-of-range values raise ConfigError with the path
// of the offending key). docs/config.schema.json mirrors these rules.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "jdsr/cfa.hpp"
#include "jdsr/demosaic.hpp"
#include "jdsr/losses.hpp"
#include "jdsr/metrics.hpp"
#include "jdsr/network.hpp"

namespace jdsr::config {

struct ScheduleConfig {
  double lr = 1e-4;
  std::vector<std::uint64_t> milestones = {80000, 120000, 150000, 180000};
  double divisor = 1000;  // milestones are divided by this for desk-scale runs
  double factor = 0.5;
};

struct TrainerConfig {
  ScheduleConfig schedule;
  std::size_t batch_size = 16;
  std::size_t patch_size = 48;  // LR CFA patch side
  std::size_t pretrain_steps = 1000;
  std::size_t adversarial_steps = 0;
  std::size_t d_steps_per_g = 1;
  double grad_clip = 0;  // global-norm clip, 0 = off
  bool augment = true;
};

// Smooth procedurally generated HR images, used when no files are given.
struct SyntheticData {
  std::size_t count = 0;
  std::size_t size = 32;
  std::uint64_t seed = 0;
};

struct DataConfig {
  std::vector<std::string> train;  // HR image files or directories
  SyntheticData synthetic;
  cfa::Phase phase = cfa::Phase::kRGGB;
};

struct LossConfig {
  loss::LossWeights weights;
  loss::AdversarialKind adversarial = loss::AdversarialKind::kTragan;
  loss::ExtractorSpec extractor;
};

struct MetricsConfig {
  bool crop_border = false;  // crop `scale` pixels per side
  metrics::SsimMode ssim_mode = metrics::SsimMode::kRgbMean;
};

struct RunConfig {
  std::uint64_t seed = 0;
  net::NetworkConfig network;
  net::DiscriminatorConfig discriminator;
  LossConfig loss;
  TrainerConfig trainer;
  DataConfig data;
  demosaic::DemosaicMethod demosaic = demosaic::DemosaicMethod::bilinear();
  MetricsConfig metrics;

  void validate() const;
};

RunConfig parse(const std::string& json_text);
RunConfig load(const std::filesystem::path& path);
// Canonical JSON (sorted keys, every field present).
std::string dump(const RunConfig& cfg);
// SHA-256 of dump().
std::string hash(const RunConfig& cfg);

// Scaled milestones: floor(m / divisor).
std::vector<std::uint64_t> scaled_milestones(const ScheduleConfig& s);

}  // namespace jdsr::config
