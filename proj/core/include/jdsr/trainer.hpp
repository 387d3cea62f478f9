#pragma once

// Optimisation: Adam, the milestone schedule, L1 pretraining, adversarial
// fine-tuning and the training-run driver that writes checkpoints, loss
// curves and the run manifest.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "jdsr/cfa.hpp"
#include "jdsr/checkpoint.hpp"
#include "jdsr/config.hpp"
#include "jdsr/losses.hpp"
#include "jdsr/network.hpp"

namespace jdsr::train {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
class Adam {
 public:
  explicit Adam(net::ParameterSet<T>& params, AdamConfig cfg = {});

  // One bias-corrected update of every parameter. Throws if a parameter has
  // no gradient.
  void step(double lr);
  std::uint64_t t() const noexcept { return t_; }
  const std::vector<std::vector<double>>& first_moments() const noexcept { return m_; }
  const std::vector<std::vector<double>>& second_moments() const noexcept { return v_; }

 private:
  net::ParameterSet<T>* params_;
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

// lr(t) = base * factor^(number of scaled milestones <= t).
class Schedule {
 public:
  explicit Schedule(const config::ScheduleConfig& cfg);
  double lr(std::uint64_t step) const;
  const std::vector<std::uint64_t>& milestones() const noexcept { return milestones_; }

 private:
  double base_;
  double factor_;
  std::vector<std::uint64_t> milestones_;
};

// Rescales gradients so their global L2 norm is at most max_norm. Returns the
// norm before clipping.
template <typename T>
double clip_grad_norm(net::ParameterSet<T>& params, double max_norm);

struct Dataset {
  std::vector<cfa::TrainingExample> examples;
  std::vector<std::filesystem::path> sources;  // image files, for the manifest
};

// Loads data.train (files or directories) plus data.synthetic images and
// prepares LR mosaics at the configured scale and phase.
Dataset build_dataset(const config::RunConfig& cfg);

// Patches for one step, deterministic in `seed`.
cfa::PatchBatch make_batch(const Dataset& data, std::size_t batch_size, std::size_t patch_size,
                           bool augment, std::uint64_t seed);

// Per-step batch seed shared by pretraining and adversarial training.
std::uint64_t batch_seed(std::uint64_t run_seed, std::uint64_t step);

struct LossTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string csv() const;
  void write(const std::filesystem::path& path) const;
  std::vector<double> column(const std::string& name) const;
};

using StepCallback = std::function<void(const LossTable&)>;

// Adam on the L1 loss; columns step,lr,l1. The loss of a step is measured
// before that step's update.
LossTable pretrain_generator(net::Generator<float>& g, const Dataset& data,
                             const config::RunConfig& cfg, const StepCallback& on_step = {});

// Per step: d_steps_per_g discriminator updates, then one generator update on
// the total loss. Columns step,lr,d_loss,g_total,perceptual,adversarial,l1.
LossTable adversarial_train(net::Generator<float>& g, net::Discriminator<float>& d,
                            const Dataset& data, const config::RunConfig& cfg,
                            const loss::FeatureExtractor<float>* extractor,
                            const StepCallback& on_step = {});

// Checkpoint helpers. The run config travels with the weights as text.
void save_generator(const std::filesystem::path& path, const net::Generator<float>& g,
                    const config::RunConfig& cfg);
struct LoadedGenerator {
  config::RunConfig config;
  std::unique_ptr<net::Generator<float>> generator;
  std::vector<cfa::Phase> phases;  // phases seen in training
};
LoadedGenerator load_generator(const std::filesystem::path& path);
void save_discriminator(const std::filesystem::path& path, const net::Discriminator<float>& d);

std::vector<cfa::Phase> trained_phases(const config::RunConfig& cfg);

struct RunOptions {
  std::filesystem::path init_generator;  // start from this checkpoint, if set
  std::ostream* log = nullptr;           // progress lines
  std::size_t log_every = 100;
};

struct RunResult {
  std::filesystem::path pretrain_csv;
  std::filesystem::path adversarial_csv;
  std::filesystem::path generator_checkpoint;
  std::filesystem::path manifest;
  LossTable pretrain;
  LossTable adversarial;
};

// Writes into out_dir: pretrain_loss.csv, generator_pretrain.ckpt,
// adversarial_loss.csv + discriminator.ckpt (when adversarial_steps > 0),
// generator.ckpt and manifest.json.
RunResult run_training(const config::RunConfig& cfg, const std::filesystem::path& out_dir,
                       const RunOptions& options = {});

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace jdsr::train
