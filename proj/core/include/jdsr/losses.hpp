#pragma once

// Training objectives: pixel L1, feature-space MSE, standard GAN and the
// relativistic average losses with the texture-weighted generator variant.
// Every loss uses mean reduction over the batch.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "jdsr/checkpoint.hpp"
#include "jdsr/tensor.hpp"

namespace jdsr::loss {

struct LossWeights {
  double lambda_adv = 5e-3;  // adversarial term
  double lambda_l1 = 1e-2;   // pixel term
  double gamma = 1.0;        // texture weighting exponent
  double clamp_eps = 1e-7;   // D-hat is clamped to [eps, 1 - eps] before log

  void validate() const;
};

enum class AdversarialKind { kTragan, kRagan, kStandard };
AdversarialKind parse_adversarial(const std::string& name);
std::string to_string(AdversarialKind kind);

// Raw critic scores C(x) for a batch of real and of fake images, each rank 1.
template <typename T>
struct CriticScores {
  ad::Tensor<T> real;
  ad::Tensor<T> fake;
};

template <typename T>
struct RelativisticLogits {
  ad::Tensor<T> real;  // sigma(C(x_r) - mean C(x_f))
  ad::Tensor<T> fake;  // sigma(C(x_f) - mean C(x_r))
};

template <typename T>
ad::Tensor<T> l1_loss(const ad::Tensor<T>& sr, const ad::Tensor<T>& hr);
template <typename T>
ad::Tensor<T> mse_loss(const ad::Tensor<T>& a, const ad::Tensor<T>& b);

// Maps [N,3,H,W] images to feature tensors.
template <typename T>
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual ad::Tensor<T> operator()(const ad::Tensor<T>& images) const = 0;
  virtual std::string name() const = 0;
};

template <typename T>
class IdentityExtractor final : public FeatureExtractor<T> {
 public:
  ad::Tensor<T> operator()(const ad::Tensor<T>& images) const override { return images; }
  std::string name() const override { return "identity"; }
};

// 3x3 conv stack, ReLU between layers and optional 2x2 max pooling after a
// layer. Returns the output of conv layer `layer` (1-based) before its ReLU.
template <typename T>
class ConvStackExtractor final : public FeatureExtractor<T> {
 public:
  struct Layer {
    ad::Tensor<T> weight;  // [out,in,3,3]
    ad::Tensor<T> bias;    // [out]
    bool pool_after = false;
  };

  ConvStackExtractor(std::vector<Layer> layers, std::size_t layer, std::string name);

  // Fixed random 4-layer stack (3 -> width -> ... -> width), He-uniform.
  static ConvStackExtractor random(std::uint64_t seed, std::size_t width = 16,
                                   std::size_t layer = 4);
  // VGG19 convolution weights stored as conv{k}.weight / conv{k}.bias, k = 1..16,
  // with pooling after convs 2, 4, 8 and 12. Only the first `layer` convs are read.
  static ConvStackExtractor vgg19(const ad::Checkpoint& weights, std::size_t layer = 4);

  ad::Tensor<T> operator()(const ad::Tensor<T>& images) const override;
  std::string name() const override { return name_; }
  std::size_t layer() const noexcept { return layer_; }

 private:
  std::vector<Layer> layers_;
  std::size_t layer_;
  std::string name_;
};

struct ExtractorSpec {
  std::string kind = "random-conv";  // random-conv | identity | vgg19 | none
  std::size_t layer = 4;
  std::size_t width = 16;
  std::uint64_t seed = 0;
  std::string weights;  // checkpoint path for vgg19

  void validate() const;
};

// Returns nullptr for kind "none": the perceptual term is then dropped.
template <typename T>
std::unique_ptr<FeatureExtractor<T>> make_extractor(const ExtractorSpec& spec);

// MSE between extractor features of sr and hr. A null extractor yields a
// constant zero.
template <typename T>
ad::Tensor<T> perceptual_loss(const ad::Tensor<T>& sr, const ad::Tensor<T>& hr,
                              const FeatureExtractor<T>* extractor);

template <typename T>
RelativisticLogits<T> relativistic_logits(const CriticScores<T>& scores, double clamp_eps = 1e-7);

template <typename T>
ad::Tensor<T> d_loss_ragan(const CriticScores<T>& scores, double clamp_eps = 1e-7);
template <typename T>
ad::Tensor<T> g_loss_ragan(const CriticScores<T>& scores, double clamp_eps = 1e-7);
template <typename T>
ad::Tensor<T> g_loss_tragan(const CriticScores<T>& scores, double gamma, double clamp_eps = 1e-7);
template <typename T>
ad::Tensor<T> d_loss_standard_gan(const CriticScores<T>& scores, double clamp_eps = 1e-7);
template <typename T>
ad::Tensor<T> g_loss_standard_gan(const CriticScores<T>& scores, double clamp_eps = 1e-7);

template <typename T>
ad::Tensor<T> discriminator_loss(const CriticScores<T>& scores, AdversarialKind kind,
                                 const LossWeights& w);
template <typename T>
ad::Tensor<T> generator_adversarial_loss(const CriticScores<T>& scores, AdversarialKind kind,
                                         const LossWeights& w);

template <typename T>
struct GeneratorLoss {
  ad::Tensor<T> total;
  ad::Tensor<T> perceptual;
  ad::Tensor<T> adversarial;
  ad::Tensor<T> l1;
};

// perceptual + lambda_adv * adversarial + lambda_l1 * L1.
template <typename T>
GeneratorLoss<T> total_generator_loss(const ad::Tensor<T>& sr, const ad::Tensor<T>& hr,
                                      const CriticScores<T>& scores, const LossWeights& w,
                                      const FeatureExtractor<T>* extractor,
                                      AdversarialKind kind = AdversarialKind::kTragan);

}  // namespace jdsr::loss
