#include "jdsr/losses.hpp"

#include <cmath>

#include "jdsr/errors.hpp"
#include "jdsr/ops.hpp"
#include "jdsr/random.hpp"

namespace jdsr::loss {

using ad::Tensor;

void LossWeights::validate() const {
  if (!(lambda_adv >= 0.0) || !std::isfinite(lambda_adv)) {
    throw ConfigError("loss.lambda_adv", "must be a finite value >= 0");
  }
  if (!(lambda_l1 >= 0.0) || !std::isfinite(lambda_l1)) {
    throw ConfigError("loss.lambda_l1", "must be a finite value >= 0");
  }
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw ConfigError("loss.gamma", "must be a finite value >= 0");
  }
  if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) {
    throw ConfigError("loss.clamp_eps", "must be in (0, 0.5)");
  }
}

AdversarialKind parse_adversarial(const std::string& name) {
  if (name == "tragan") return AdversarialKind::kTragan;
  if (name == "ragan") return AdversarialKind::kRagan;
  if (name == "standard") return AdversarialKind::kStandard;
  throw ConfigError("loss.adversarial", "unknown adversarial loss '" + name +
                                            "' (expected tragan, ragan or standard)");
}

std::string to_string(AdversarialKind kind) {
  switch (kind) {
    case AdversarialKind::kTragan: return "tragan";
    case AdversarialKind::kRagan: return "ragan";
    case AdversarialKind::kStandard: return "standard";
  }
  return "?";
}

void ExtractorSpec::validate() const {
  if (kind != "random-conv" && kind != "identity" && kind != "vgg19" && kind != "none") {
    throw ConfigError("loss.extractor.kind",
                      "unknown extractor '" + kind + "' (expected random-conv, identity, vgg19 or none)");
  }
  if (kind == "random-conv" && (layer < 1 || layer > 4)) {
    throw ConfigError("loss.extractor.layer", "random-conv has layers 1..4");
  }
  if (kind == "vgg19" && (layer < 1 || layer > 16)) {
    throw ConfigError("loss.extractor.layer", "vgg19 has conv layers 1..16");
  }
  if (kind == "random-conv" && width < 1) throw ConfigError("loss.extractor.width", "must be >= 1");
  if (kind == "vgg19" && weights.empty()) {
    throw ConfigError("loss.extractor.weights", "vgg19 needs a weights checkpoint");
  }
}

namespace {

template <typename T>
Tensor<T> one_minus(const Tensor<T>& x) {
  return ad::add_scalar(ad::neg(x), T{1});
}

template <typename T>
void check_scores(const CriticScores<T>& s) {
  if (!s.real.defined() || !s.fake.defined() || s.real.numel() == 0 || s.fake.numel() == 0) {
    throw DimensionError("critic scores: real and fake batches must be non-empty");
  }
  if (s.real.rank() != 1 || s.fake.rank() != 1) {
    throw DimensionError("critic scores: expected rank-1 score vectors, got " +
                         ad::to_string(s.real.shape()) + " and " + ad::to_string(s.fake.shape()));
  }
}

template <typename T>
Tensor<T> clamped_sigmoid(const Tensor<T>& x, double eps) {
  return ad::clamp(ad::sigmoid(x), static_cast<T>(eps), static_cast<T>(1.0 - eps));
}

}  // namespace

template <typename T>
Tensor<T> l1_loss(const Tensor<T>& sr, const Tensor<T>& hr) {
  if (sr.shape() != hr.shape()) {
    throw DimensionError("l1_loss: shapes " + ad::to_string(sr.shape()) + " and " +
                         ad::to_string(hr.shape()) + " differ");
  }
  return ad::mean(ad::abs(ad::sub(sr, hr)));
}

template <typename T>
Tensor<T> mse_loss(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("mse_loss: shapes " + ad::to_string(a.shape()) + " and " +
                         ad::to_string(b.shape()) + " differ");
  }
  return ad::mean(ad::square(ad::sub(a, b)));
}

template <typename T>
ConvStackExtractor<T>::ConvStackExtractor(std::vector<Layer> layers, std::size_t layer,
                                          std::string name)
    : layers_(std::move(layers)), layer_(layer), name_(std::move(name)) {
  if (layer_ < 1 || layer_ > layers_.size()) {
    throw ConfigError("loss.extractor.layer", "layer " + std::to_string(layer_) +
                                                  " out of range 1.." +
                                                  std::to_string(layers_.size()));
  }
}

template <typename T>
ConvStackExtractor<T> ConvStackExtractor<T>::random(std::uint64_t seed, std::size_t width,
                                                    std::size_t layer) {
  Rng rng(seed);
  std::vector<Layer> layers;
  std::size_t in = 3;
  for (std::size_t i = 0; i < 4; ++i) {
    Layer l;
    l.weight = Tensor<T>({width, in, 3, 3});
    l.bias = Tensor<T>({width});
    const double bound = std::sqrt(6.0 / static_cast<double>(in * 9));
    for (auto& v : l.weight.data()) v = static_cast<T>(rng.uniform(-bound, bound));
    layers.push_back(std::move(l));
    in = width;
  }
  return ConvStackExtractor(std::move(layers), layer, "random-conv");
}

template <typename T>
ConvStackExtractor<T> ConvStackExtractor<T>::vgg19(const ad::Checkpoint& weights,
                                                   std::size_t layer) {
  if (layer < 1 || layer > 16) throw ConfigError("loss.extractor.layer", "vgg19 has conv layers 1..16");
  std::vector<Layer> layers;
  std::size_t in = 3;
  for (std::size_t k = 1; k <= layer; ++k) {
    const std::string base = "conv" + std::to_string(k);
    if (!weights.contains(base + ".weight") || !weights.contains(base + ".bias")) {
      throw DataError("vgg19 weights: missing " + base + ".weight or " + base + ".bias");
    }
    Layer l;
    l.weight = weights.get<T>(base + ".weight");
    l.bias = weights.get<T>(base + ".bias");
    if (l.weight.rank() != 4 || l.weight.dim(1) != in || l.weight.dim(2) != 3 ||
        l.weight.dim(3) != 3 || l.bias.shape() != ad::Shape{l.weight.dim(0)}) {
      throw DataError("vgg19 weights: " + base + " has unexpected shape " +
                      ad::to_string(l.weight.shape()));
    }
    l.pool_after = k == 2 || k == 4 || k == 8 || k == 12;
    in = l.weight.dim(0);
    layers.push_back(std::move(l));
  }
  return ConvStackExtractor(std::move(layers), layer, "vgg19");
}

template <typename T>
Tensor<T> ConvStackExtractor<T>::operator()(const Tensor<T>& images) const {
  Tensor<T> h = images;
  for (std::size_t i = 0; i < layer_; ++i) {
    h = ad::conv2d(h, layers_[i].weight, layers_[i].bias, 1, 1);
    if (i + 1 == layer_) break;
    h = ad::relu(h);
    if (layers_[i].pool_after) h = ad::max_pool2x2(h);
  }
  return h;
}

template <typename T>
std::unique_ptr<FeatureExtractor<T>> make_extractor(const ExtractorSpec& spec) {
  spec.validate();
  if (spec.kind == "none") return nullptr;
  if (spec.kind == "identity") return std::make_unique<IdentityExtractor<T>>();
  if (spec.kind == "vgg19") {
    return std::make_unique<ConvStackExtractor<T>>(
        ConvStackExtractor<T>::vgg19(ad::Checkpoint::load(spec.weights), spec.layer));
  }
  return std::make_unique<ConvStackExtractor<T>>(
      ConvStackExtractor<T>::random(spec.seed, spec.width, spec.layer));
}

template <typename T>
Tensor<T> perceptual_loss(const Tensor<T>& sr, const Tensor<T>& hr,
                          const FeatureExtractor<T>* extractor) {
  if (sr.shape() != hr.shape()) {
    throw DimensionError("perceptual_loss: shapes " + ad::to_string(sr.shape()) + " and " +
                         ad::to_string(hr.shape()) + " differ");
  }
  if (!extractor) return Tensor<T>::scalar(T{0});
  const auto fs = (*extractor)(sr);
  const auto fh = (*extractor)(hr);
  if (fs.shape() != fh.shape()) {
    throw DimensionError("perceptual_loss: extractor produced " + ad::to_string(fs.shape()) +
                         " and " + ad::to_string(fh.shape()));
  }
  return mse_loss(fs, fh);
}

template <typename T>
RelativisticLogits<T> relativistic_logits(const CriticScores<T>& s, double clamp_eps) {
  check_scores(s);
  return {clamped_sigmoid(ad::sub(s.real, ad::mean(s.fake)), clamp_eps),
          clamped_sigmoid(ad::sub(s.fake, ad::mean(s.real)), clamp_eps)};
}

template <typename T>
Tensor<T> d_loss_ragan(const CriticScores<T>& s, double clamp_eps) {
  const auto d = relativistic_logits(s, clamp_eps);
  return ad::neg(ad::add(ad::mean(ad::log(d.real)), ad::mean(ad::log(one_minus(d.fake)))));
}

template <typename T>
Tensor<T> g_loss_ragan(const CriticScores<T>& s, double clamp_eps) {
  const auto d = relativistic_logits(s, clamp_eps);
  return ad::neg(ad::add(ad::mean(ad::log(one_minus(d.real))), ad::mean(ad::log(d.fake))));
}

template <typename T>
Tensor<T> g_loss_tragan(const CriticScores<T>& s, double gamma, double clamp_eps) {
  if (!(gamma >= 0.0)) throw DomainError("g_loss_tragan: gamma must be >= 0");
  const auto d = relativistic_logits(s, clamp_eps);
  const T g = static_cast<T>(gamma);
  const auto real_term = ad::mul(ad::pow_scalar(d.real, g), ad::log(one_minus(d.real)));
  const auto fake_term = ad::mul(ad::pow_scalar(one_minus(d.fake), g), ad::log(d.fake));
  return ad::neg(ad::add(ad::mean(real_term), ad::mean(fake_term)));
}

template <typename T>
Tensor<T> d_loss_standard_gan(const CriticScores<T>& s, double clamp_eps) {
  check_scores(s);
  const auto pr = clamped_sigmoid(s.real, clamp_eps);
  const auto pf = clamped_sigmoid(s.fake, clamp_eps);
  return ad::neg(ad::add(ad::mean(ad::log(pr)), ad::mean(ad::log(one_minus(pf)))));
}

template <typename T>
Tensor<T> g_loss_standard_gan(const CriticScores<T>& s, double clamp_eps) {
  check_scores(s);
  return ad::neg(ad::mean(ad::log(clamped_sigmoid(s.fake, clamp_eps))));
}

template <typename T>
Tensor<T> discriminator_loss(const CriticScores<T>& s, AdversarialKind kind, const LossWeights& w) {
  if (kind == AdversarialKind::kStandard) return d_loss_standard_gan(s, w.clamp_eps);
  return d_loss_ragan(s, w.clamp_eps);
}

template <typename T>
Tensor<T> generator_adversarial_loss(const CriticScores<T>& s, AdversarialKind kind,
                                     const LossWeights& w) {
  switch (kind) {
    case AdversarialKind::kStandard: return g_loss_standard_gan(s, w.clamp_eps);
    case AdversarialKind::kRagan: return g_loss_ragan(s, w.clamp_eps);
    case AdversarialKind::kTragan: break;
  }
  return g_loss_tragan(s, w.gamma, w.clamp_eps);
}

template <typename T>
GeneratorLoss<T> total_generator_loss(const Tensor<T>& sr, const Tensor<T>& hr,
                                      const CriticScores<T>& scores, const LossWeights& w,
                                      const FeatureExtractor<T>* extractor,
                                      AdversarialKind kind) {
  GeneratorLoss<T> out;
  out.perceptual = perceptual_loss(sr, hr, extractor);
  out.adversarial = generator_adversarial_loss(scores, kind, w);
  out.l1 = l1_loss(sr, hr);
  out.total = ad::add(ad::add(out.perceptual, ad::mul_scalar(out.adversarial, static_cast<T>(w.lambda_adv))),
                      ad::mul_scalar(out.l1, static_cast<T>(w.lambda_l1)));
  return out;
}

#define JDSR_INSTANTIATE_LOSSES(T)                                                            \
  template Tensor<T> l1_loss(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> mse_loss(const Tensor<T>&, const Tensor<T>&);                            \
  template class ConvStackExtractor<T>;                                                       \
  template std::unique_ptr<FeatureExtractor<T>> make_extractor<T>(const ExtractorSpec&);      \
  template Tensor<T> perceptual_loss(const Tensor<T>&, const Tensor<T>&,                      \
                                     const FeatureExtractor<T>*);                             \
  template RelativisticLogits<T> relativistic_logits(const CriticScores<T>&, double);         \
  template Tensor<T> d_loss_ragan(const CriticScores<T>&, double);                            \
  template Tensor<T> g_loss_ragan(const CriticScores<T>&, double);                            \
  template Tensor<T> g_loss_tragan(const CriticScores<T>&, double, double);                   \
  template Tensor<T> d_loss_standard_gan(const CriticScores<T>&, double);                     \
  template Tensor<T> g_loss_standard_gan(const CriticScores<T>&, double);                     \
  template Tensor<T> discriminator_loss(const CriticScores<T>&, AdversarialKind,              \
                                        const LossWeights&);                                  \
  template Tensor<T> generator_adversarial_loss(const CriticScores<T>&, AdversarialKind,      \
                                                const LossWeights&);                          \
  template GeneratorLoss<T> total_generator_loss(const Tensor<T>&, const Tensor<T>&,          \
                                                 const CriticScores<T>&, const LossWeights&,  \
                                                 const FeatureExtractor<T>*, AdversarialKind);

JDSR_INSTANTIATE_LOSSES(float)
JDSR_INSTANTIATE_LOSSES(double)

#undef JDSR_INSTANTIATE_LOSSES

}  // namespace jdsr::loss
