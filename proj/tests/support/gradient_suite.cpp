#include "gradient_suite.hpp"

#include <algorithm>
#include <cmath>

#include "jdsr/gradcheck.hpp"
#include "jdsr/losses.hpp"
#include "jdsr/network.hpp"
#include "jdsr/ops.hpp"
#include "jdsr/random.hpp"

namespace jdsr::testing {

using ad::Shape;
using T = double;
using Tn = ad::Tensor<double>;
using Fn = std::function<Tn(const std::vector<Tn>&)>;

namespace {

constexpr double kStep = 1e-5;

Tn random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tn t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Values with |x - k| >= margin for every kink k, so that +-h never crosses one.
Tn away_from(Shape shape, Rng& rng, std::vector<double> kinks, double margin = 0.05) {
  Tn t(std::move(shape));
  for (auto& v : t.data()) {
    do {
      v = rng.uniform(-1.0, 1.0);
    } while (std::any_of(kinks.begin(), kinks.end(),
                         [&](double k) { return std::abs(v - k) < margin; }));
  }
  return t;
}

// Scalar probe sum(f(x) * R) with a fixed random R of unit total weight.
Tn probe(const Tn& y, std::uint64_t seed) {
  Rng rng(seed);
  Tn r(y.shape());
  const double scale = 1.0 / static_cast<double>(y.numel());
  for (auto& v : r.data()) v = rng.uniform(0.5, 1.5) * scale;
  return ad::sum(ad::mul(y, r));
}

// Analytic gradient of every input vs central differences.
double check(const Fn& f, std::vector<Tn> inputs, bool reduce = true) {
  auto scalar = [&](const std::vector<Tn>& in) {
    const auto y = f(in);
    return reduce ? probe(y, 99) : y;
  };
  for (auto& x : inputs) x.set_requires_grad(true);
  {
    ad::Tape<T> tape;
    ad::TapeScope<T> scope(tape);
    tape.backward(scalar(inputs));
  }
  double worst = 0;
  for (auto& x : inputs) {
    const auto analytic = x.grad_tensor();
    const auto numeric = ad::finite_difference_grad<T>(
        [&](const Tn&) { return scalar(inputs); }, x, kStep);
    worst = std::max(worst, ad::max_relative_error(analytic, numeric));
  }
  return worst;
}

// Same check for a sample of coordinates of each parameter tensor.
double check_parameters(const std::function<Tn()>& loss, const net::ParameterSet<T>& params,
                        std::size_t per_tensor, std::uint64_t seed) {
  for (const auto& e : params.entries()) {
    auto p = e.second;
    p.zero_grad();
  }
  {
    ad::Tape<T> tape;
    ad::TapeScope<T> scope(tape);
    tape.backward(loss());
  }
  Rng rng(seed);
  double worst = 0;
  ad::NoTapeScope<T> off;
  for (const auto& e : params.entries()) {
    auto p = e.second;
    auto data = p.data();
    const auto grad = p.grad_tensor();
    for (std::size_t k = 0; k < per_tensor; ++k) {
      const std::size_t i = rng.below(data.size());
      const double orig = data[i];
      data[i] = orig + kStep;
      const double fp = loss().item();
      data[i] = orig - kStep;
      const double fm = loss().item();
      data[i] = orig;
      const double numeric = (fp - fm) / (2 * kStep);
      const double a = grad.data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

GradientCase primitive(std::string name, std::function<double()> run) {
  return {std::move(name), false, std::move(run)};
}

}  // namespace

std::vector<GradientCase> gradient_cases() {
  std::vector<GradientCase> cases;

  cases.push_back(primitive("conv2d 3x3 pad1", [] {
    Rng rng(1);
    return check([](const auto& in) { return ad::conv2d(in[0], in[1], in[2], 1, 1); },
                 {random_tensor({2, 3, 5, 6}, rng), random_tensor({4, 3, 3, 3}, rng),
                  random_tensor({4}, rng)});
  }));
  cases.push_back(primitive("conv2d 3x3 stride2", [] {
    Rng rng(2);
    return check([](const auto& in) { return ad::conv2d(in[0], in[1], in[2], 2, 1); },
                 {random_tensor({1, 2, 7, 8}, rng), random_tensor({3, 2, 3, 3}, rng),
                  random_tensor({3}, rng)});
  }));
  cases.push_back(primitive("conv2d 1x1", [] {
    Rng rng(3);
    return check([](const auto& in) { return ad::conv2d(in[0], in[1], in[2], 1, 0); },
                 {random_tensor({2, 5, 4, 4}, rng), random_tensor({3, 5, 1, 1}, rng),
                  random_tensor({3}, rng)});
  }));
  cases.push_back(primitive("relu", [] {
    Rng rng(4);
    return check([](const auto& in) { return ad::relu(in[0]); }, {away_from({2, 3, 4, 4}, rng, {0.0})});
  }));
  cases.push_back(primitive("leaky_relu", [] {
    Rng rng(5);
    return check([](const auto& in) { return ad::leaky_relu(in[0], 0.2); },
                 {away_from({2, 3, 4, 4}, rng, {0.0})});
  }));
  cases.push_back(primitive("sigmoid", [] {
    Rng rng(6);
    return check([](const auto& in) { return ad::sigmoid(in[0]); }, {random_tensor({2, 3, 4, 4}, rng, -4, 4)});
  }));
  cases.push_back(primitive("global_avg_pool", [] {
    Rng rng(7);
    return check([](const auto& in) { return ad::global_avg_pool(in[0]); }, {random_tensor({2, 3, 4, 5}, rng)});
  }));
  cases.push_back(primitive("scale_channels", [] {
    Rng rng(8);
    return check([](const auto& in) { return ad::scale_channels(in[0], in[1]); },
                 {random_tensor({2, 3, 4, 4}, rng), random_tensor({2, 3, 1, 1}, rng)});
  }));
  cases.push_back(primitive("concat_channels", [] {
    Rng rng(9);
    return check([](const auto& in) { return ad::concat_channels<T>({in[0], in[1], in[2]}); },
                 {random_tensor({2, 1, 3, 3}, rng), random_tensor({2, 3, 3, 3}, rng),
                  random_tensor({2, 2, 3, 3}, rng)});
  }));
  cases.push_back(primitive("slice_channels", [] {
    Rng rng(10);
    return check([](const auto& in) { return ad::slice_channels(in[0], 1, 2); }, {random_tensor({2, 4, 3, 3}, rng)});
  }));
  cases.push_back(primitive("pixel_shuffle", [] {
    Rng rng(11);
    return check([](const auto& in) { return ad::pixel_shuffle(in[0], 2); }, {random_tensor({1, 8, 3, 3}, rng)});
  }));
  cases.push_back(primitive("pixel_unshuffle", [] {
    Rng rng(12);
    return check([](const auto& in) { return ad::pixel_unshuffle(in[0], 3); }, {random_tensor({1, 2, 6, 6}, rng)});
  }));
  cases.push_back(primitive("add", [] {
    Rng rng(13);
    return check([](const auto& in) { return ad::add(in[0], in[1]); },
                 {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)});
  }));
  cases.push_back(primitive("sub broadcast", [] {
    Rng rng(14);
    return check([](const auto& in) { return ad::sub(in[0], in[1]); },
                 {random_tensor({3, 4}, rng), random_tensor({1}, rng)});
  }));
  cases.push_back(primitive("mul", [] {
    Rng rng(15);
    return check([](const auto& in) { return ad::mul(in[0], in[1]); },
                 {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)});
  }));
  cases.push_back(primitive("neg", [] {
    Rng rng(16);
    return check([](const auto& in) { return ad::neg(in[0]); }, {random_tensor({5}, rng)});
  }));
  cases.push_back(primitive("add_scalar mul_scalar", [] {
    Rng rng(17);
    return check([](const auto& in) { return ad::mul_scalar(ad::add_scalar(in[0], 0.3), -1.7); },
                 {random_tensor({5}, rng)});
  }));
  cases.push_back(primitive("log", [] {
    Rng rng(18);
    return check([](const auto& in) { return ad::log(in[0]); }, {random_tensor({6}, rng, 0.2, 3.0)});
  }));
  cases.push_back(primitive("abs", [] {
    Rng rng(19);
    return check([](const auto& in) { return ad::abs(in[0]); }, {away_from({6}, rng, {0.0})});
  }));
  cases.push_back(primitive("square", [] {
    Rng rng(20);
    return check([](const auto& in) { return ad::square(in[0]); }, {random_tensor({6}, rng)});
  }));
  cases.push_back(primitive("pow_scalar", [] {
    Rng rng(21);
    return check([](const auto& in) { return ad::pow_scalar(in[0], 1.7); }, {random_tensor({6}, rng, 0.2, 2.0)});
  }));
  cases.push_back(primitive("clamp", [] {
    Rng rng(22);
    return check([](const auto& in) { return ad::clamp(in[0], -0.5, 0.5); },
                 {away_from({3, 4}, rng, {-0.5, 0.5})});
  }));
  cases.push_back(primitive("sum", [] {
    Rng rng(23);
    return check([](const auto& in) { return ad::sum(in[0]); }, {random_tensor({3, 4}, rng)}, false);
  }));
  cases.push_back(primitive("mean", [] {
    Rng rng(24);
    return check([](const auto& in) { return ad::mean(in[0]); }, {random_tensor({3, 4}, rng)}, false);
  }));
  cases.push_back(primitive("reshape", [] {
    Rng rng(25);
    return check([](const auto& in) { return ad::reshape(in[0], {4, 3}); }, {random_tensor({3, 4}, rng)});
  }));
  cases.push_back(primitive("linear", [] {
    Rng rng(26);
    return check([](const auto& in) { return ad::linear(in[0], in[1], in[2]); },
                 {random_tensor({3, 5}, rng), random_tensor({4, 5}, rng), random_tensor({4}, rng)});
  }));
  cases.push_back(primitive("batch_norm2d", [] {
    Rng rng(27);
    return check([](const auto& in) { return ad::batch_norm2d(in[0], in[1], in[2]); },
                 {random_tensor({2, 3, 3, 3}, rng), random_tensor({3}, rng, 0.5, 1.5),
                  random_tensor({3}, rng)});
  }));
  cases.push_back(primitive("max_pool2x2", [] {
    Rng rng(28);
    return check([](const auto& in) { return ad::max_pool2x2(in[0]); }, {random_tensor({1, 2, 4, 6}, rng)});
  }));

  // Losses with respect to raw critic scores and to sr.
  auto scores_case = [&cases](std::string name, std::function<Tn(const loss::CriticScores<T>&)> f) {
    cases.push_back(primitive(std::move(name), [f] {
      Rng rng(30);
      return check([f](const auto& in) { return f({in[0], in[1]}); },
                   {random_tensor({4}, rng, -2, 2), random_tensor({3}, rng, -2, 2)}, false);
    }));
  };
  scores_case("d_loss_ragan", [](const auto& s) { return loss::d_loss_ragan(s); });
  scores_case("g_loss_ragan", [](const auto& s) { return loss::g_loss_ragan(s); });
  scores_case("g_loss_tragan gamma=1", [](const auto& s) { return loss::g_loss_tragan(s, 1.0); });
  scores_case("g_loss_tragan gamma=2.5", [](const auto& s) { return loss::g_loss_tragan(s, 2.5); });
  scores_case("d_loss_standard_gan", [](const auto& s) { return loss::d_loss_standard_gan(s); });
  scores_case("g_loss_standard_gan", [](const auto& s) { return loss::g_loss_standard_gan(s); });
  cases.push_back(primitive("l1_loss", [] {
    Rng rng(31);
    const auto hr = random_tensor({1, 3, 4, 4}, rng);
    auto sr = random_tensor({1, 3, 4, 4}, rng);
    // keep |sr - hr| away from the kink
    for (std::size_t i = 0; i < sr.numel(); ++i) {
      if (std::abs(sr.data()[i] - hr.data()[i]) < 0.05) sr.data()[i] = hr.data()[i] + 0.1;
    }
    return check([hr](const auto& in) { return loss::l1_loss(in[0], hr); }, {sr}, false);
  }));
  cases.push_back(primitive("perceptual_loss random-conv", [] {
    Rng rng(32);
    const auto ext = loss::ConvStackExtractor<T>::random(5, 4, 4);
    const auto hr = random_tensor({1, 3, 6, 6}, rng, 0, 1);
    return check([&ext, hr](const auto& in) { return loss::perceptual_loss<T>(in[0], hr, &ext); },
                 {random_tensor({1, 3, 6, 6}, rng, 0, 1)}, false);
  }));

  cases.push_back({"toy generator B=2 n=2 C=8 s=2", true, [] {
    const net::Generator<T> g(net::NetworkConfig::toy(2), 41);
    Rng rng(42);
    auto cfa3 = random_tensor({1, 3, 8, 8}, rng, 0, 1);
    auto init = random_tensor({1, 3, 8, 8}, rng, 0, 1);
    const double inputs = check([&g](const auto& in) { return g(in[0], in[1]); }, {cfa3, init});
    cfa3.set_requires_grad(false);
    init.set_requires_grad(false);
    const double params =
        check_parameters([&] { return probe(g(cfa3, init), 99); }, g.parameters(), 3, 43);
    return std::max(inputs, params);
  }});
  cases.push_back({"toy generator one-channel input", true, [] {
    auto cfg = net::NetworkConfig::toy(3);
    cfg.use_pdnet = false;
    cfg.input = net::InputRepresentation::kOneChannel;
    const net::Generator<T> g(cfg, 44);
    Rng rng(45);
    return check([&g](const auto& in) { return g(in[0], in[0]); }, {random_tensor({1, 1, 4, 4}, rng, 0, 1)});
  }});
  cases.push_back({"discriminator", true, [] {
    net::DiscriminatorConfig dc;
    dc.base_channels = 2;
    dc.dense_units = 6;
    const net::Discriminator<T> d(dc, 16, 46);
    Rng rng(47);
    auto img = random_tensor({2, 3, 16, 16}, rng, 0, 1);
    const double inputs = check([&d](const auto& in) { return d(in[0]); }, {img});
    img.set_requires_grad(false);
    const double params = check_parameters([&] { return probe(d(img), 98); }, d.parameters(), 3, 48);
    return std::max(inputs, params);
  }});
  return cases;
}

}  // namespace jdsr::testing
