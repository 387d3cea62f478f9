#include "jdsr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "jdsr/errors.hpp"
#include "jdsr/image_io.hpp"
#include "jdsr/manifest.hpp"
#include "jdsr/random.hpp"

namespace jdsr::train {

namespace fs = std::filesystem;
using ad::Tensor;

namespace {

// Seed streams derived from the run seed.
constexpr std::uint64_t kBatchStream = 1;
constexpr std::uint64_t kGeneratorInit = 100;
constexpr std::uint64_t kDiscriminatorInit = 101;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

template <typename T>
Adam<T>::Adam(net::ParameterSet<T>& params, AdamConfig cfg) : params_(&params), cfg_(cfg) {
  for (const auto& e : params.entries()) {
    m_.emplace_back(e.second.numel(), 0.0);
    v_.emplace_back(e.second.numel(), 0.0);
  }
}

template <typename T>
void Adam<T>::step(double lr) {
  const auto& entries = params_->entries();
  if (entries.size() != m_.size()) throw Error("adam: parameter set changed after construction");
  for (const auto& e : entries) {
    if (!e.second.has_grad()) throw Error("adam: parameter '" + e.first + "' has no gradient");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < entries.size(); ++k) {
    auto p = entries[k].second;
    auto data = p.data();
    auto grad = p.grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double g = grad[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      data[i] = static_cast<T>(static_cast<double>(data[i]) - lr * mhat / (std::sqrt(vhat) + cfg_.eps));
    }
  }
}

Schedule::Schedule(const config::ScheduleConfig& cfg)
    : base_(cfg.lr), factor_(cfg.factor), milestones_(config::scaled_milestones(cfg)) {}

double Schedule::lr(std::uint64_t step) const {
  double lr = base_;
  for (auto m : milestones_) {
    if (m <= step) lr *= factor_;
  }
  return lr;
}

template <typename T>
double clip_grad_norm(net::ParameterSet<T>& params, double max_norm) {
  double sq = 0;
  for (const auto& e : params.entries()) {
    if (!e.second.has_grad()) continue;
    for (T g : e.second.grad()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (const auto& e : params.entries()) {
      if (!e.second.has_grad()) continue;
      for (auto& g : e.second.mutable_grad()) g = static_cast<T>(g * s);
    }
  }
  return norm;
}

Dataset build_dataset(const config::RunConfig& cfg) {
  Dataset ds;
  const std::size_t scale = cfg.network.scale;
  for (const auto& entry : cfg.data.train) {
    const fs::path p(entry);
    std::vector<fs::path> files;
    if (fs::is_directory(p)) {
      files = io::list_images(p);
    } else {
      files.push_back(p);
    }
    for (const auto& f : files) {
      ds.examples.push_back(cfa::prepare_example(io::read_image(f), scale, cfg.data.phase));
      ds.sources.push_back(f);
    }
  }
  for (std::size_t i = 0; i < cfg.data.synthetic.count; ++i) {
    const auto img = io::synthetic_image(cfg.data.synthetic.size, cfg.data.synthetic.size,
                                         derive_seed(cfg.data.synthetic.seed, i));
    ds.examples.push_back(cfa::prepare_example(img, scale, cfg.data.phase));
  }
  if (ds.examples.empty()) throw DataError("training set is empty (set data.train or data.synthetic)");
  for (const auto& ex : ds.examples) {
    if (ex.lr_cfa.height < cfg.trainer.patch_size || ex.lr_cfa.width < cfg.trainer.patch_size) {
      throw DataError("training image too small: LR mosaic " + std::to_string(ex.lr_cfa.height) +
                      "x" + std::to_string(ex.lr_cfa.width) + " is smaller than the " +
                      std::to_string(cfg.trainer.patch_size) + " patch");
    }
  }
  return ds;
}

std::uint64_t batch_seed(std::uint64_t run_seed, std::uint64_t step) {
  return derive_seed(derive_seed(run_seed, kBatchStream), step);
}

cfa::PatchBatch make_batch(const Dataset& data, std::size_t batch_size, std::size_t patch_size,
                           bool augment, std::uint64_t seed) {
  if (data.examples.empty()) throw DataError("make_batch: empty dataset");
  Rng rng(seed);
  cfa::PatchBatch batch;
  for (std::size_t b = 0; b < batch_size; ++b) {
    const auto& ex = data.examples[rng.below(data.examples.size())];
    auto one = cfa::sample_patches(ex, 1, derive_seed(seed, b), patch_size);
    batch.pairs.push_back(std::move(one.pairs.front()));
  }
  if (augment) batch = cfa::augment(batch, derive_seed(seed, batch_size + 1));
  return batch;
}

std::string LossTable::csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

void LossTable::write(const fs::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << csv();
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<double> LossTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw Error("loss table has no column '" + name + "'");
  const auto k = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r[k]);
  return out;
}

namespace {

struct BatchTensors {
  net::GeneratorInputs<float> inputs;
  Tensor<float> hr;
};

BatchTensors batch_tensors(const cfa::PatchBatch& batch, const config::RunConfig& cfg) {
  std::vector<cfa::CfaFrame> frames;
  std::vector<cfa::RgbImage> hrs;
  for (const auto& p : batch.pairs) {
    frames.push_back(p.cfa);
    hrs.push_back(p.hr);
  }
  return {net::make_inputs<float>(frames, cfg.network, cfg.demosaic), cfa::stack<float>(hrs)};
}

double checked_value(const Tensor<float>& t, const char* what, std::size_t step) {
  const double v = t.item();
  if (!std::isfinite(v)) {
    throw NumericalError(std::string(what) + " is not finite at step " + std::to_string(step));
  }
  return v;
}

template <typename F>
auto guarded(std::size_t step, F&& f) {
  try {
    return f();
  } catch (const NumericalError& e) {
    throw NumericalError("training diverged at step " + std::to_string(step) + ": " + e.what());
  }
}

}  // namespace

LossTable pretrain_generator(net::Generator<float>& g, const Dataset& data,
                             const config::RunConfig& cfg, const StepCallback& on_step) {
  const auto& tc = cfg.trainer;
  Schedule schedule(tc.schedule);
  Adam<float> adam(g.parameters());
  LossTable log{{"step", "lr", "l1"}, {}};
  for (std::size_t step = 0; step < tc.pretrain_steps; ++step) {
    const double lr = schedule.lr(step);
    const auto batch =
        make_batch(data, tc.batch_size, tc.patch_size, tc.augment, batch_seed(cfg.seed, step));
    const auto bt = batch_tensors(batch, cfg);
    const double l1 = guarded(step, [&] {
      g.parameters().zero_grad();
      ad::Tape<float> tape;
      ad::TapeScope<float> scope(tape);
      const auto sr = g(bt.inputs.cfa, bt.inputs.init);
      const auto loss = loss::l1_loss(sr, bt.hr);
      const double v = checked_value(loss, "L1 loss", step);
      tape.backward(loss);
      return v;
    });
    if (tc.grad_clip > 0) clip_grad_norm(g.parameters(), tc.grad_clip);
    adam.step(lr);
    log.rows.push_back({static_cast<double>(step), lr, l1});
    if (on_step) on_step(log);
  }
  return log;
}

LossTable adversarial_train(net::Generator<float>& g, net::Discriminator<float>& d,
                            const Dataset& data, const config::RunConfig& cfg,
                            const loss::FeatureExtractor<float>* extractor,
                            const StepCallback& on_step) {
  const auto& tc = cfg.trainer;
  const auto& w = cfg.loss.weights;
  const auto kind = cfg.loss.adversarial;
  const std::size_t hr_size = tc.patch_size * cfg.network.scale;
  if (d.input_size() != hr_size) {
    throw ConfigError("discriminator", "input size " + std::to_string(d.input_size()) +
                                           " does not match HR patch size " + std::to_string(hr_size));
  }
  Schedule schedule(tc.schedule);
  Adam<float> adam_g(g.parameters());
  Adam<float> adam_d(d.parameters());
  LossTable log{{"step", "lr", "d_loss", "g_total", "perceptual", "adversarial", "l1"}, {}};
  for (std::size_t step = 0; step < tc.adversarial_steps; ++step) {
    const double lr = schedule.lr(step);
    const auto batch =
        make_batch(data, tc.batch_size, tc.patch_size, tc.augment, batch_seed(cfg.seed, step));
    const auto bt = batch_tensors(batch, cfg);

    double d_loss = 0;
    for (std::size_t k = 0; k < tc.d_steps_per_g; ++k) {
      d_loss = guarded(step, [&] {
        Tensor<float> fake_images;
        {
          ad::NoTapeScope<float> off;
          fake_images = g(bt.inputs.cfa, bt.inputs.init);
        }
        d.parameters().zero_grad();
        ad::Tape<float> tape;
        ad::TapeScope<float> scope(tape);
        const loss::CriticScores<float> scores{d(bt.hr), d(fake_images)};
        const auto dl = loss::discriminator_loss(scores, kind, w);
        const double v = checked_value(dl, "discriminator loss", step);
        tape.backward(dl);
        return v;
      });
      if (tc.grad_clip > 0) clip_grad_norm(d.parameters(), tc.grad_clip);
      adam_d.step(lr);
    }

    const auto terms = guarded(step, [&] {
      g.parameters().zero_grad();
      d.parameters().zero_grad();
      ad::Tape<float> tape;
      ad::TapeScope<float> scope(tape);
      const auto sr = g(bt.inputs.cfa, bt.inputs.init);
      const loss::CriticScores<float> scores{d(bt.hr), d(sr)};
      const auto t = loss::total_generator_loss(sr, bt.hr, scores, w, extractor, kind);
      std::vector<double> row{checked_value(t.total, "generator loss", step),
                              checked_value(t.perceptual, "perceptual loss", step),
                              checked_value(t.adversarial, "adversarial loss", step),
                              checked_value(t.l1, "L1 loss", step)};
      tape.backward(t.total);
      return row;
    });
    d.parameters().zero_grad();
    if (tc.grad_clip > 0) clip_grad_norm(g.parameters(), tc.grad_clip);
    adam_g.step(lr);
    log.rows.push_back({static_cast<double>(step), lr, d_loss, terms[0], terms[1], terms[2], terms[3]});
    if (on_step) on_step(log);
  }
  return log;
}

std::vector<cfa::Phase> trained_phases(const config::RunConfig& cfg) {
  if (!cfg.trainer.augment) return {cfg.data.phase};
  std::set<cfa::Phase> seen;
  const cfa::CfaFrame tile(2, 2, cfg.data.phase);
  for (std::size_t i = 0; i < 8; ++i) seen.insert(cfa::apply(tile, cfa::Transform::from_index(i)).phase);
  return {seen.begin(), seen.end()};
}

void save_generator(const fs::path& path, const net::Generator<float>& g,
                    const config::RunConfig& cfg) {
  ad::Checkpoint ck;
  ck.put_text("__kind__", "generator");
  ck.put_text("__config__", config::dump(cfg));
  std::string phases;
  for (auto p : trained_phases(cfg)) phases += (phases.empty() ? "" : ",") + std::string(cfa::to_string(p));
  ck.put_text("__phases__", phases);
  g.parameters().save(ck, "generator.");
  ck.save(path);
}

LoadedGenerator load_generator(const fs::path& path) {
  const auto ck = ad::Checkpoint::load(path);
  if (!ck.contains("__kind__") || ck.text("__kind__") != "generator") {
    throw DataError(path.string() + " is not a generator checkpoint");
  }
  LoadedGenerator out;
  try {
    out.config = config::parse(ck.text("__config__"));
  } catch (const ConfigError& e) {
    throw DataError(path.string() + ": embedded config is invalid: " + e.what());
  }
  out.generator = std::make_unique<net::Generator<float>>(out.config.network, 0);
  out.generator->parameters().load(ck, "generator.");
  std::stringstream ss(ck.contains("__phases__") ? ck.text("__phases__") : "");
  std::string item;
  while (std::getline(ss, item, ',')) out.phases.push_back(cfa::parse_phase(item));
  if (out.phases.empty()) out.phases = trained_phases(out.config);
  return out;
}

void save_discriminator(const fs::path& path, const net::Discriminator<float>& d) {
  ad::Checkpoint ck;
  ck.put_text("__kind__", "discriminator");
  ck.put_text("__input_size__", std::to_string(d.input_size()));
  d.parameters().save(ck, "discriminator.");
  ck.save(path);
}

RunResult run_training(const config::RunConfig& cfg, const fs::path& out_dir,
                       const RunOptions& options) {
  cfg.validate();
  fs::create_directories(out_dir);
  const auto data = build_dataset(cfg);
  RunResult result;

  net::Generator<float> g(cfg.network, derive_seed(cfg.seed, kGeneratorInit));
  if (!options.init_generator.empty()) {
    auto loaded = load_generator(options.init_generator);
    if (!(loaded.config.network == cfg.network)) {
      throw ConfigError("network", "does not match the architecture of " +
                                       options.init_generator.string());
    }
    g = std::move(*loaded.generator);
  }

  auto progress = [&options](const char* phase, const LossTable& t) {
    if (!options.log || options.log_every == 0) return;
    const auto& row = t.rows.back();
    const auto step = static_cast<std::size_t>(row[0]);
    if (step % options.log_every != 0) return;
    *options.log << phase << " step " << step;
    for (std::size_t i = 1; i < row.size(); ++i) *options.log << ' ' << t.columns[i] << '=' << row[i];
    *options.log << '\n';
  };

  result.pretrain = pretrain_generator(g, data, cfg, [&](const LossTable& t) { progress("pretrain", t); });
  result.pretrain_csv = out_dir / "pretrain_loss.csv";
  result.pretrain.write(result.pretrain_csv);
  save_generator(out_dir / "generator_pretrain.ckpt", g, cfg);

  io::Manifest m;
  m.command = "train";
  m.seed = cfg.seed;
  m.config_hash = config::hash(cfg);
  m.config_json = config::dump(cfg);
  for (const auto& src : data.sources) m.add_input(src);
  if (!options.init_generator.empty()) m.add_input(options.init_generator);
  std::string schedule;
  for (auto v : Schedule(cfg.trainer.schedule).milestones()) {
    schedule += (schedule.empty() ? "" : ",") + std::to_string(v);
  }
  m.fields["schedule_milestones"] = schedule;
  m.fields["grad_clip"] = format_double(cfg.trainer.grad_clip);
  m.fields["pretrain_csv"] = result.pretrain_csv.filename().string();
  m.add_output(result.pretrain_csv);
  m.add_output(out_dir / "generator_pretrain.ckpt");

  if (cfg.trainer.adversarial_steps > 0) {
    net::Discriminator<float> d(cfg.discriminator, cfg.trainer.patch_size * cfg.network.scale,
                                derive_seed(cfg.seed, kDiscriminatorInit));
    const auto extractor = loss::make_extractor<float>(cfg.loss.extractor);
    result.adversarial = adversarial_train(g, d, data, cfg, extractor.get(),
                                           [&](const LossTable& t) { progress("adversarial", t); });
    result.adversarial_csv = out_dir / "adversarial_loss.csv";
    result.adversarial.write(result.adversarial_csv);
    save_discriminator(out_dir / "discriminator.ckpt", d);
    m.fields["adversarial_csv"] = result.adversarial_csv.filename().string();
    m.add_output(result.adversarial_csv);
    m.add_output(out_dir / "discriminator.ckpt");
  }

  result.generator_checkpoint = out_dir / "generator.ckpt";
  save_generator(result.generator_checkpoint, g, cfg);
  m.add_output(result.generator_checkpoint);
  result.manifest = out_dir / "manifest.json";
  io::write_manifest(result.manifest, m);
  return result;
}

template class Adam<float>;
template class Adam<double>;
template double clip_grad_norm(net::ParameterSet<float>&, double);
template double clip_grad_norm(net::ParameterSet<double>&, double);

}  // namespace jdsr::train
