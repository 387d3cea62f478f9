#include "jdsr/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include "CLI11.hpp"
#include "jdsr/config.hpp"
#include "jdsr/errors.hpp"
#include "jdsr/image_io.hpp"
#include "jdsr/manifest.hpp"
#include "jdsr/metrics.hpp"
#include "jdsr/trainer.hpp"

namespace jdsr::cli {

namespace fs = std::filesystem;

namespace {

cfa::CfaFrame pad_to_multiple_of_4(const cfa::CfaFrame& f) {
  const std::size_t h = (f.height + 3) / 4 * 4, w = (f.width + 3) / 4 * 4;
  if (h == f.height && w == f.width) return f;
  if (f.height < 4 || f.width < 4) throw DataError("mosaic must be at least 4x4");
  auto mirror = [](std::size_t i, std::size_t n) { return i < n ? i : 2 * (n - 1) - i; };
  cfa::CfaFrame out(h, w, f.phase);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) out.at(y, x) = f.at(mirror(y, f.height), mirror(x, f.width));
  }
  return out;
}

cfa::Phase phase_arg(const std::string& s) {
  try {
    return cfa::parse_phase(s);
  } catch (const Error& e) {
    throw ConfigError("--phase", e.what());
  }
}

cfa::Phase phase_from_sidecar(const fs::path& input) {
  const auto side = io::sidecar_path(input);
  if (!fs::exists(side)) {
    throw DataError("no phase given and no sidecar " + side.string() + " (use --phase)");
  }
  const auto m = io::read_manifest(side);
  const auto it = m.fields.find("phase");
  if (it == m.fields.end()) throw DataError(side.string() + " does not record a phase");
  return cfa::parse_phase(it->second);
}

std::string phase_list(const std::vector<cfa::Phase>& phases) {
  std::string s;
  for (auto p : phases) s += (s.empty() ? "" : ",") + std::string(cfa::to_string(p));
  return s;
}

}  // namespace

cfa::RgbImage super_resolve(const net::Generator<float>& g, const cfa::CfaFrame& frame,
                            const demosaic::DemosaicMethod& method) {
  if (frame.height % 2 != 0 || frame.width % 2 != 0) {
    throw DataError("mosaic dimensions must be even, got " + std::to_string(frame.height) + "x" +
                    std::to_string(frame.width));
  }
  const auto padded = pad_to_multiple_of_4(frame);
  ad::NoTapeScope<float> off;
  const auto in = net::make_inputs<float>({padded}, g.config(), method);
  const auto sr = cfa::from_tensor(g(in.cfa, in.init), 0);
  const std::size_t s = g.config().scale;
  return cfa::crop(sr, 0, 0, s * frame.height, s * frame.width);
}

std::size_t worker_threads() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("JDSR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      throw ConfigError("JDSR_THREADS", "must be a positive integer, got '" + std::string(env) + "'");
    }
    n = static_cast<std::size_t>(v);
  }
  return n;
}

void cmd_mosaic(const MosaicOptions& o) {
  auto img = io::read_image(o.input);
  if (o.downscale > 1) img = cfa::bicubic_downsample(img, o.downscale);
  if (img.height % 2 != 0 || img.width % 2 != 0) {
    throw DataError(o.input.string() + ": dimensions " + std::to_string(img.height) + "x" +
                    std::to_string(img.width) + " must be even for a Bayer mosaic");
  }
  const auto frame = cfa::mosaic(img, o.phase);
  io::write_cfa(o.out, frame);
  io::Manifest m;
  m.command = "mosaic";
  m.add_input(o.input);
  m.add_output(o.out);
  m.fields["phase"] = std::string(cfa::to_string(o.phase));
  m.fields["height"] = std::to_string(frame.height);
  m.fields["width"] = std::to_string(frame.width);
  m.fields["downscale"] = std::to_string(o.downscale);
  io::write_manifest(io::sidecar_path(o.out), m);
}

void cmd_demosaic(const DemosaicOptions& o) {
  const auto phase = o.phase ? *o.phase : phase_from_sidecar(o.input);
  const auto frame = io::read_cfa(o.input, phase);
  io::write_png(o.out, demosaic::demosaic(frame, o.method));
  io::Manifest m;
  m.command = "demosaic";
  m.add_input(o.input);
  m.add_output(o.out);
  m.fields["phase"] = std::string(cfa::to_string(phase));
  m.fields["method"] = std::string(o.method.name());
  m.fields["iterations"] = std::to_string(o.method.iterations);
  io::write_manifest(io::sidecar_path(o.out), m);
}

void cmd_train(const TrainOptions& o, std::ostream& out) {
  auto cfg = config::load(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.dry_run) {
    const net::Generator<float> g(cfg.network, 0);
    out << "config ok " << config::hash(cfg) << '\n';
    out << "generator parameters: " << g.parameters().scalar_count() << '\n';
    if (cfg.trainer.adversarial_steps > 0) {
      const net::Discriminator<float> d(cfg.discriminator,
                                        cfg.trainer.patch_size * cfg.network.scale, 0);
      out << "discriminator parameters: " << d.parameters().scalar_count() << '\n';
    }
    return;
  }
  if (o.out.empty()) throw ConfigError("--out", "a run directory is required");
  train::RunOptions ro;
  ro.init_generator = o.init_generator;
  ro.log = &out;
  const auto result = train::run_training(cfg, o.out, ro);
  out << "wrote " << result.generator_checkpoint.string() << '\n';
}

std::vector<report::ReportRow> cmd_eval(const EvalOptions& o) {
  if (o.datasets.empty()) throw ConfigError("--data", "at least one dataset directory is required");
  if (o.scales.empty()) throw ConfigError("--scale", "at least one scale is required");
  auto methods = o.methods;
  if (methods.empty()) {
    methods.push_back("bicubic");
    if (!o.checkpoints.empty()) methods.push_back("jdsr");
  }
  for (const auto& m : methods) {
    if (m != "identity" && m != "bicubic" && m != "jdsr") {
      throw ConfigError("--method", "unknown method '" + m + "' (expected identity, bicubic or jdsr)");
    }
  }
  for (auto s : o.scales) {
    if (s < 2 || s > 4) throw ConfigError("--scale", "scales must be 2, 3 or 4");
  }
  const auto mode = metrics::parse_ssim_mode(o.ssim_mode);
  const bool want_jdsr = std::find(methods.begin(), methods.end(), "jdsr") != methods.end();

  std::map<std::size_t, train::LoadedGenerator> generators;
  if (want_jdsr) {
    for (const auto& ck : o.checkpoints) {
      auto g = train::load_generator(ck);
      const auto s = g.config.network.scale;
      if (generators.count(s)) throw ConfigError("--checkpoint", "two checkpoints given for scale x" + std::to_string(s));
      if (std::find(g.phases.begin(), g.phases.end(), o.phase) == g.phases.end()) {
        throw DataError(ck.string() + " was trained on phases " + phase_list(g.phases) +
                        ", not " + std::string(cfa::to_string(o.phase)));
      }
      generators.emplace(s, std::move(g));
    }
    for (auto s : o.scales) {
      if (!generators.count(s)) throw ConfigError("--checkpoint", "no checkpoint for scale x" + std::to_string(s));
    }
  }

  std::map<std::string, metrics::NoReferenceScores> nr;
  if (!o.scores.empty()) nr = metrics::read_score_sidecar(o.scores);
  if (!o.save_images.empty()) fs::create_directories(o.save_images);

  const std::size_t threads = worker_threads();
  std::vector<report::ReportRow> rows;
  io::Manifest manifest;
  manifest.command = "eval";
  for (const auto& ck : o.checkpoints) manifest.add_input(ck);

  for (const auto& dir : o.datasets) {
    const auto files = io::list_images(dir);
    if (files.empty()) throw DataError("no images in " + dir.string());
    for (const auto& f : files) manifest.add_input(f);
    std::string dataset = fs::path(dir).lexically_normal().filename().string();
    if (dataset.empty()) dataset = fs::path(dir).lexically_normal().parent_path().filename().string();
    std::vector<cfa::RgbImage> images;
    for (const auto& f : files) images.push_back(io::read_image(f));

    for (auto s : o.scales) {
      const std::vector<metrics::Protocol> protocols = {{0, mode}, {s, mode}};
      // scores[image][method][protocol]
      std::vector<std::vector<std::vector<metrics::MetricScores>>> scores(
          images.size(), std::vector<std::vector<metrics::MetricScores>>(
                             methods.size(), std::vector<metrics::MetricScores>(protocols.size())));
      auto work = [&](std::size_t i) {
        const auto hr = cfa::center_crop_to_multiple(images[i], 4 * s);
        const auto ex = cfa::prepare_example(hr, s, o.phase);
        for (std::size_t m = 0; m < methods.size(); ++m) {
          cfa::RgbImage sr;
          if (methods[m] == "identity") {
            sr = ex.hr;
          } else if (methods[m] == "bicubic") {
            sr = cfa::bicubic_upsample(demosaic::demosaic(ex.lr_cfa, o.baseline_demosaic), s);
          } else {
            const auto& lg = generators.at(s);
            sr = super_resolve(*lg.generator, ex.lr_cfa, lg.config.demosaic);
          }
          const std::string id = dataset + "/" + methods[m] + "/x" + std::to_string(s) + "/" +
                                 files[i].stem().string();
          std::optional<metrics::NoReferenceScores> nri;
          if (const auto it = nr.find(id); it != nr.end()) nri = it->second;
          for (std::size_t p = 0; p < protocols.size(); ++p) {
            scores[i][m][p] = metrics::evaluate(sr, ex.hr, protocols[p], nri);
          }
          if (!o.save_images.empty()) {
            auto dest = o.save_images / dataset / methods[m] / ("x" + std::to_string(s));
            fs::create_directories(dest);
            io::write_png(dest / (files[i].stem().string() + ".png"), sr);
          }
        }
      };
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(std::min(threads, images.size()));
      for (std::size_t t = 0; t < errors.size(); ++t) {
        pool.emplace_back([&, t] {
          try {
            for (std::size_t i = t; i < images.size(); i += errors.size()) work(i);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
      for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }

      for (std::size_t m = 0; m < methods.size(); ++m) {
        for (std::size_t p = 0; p < protocols.size(); ++p) {
          report::ReportRow row{dataset, s, methods[m], protocols[p].label(), 0, 0, std::nullopt};
          double pi_sum = 0;
          bool all_pi = true;
          for (std::size_t i = 0; i < images.size(); ++i) {
            row.psnr += scores[i][m][p].psnr;
            row.ssim += scores[i][m][p].ssim;
            if (scores[i][m][p].pi) {
              pi_sum += *scores[i][m][p].pi;
            } else {
              all_pi = false;
            }
          }
          const double n = static_cast<double>(images.size());
          row.psnr /= n;
          row.ssim /= n;
          if (all_pi) row.pi = pi_sum / n;
          rows.push_back(row);
        }
      }
    }
  }
  if (!o.out.empty()) {
    report::write_csv(o.out, rows);
    if (!o.scores.empty()) manifest.add_input(o.scores);
    manifest.add_output(o.out);
    manifest.fields["phase"] = std::string(cfa::to_string(o.phase));
    io::write_manifest(io::sidecar_path(o.out), manifest);
  }
  return rows;
}

void cmd_infer(const InferOptions& o) {
  auto loaded = train::load_generator(o.checkpoint);
  const std::size_t ck_scale = loaded.config.network.scale;
  if (o.scale && *o.scale != ck_scale) {
    throw DataError("checkpoint " + o.checkpoint.string() + " was trained for scale x" +
                    std::to_string(ck_scale) + ", but x" + std::to_string(*o.scale) +
                    " was requested");
  }
  const auto phase = o.phase ? *o.phase : phase_from_sidecar(o.input);
  if (std::find(loaded.phases.begin(), loaded.phases.end(), phase) == loaded.phases.end()) {
    throw DataError("mosaic phase " + std::string(cfa::to_string(phase)) +
                    " does not match the checkpoint's training phases (" +
                    phase_list(loaded.phases) + ")");
  }
  const auto frame = io::read_cfa(o.input, phase);
  io::write_png(o.out, super_resolve(*loaded.generator, frame, loaded.config.demosaic));
  io::Manifest m;
  m.command = "infer";
  m.seed = loaded.config.seed;
  m.config_hash = config::hash(loaded.config);
  m.add_input(o.checkpoint);
  m.add_input(o.input);
  m.add_output(o.out);
  m.fields["phase"] = std::string(cfa::to_string(phase));
  m.fields["scale"] = std::to_string(ck_scale);
  io::write_manifest(io::sidecar_path(o.out), m);
}

void cmd_report(const ReportOptions& o, std::ostream& out) {
  report::Layout layout;
  if (o.layout == "psnr-ssim") {
    layout = report::Layout::kPsnrSsim;
  } else if (o.layout == "pi") {
    layout = report::Layout::kPi;
  } else {
    throw ConfigError("--layout", "expected psnr-ssim or pi");
  }
  out << report::render_table(report::read_csv(o.input), layout, o.protocol);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint demosaicing and super-resolution"};
  app.require_subcommand(1);

  MosaicOptions mo;
  std::string mosaic_phase = "RGGB";
  auto* mosaic = app.add_subcommand("mosaic", "Sample an RGB image into a 16-bit Bayer PNG");
  mosaic->add_option("input", mo.input, "RGB image (PNG or PPM)")->required();
  mosaic->add_option("--out", mo.out, "Output CFA PNG")->required();
  mosaic->add_option("--phase", mosaic_phase, "RGGB, GRBG, GBRG or BGGR");
  mosaic->add_option("--downscale", mo.downscale, "Bicubic downscale factor (2-4) applied first");

  DemosaicOptions dmo;
  std::string dm_phase, dm_method = "bilinear";
  int dm_iterations = 2;
  auto* dem = app.add_subcommand("demosaic", "Reconstruct RGB from a CFA PNG");
  dem->add_option("input", dmo.input, "CFA PNG")->required();
  dem->add_option("--out", dmo.out, "Output PNG")->required();
  dem->add_option("--phase", dm_phase, "Override the sidecar phase");
  dem->add_option("--method", dm_method, "bilinear or residual-refine");
  dem->add_option("--iterations", dm_iterations, "Residual-refine iterations");

  TrainOptions to;
  std::uint64_t train_seed = 0;
  auto* trn = app.add_subcommand("train", "Train a generator from a run config");
  trn->add_option("--config", to.config, "Run config (JSON)")->required();
  trn->add_option("--out", to.out, "Run directory");
  auto* seed_opt = trn->add_option("--seed", train_seed, "Override the config seed");
  trn->add_option("--init-generator", to.init_generator, "Start from this generator checkpoint");
  trn->add_flag("--dry-run", to.dry_run, "Validate the config and print parameter counts");

  EvalOptions eo;
  std::string eval_phase = "RGGB", eval_config;
  auto* ev = app.add_subcommand("eval", "Score reconstructions of HR image folders");
  ev->add_option("--checkpoint", eo.checkpoints, "Generator checkpoint (repeatable, one per scale)");
  ev->add_option("--data", eo.datasets, "Directory of HR images (repeatable)")->required();
  ev->add_option("--scale", eo.scales, "Scale factors");
  ev->add_option("--method", eo.methods, "identity, bicubic or jdsr (repeatable)");
  ev->add_option("--out", eo.out, "Report CSV");
  ev->add_option("--scores", eo.scores, "Sidecar CSV image_id,ma,niqe");
  ev->add_option("--ssim-mode", eo.ssim_mode, "rgb or luminance");
  ev->add_option("--phase", eval_phase, "Bayer phase of the synthesized mosaics");
  ev->add_option("--config", eval_config, "Take metrics.ssim_mode and data.phase from a run config");
  ev->add_option("--save-images", eo.save_images, "Write reconstructions under this directory");

  InferOptions io_;
  std::string infer_phase;
  std::size_t infer_scale = 0;
  auto* inf = app.add_subcommand("infer", "Super-resolve a CFA PNG with a trained generator");
  inf->add_option("--checkpoint", io_.checkpoint, "Generator checkpoint")->required();
  inf->add_option("input", io_.input, "CFA PNG")->required();
  inf->add_option("--out", io_.out, "Output PNG")->required();
  inf->add_option("--phase", infer_phase, "Override the sidecar phase");
  inf->add_option("--scale", infer_scale, "Expected scale; refuse other checkpoints");

  ReportOptions ro;
  auto* rep = app.add_subcommand("report", "Render a report CSV as a table");
  rep->add_option("input", ro.input, "Report CSV")->required();
  rep->add_option("--layout", ro.layout, "psnr-ssim or pi");
  rep->add_option("--protocol", ro.protocol, "Only rows with this protocol label");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (mosaic->parsed()) {
      mo.phase = phase_arg(mosaic_phase);
      cmd_mosaic(mo);
    } else if (dem->parsed()) {
      if (!dm_phase.empty()) dmo.phase = phase_arg(dm_phase);
      try {
        dmo.method = demosaic::DemosaicMethod::parse(dm_method, dm_iterations);
      } catch (const Error& e) {
        throw ConfigError("--method", e.what());
      }
      cmd_demosaic(dmo);
    } else if (trn->parsed()) {
      if (seed_opt->count() > 0) to.seed = train_seed;
      cmd_train(to, out);
    } else if (ev->parsed()) {
      eo.phase = phase_arg(eval_phase);
      if (!eval_config.empty()) {
        const auto cfg = config::load(eval_config);
        eo.phase = cfg.data.phase;
        eo.ssim_mode = metrics::to_string(cfg.metrics.ssim_mode);
      }
      const auto rows = cmd_eval(eo);
      if (eo.out.empty()) out << report::to_csv(rows);
    } else if (inf->parsed()) {
      if (!infer_phase.empty()) io_.phase = phase_arg(infer_phase);
      if (infer_scale > 0) io_.scale = infer_scale;
      cmd_infer(io_);
    } else if (rep->parsed()) {
      cmd_report(ro, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace jdsr::cli
