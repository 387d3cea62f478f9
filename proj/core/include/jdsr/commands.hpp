#pragma once

// The `jdsr` command line: mosaic, demosaic, train, eval, infer, report.
// Exit codes: 0 ok, 1 other failure, 2 config/usage error, 3 data error,
// 4 numerical failure.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "jdsr/cfa.hpp"
#include "jdsr/demosaic.hpp"
#include "jdsr/network.hpp"
#include "jdsr/report.hpp"

namespace jdsr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

// Runs the generator on a whole mosaic. Sides are mirror-padded (keeping the
// Bayer parity) up to a multiple of 4 and the output is cropped back.
cfa::RgbImage super_resolve(const net::Generator<float>& g, const cfa::CfaFrame& frame,
                            const demosaic::DemosaicMethod& method);

// Worker count from JDSR_THREADS (default: hardware concurrency, at least 1).
std::size_t worker_threads();

struct MosaicOptions {
  std::filesystem::path input;
  std::filesystem::path out;
  cfa::Phase phase = cfa::Phase::kRGGB;
  std::size_t downscale = 1;  // bicubic factor applied before mosaicking
};
void cmd_mosaic(const MosaicOptions& o);

struct DemosaicOptions {
  std::filesystem::path input;
  std::filesystem::path out;
  std::optional<cfa::Phase> phase;  // defaults to the sidecar's phase
  demosaic::DemosaicMethod method = demosaic::DemosaicMethod::bilinear();
};
void cmd_demosaic(const DemosaicOptions& o);

struct TrainOptions {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  std::filesystem::path init_generator;
  bool dry_run = false;
};
void cmd_train(const TrainOptions& o, std::ostream& out);

struct EvalOptions {
  std::vector<std::filesystem::path> checkpoints;  // one per scale for method "jdsr"
  std::vector<std::filesystem::path> datasets;     // directories of HR images
  std::vector<std::size_t> scales = {2, 3, 4};
  std::vector<std::string> methods;                // identity | bicubic | jdsr
  std::filesystem::path out;
  std::filesystem::path scores;                    // optional image_id,ma,niqe sidecar
  std::string ssim_mode = "rgb";
  cfa::Phase phase = cfa::Phase::kRGGB;
  demosaic::DemosaicMethod baseline_demosaic = demosaic::DemosaicMethod::bilinear();
  std::filesystem::path save_images;               // write reconstructions here if set
};
std::vector<report::ReportRow> cmd_eval(const EvalOptions& o);

struct InferOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path input;
  std::filesystem::path out;
  std::optional<cfa::Phase> phase;
  std::optional<std::size_t> scale;  // refuse the checkpoint if it differs
};
void cmd_infer(const InferOptions& o);

struct ReportOptions {
  std::filesystem::path input;
  std::string layout = "psnr-ssim";  // or "pi"
  std::string protocol;
};
void cmd_report(const ReportOptions& o, std::ostream& out);

// Parses argv, dispatches, and maps exceptions to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace jdsr::cli
