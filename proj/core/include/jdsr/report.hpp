#pragma once

// Evaluation reports: one CSV row per (dataset, scale, method, protocol) and a
// plain-text table renderer laid out like the usual PSNR/SSIM and PI tables.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace jdsr::report {

inline constexpr const char* kHeader = "dataset,scale,method,protocol,psnr,ssim,pi";

struct ReportRow {
  std::string dataset;
  std::size_t scale = 0;
  std::string method;
  std::string protocol;
  double psnr = 0;
  double ssim = 0;
  std::optional<double> pi;

  bool operator==(const ReportRow&) const = default;
};

std::string to_csv(const std::vector<ReportRow>& rows);
std::vector<ReportRow> parse_csv(const std::string& text);
void write_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows);
std::vector<ReportRow> read_csv(const std::filesystem::path& path);

enum class Layout { kPsnrSsim, kPi };

// Methods as rows, dataset x scale as columns; cells "psnr/ssim" or "pi".
// Only rows of `protocol` are shown (all protocols when empty).
std::string render_table(const std::vector<ReportRow>& rows, Layout layout,
                         const std::string& protocol = "");

}  // namespace jdsr::report
