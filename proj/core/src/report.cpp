#include "jdsr/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "jdsr/errors.hpp"

namespace jdsr::report {

namespace {

std::string fixed(double v, int digits) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double parse_number(const std::string& s, std::size_t line, const char* column) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw DataError("report line " + std::to_string(line) + ": bad " + column + " '" + s + "'");
  }
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string to_csv(const std::vector<ReportRow>& rows) {
  std::string out = std::string(kHeader) + "\n";
  for (const auto& r : rows) {
    out += r.dataset + "," + std::to_string(r.scale) + "," + r.method + "," + r.protocol + "," +
           fixed(r.psnr, 4) + "," + fixed(r.ssim, 6) + "," + (r.pi ? fixed(*r.pi, 4) : "") + "\n";
  }
  return out;
}

std::vector<ReportRow> parse_csv(const std::string& text) {
  std::stringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("report: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw DataError("report: expected header '" + std::string(kHeader) + "'");
  std::vector<ReportRow> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 7) throw DataError("report line " + std::to_string(n) + ": expected 7 fields");
    ReportRow r;
    r.dataset = f[0];
    r.scale = static_cast<std::size_t>(parse_number(f[1], n, "scale"));
    r.method = f[2];
    r.protocol = f[3];
    r.psnr = parse_number(f[4], n, "psnr");
    r.ssim = parse_number(f[5], n, "ssim");
    if (!f[6].empty()) r.pi = parse_number(f[6], n, "pi");
    rows.push_back(r);
  }
  return rows;
}

void write_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_csv(rows);
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<ReportRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

std::string render_table(const std::vector<ReportRow>& rows, Layout layout,
                         const std::string& protocol) {
  std::vector<std::string> columns;  // "dataset x2"
  std::vector<std::string> methods;
  std::map<std::pair<std::string, std::string>, std::string> cells;
  for (const auto& r : rows) {
    if (!protocol.empty() && r.protocol != protocol) continue;
    std::string col = r.dataset + " x" + std::to_string(r.scale);
    if (protocol.empty()) col += " " + r.protocol;
    if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    cells[{r.method, col}] = layout == Layout::kPsnrSsim
                                 ? fixed(r.psnr, 2) + "/" + fixed(r.ssim, 4)
                                 : (r.pi ? fixed(*r.pi, 2) : "-");
  }
  std::vector<std::size_t> width(columns.size() + 1, 6);
  for (const auto& m : methods) width[0] = std::max(width[0], m.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    width[c + 1] = std::max(width[c + 1], columns[c].size());
    for (const auto& m : methods) {
      const auto it = cells.find({m, columns[c]});
      if (it != cells.end()) width[c + 1] = std::max(width[c + 1], it->second.size());
    }
  }
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - s.size(), ' '); };
  std::string out = pad("method", width[0]);
  for (std::size_t c = 0; c < columns.size(); ++c) out += " | " + pad(columns[c], width[c + 1]);
  out += "\n" + std::string(width[0], '-');
  for (std::size_t c = 0; c < columns.size(); ++c) out += "-+-" + std::string(width[c + 1], '-');
  out += "\n";
  for (const auto& m : methods) {
    out += pad(m, width[0]);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto it = cells.find({m, columns[c]});
      out += " | " + pad(it == cells.end() ? "-" : it->second, width[c + 1]);
    }
    out += "\n";
  }
  return out;
}

}  // namespace jdsr::report
