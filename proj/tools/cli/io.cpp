#include "io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

namespace qspiral::cli {

std::string git_blob_sha1(std::string_view bytes) {
  const std::string head = "blob " + std::to_string(bytes.size()) + std::string(1, '\0');
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, head.data(), head.size()) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha1: digest failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void CsvTable::add_row(const std::vector<double>& row) {
  if (row.size() != header_.size()) throw std::logic_error("CsvTable: row width differs from header");
  rows_.push_back(row);
}

std::string CsvTable::str() const {
  std::string s;
  for (std::size_t i = 0; i < header_.size(); ++i) s += (i ? "," : "") + header_[i];
  s += '\n';
  for (const auto& r : rows_) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) s += ',';
      s += format_double(r[i]);
    }
    s += '\n';
  }
  return s;
}

std::size_t CsvData::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::runtime_error("csv: missing column " + std::string(name));
}

CsvData parse_csv(const std::string& text) {
  CsvData d;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (first) {
      d.header = std::move(cells);
      first = false;
      continue;
    }
    if (cells.size() != d.header.size()) throw std::runtime_error("csv: ragged row");
    std::vector<double> row;
    for (const auto& c : cells) {
      std::size_t pos = 0;
      row.push_back(std::stod(c, &pos));
      if (pos != c.size()) throw std::runtime_error("csv: bad number '" + c + "'");
    }
    d.rows.push_back(std::move(row));
  }
  return d;
}

std::string encode_pgm16(const std::vector<double>& values, std::size_t nx, std::size_t ny,
                         const std::vector<std::uint8_t>& valid, PgmScale& scale) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t k = 0; k < values.size(); ++k)
    if (valid[k] && std::isfinite(values[k])) {
      lo = std::min(lo, values[k]);
      hi = std::max(hi, values[k]);
    }
  if (!(lo <= hi)) lo = hi = 0.0;
  scale = {lo, hi};
  std::string s = "P5\n" + std::to_string(nx) + " " + std::to_string(ny) + "\n65535\n";
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t row = 0; row < ny; ++row) {
    const std::size_t j = ny - 1 - row;
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t k = j * nx + i;
      unsigned v = 0;
      if (valid[k] && std::isfinite(values[k]))
        v = static_cast<unsigned>(std::lround((values[k] - lo) / span * 65535.0));
      s += static_cast<char>((v >> 8) & 0xff);
      s += static_cast<char>(v & 0xff);
    }
  }
  return s;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

}  // namespace

std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<SvgSeries>& series) {
  const double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!std::isfinite(x0)) {
    x0 = y0 = 0.0;
    x1 = y1 = 1.0;
  }
  if (!(x0 < x1)) x1 = x0 + 1.0;
  if (!(y0 < y1)) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
  s += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  s += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" + escape(title) + "</text>\n";
  s += "<rect x=\"" + fmt(L) + "\" y=\"" + fmt(T) + "\" width=\"" + fmt(W - L - R) + "\" height=\"" + fmt(H - T - B) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
    s += "<text x=\"" + fmt(px(xv)) + "\" y=\"" + fmt(H - B + 16) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(xv) + "</text>\n";
    s += "<text x=\"" + fmt(L - 6) + "\" y=\"" + fmt(py(yv) + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(yv) + "</text>\n";
  }
  s += "<text x=\"" + fmt(L + (W - L - R) / 2) + "\" y=\"" + fmt(H - 12) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + escape(x_label) + "</text>\n";
  s += "<text transform=\"translate(16," + fmt(T + (H - T - B) / 2) +
       ") rotate(-90)\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + escape(y_label) +
       "</text>\n";
  for (std::size_t n = 0; n < series.size(); ++n) {
    const auto& se = series[n];
    const char* c = colors[n % 5];
    s += "<polyline fill=\"none\" stroke=\"" + std::string(c) + "\" stroke-width=\"1.2\" points=\"";
    // thin very long series to at most ~4000 vertices
    const std::size_t step = std::max<std::size_t>(1, se.x.size() / 4000);
    for (std::size_t i = 0; i < se.x.size(); i += step)
      if (std::isfinite(se.x[i]) && std::isfinite(se.y[i])) s += fmt(px(se.x[i])) + "," + fmt(py(se.y[i])) + " ";
    s += "\"/>\n";
    s += "<text x=\"" + fmt(W - R - 8) + "\" y=\"" + fmt(T + 16 + 16 * n) + "\" text-anchor=\"end\" fill=\"" + c +
         "\" font-family=\"sans-serif\" font-size=\"12\">" + escape(se.label) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

RunWriter::RunWriter(fs::path dir, std::string subcommand)
    : dir_(std::move(dir)), subcommand_(std::move(subcommand)) {
  fs::create_directories(dir_);
}

void RunWriter::write(const std::string& relative, std::string_view bytes) {
  write_file_atomic(dir_ / relative, bytes);
  auto it = std::find_if(outputs_.begin(), outputs_.end(), [&](const auto& o) { return o.first == relative; });
  if (it != outputs_.end())
    it->second = git_blob_sha1(bytes);
  else
    outputs_.emplace_back(relative, git_blob_sha1(bytes));
}

void RunWriter::add_input(const fs::path& path) {
  inputs_.emplace_back(path.lexically_normal().generic_string(), git_blob_sha1(read_file(path)));
}

void RunWriter::finish(double wall_seconds) {
  json m;
  m["artifact"] = "qspiral";
  m["version"] = kArtifactVersion;
  m["subcommand"] = subcommand_;
  m["parameters"] = parameters_;
  m["parameters_sha1"] = git_blob_sha1(parameters_.dump());
  m["command"] = command_;
  m["diagnostics"] = diagnostics_;
  if (!rasters_.empty()) m["rasters"] = rasters_;
  auto files = [](auto v) {
    std::sort(v.begin(), v.end());
    json a = json::array();
    for (const auto& [p, h] : v) a.push_back({{"path", p}, {"sha1", h}});
    return a;
  };
  m["outputs"] = files(outputs_);
  m["inputs"] = files(inputs_);
  write_file_atomic(dir_ / "manifest.json", m.dump(2) + "\n");
  json t;
  t["wall_seconds"] = wall_seconds;
  write_file_atomic(dir_ / "timing.json", t.dump(2) + "\n");
}

}  // namespace qspiral::cli
