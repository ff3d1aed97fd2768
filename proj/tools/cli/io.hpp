#pragma once

// Output formats for run directories: CSV tables, 16-bit PGM rasters, SVG
// line plots, and JSON manifests with git-style content hashes.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace qspiral::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// SHA-1 of "blob <size>\0<bytes>", as printed by `git hash-object`.
std::string git_blob_sha1(std::string_view bytes);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const fs::path& path, std::string_view bytes);
std::string read_file(const fs::path& path);

std::string format_double(double v);  // %.17g

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add_row(const std::vector<double>& row);
  std::string str() const;
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::size_t column(std::string_view name) const;
};
CsvData parse_csv(const std::string& text);

struct PgmScale {
  double min = 0.0;
  double max = 0.0;
};

/// P5, 16-bit big-endian, row 0 at the largest y. Masked pixels are 0 and
/// excluded from the min/max scaling.
std::string encode_pgm16(const std::vector<double>& values, std::size_t nx, std::size_t ny,
                         const std::vector<std::uint8_t>& valid, PgmScale& scale);

struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
};

std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<SvgSeries>& series);

/// Collects the files of one run directory and writes manifest.json last.
class RunWriter {
 public:
  RunWriter(fs::path dir, std::string subcommand);

  const fs::path& dir() const { return dir_; }
  void write(const std::string& relative, std::string_view bytes);
  void add_input(const fs::path& path);
  json& diagnostics() { return diagnostics_; }
  json& rasters() { return rasters_; }
  void set_parameters(json params) { parameters_ = std::move(params); }
  void set_command(std::vector<std::string> argv) { command_ = std::move(argv); }
  void finish(double wall_seconds);

 private:
  fs::path dir_;
  std::string subcommand_;
  json parameters_ = json::object();
  json diagnostics_ = json::object();
  json rasters_ = json::object();
  std::vector<std::string> command_;
  std::vector<std::pair<std::string, std::string>> outputs_;  // path, sha1
  std::vector<std::pair<std::string, std::string>> inputs_;
};

inline constexpr const char* kArtifactVersion = "1.0.0";

}  // namespace qspiral::cli
