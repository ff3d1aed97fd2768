#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "config.hpp"
#include "io.hpp"

namespace qspiral::cli {

/// Output root: $QSPIRAL_OUTPUT_ROOT if set, else "qspiral-out".
fs::path output_root();
/// The run directory for `p`: its `out` key resolved against the output
/// root, or <root>/<fallback> when `out` is empty.
fs::path run_directory(const Params& p, const std::string& fallback);

/// Runs one computation into `dir` and writes its manifest. Returns the exit
/// code (0, 1 usage, 2 numerical failure); diagnostics go to stderr.
/// `summary` receives headline numbers for sweep tables when non-null.
int execute(const Params& p, const fs::path& dir, json* summary = nullptr, const std::string& figure = "");

/// True for subcommands that `execute` and `sweep` can run.
bool is_runnable(const std::string& subcommand);

/// Runs `target` once per entry of the comma-separated `values` for `key`,
/// `jobs` points at a time, into <out>/point_NNN, and writes summary.csv.
/// Returns 1 for usage errors and 2 when any point failed.
int sweep(const std::string& target, const std::string& key, const std::string& values,
          const std::map<std::string, std::string>& file, const std::map<std::string, std::string>& flags,
          std::size_t jobs);

int reproduce_figure(const std::string& figure, const Params& common);

}  // namespace qspiral::cli
