#pragma once

// Flat key = value run configuration: per-subcommand key tables with
// defaults, config files, and typed access.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace qspiral::cli {

/// Bad command line or configuration; maps to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KeySpec {
  std::string key;
  std::string default_value;
  std::string help;
};

/// Keys accepted by a subcommand (common keys included). Throws UsageError
/// for an unknown subcommand.
const std::vector<KeySpec>& keys_for(const std::string& subcommand);
std::vector<std::string> subcommands();
std::string key_list(const std::string& subcommand);

/// Parses `key = value` lines; `#` starts a comment.
std::map<std::string, std::string> parse_config_text(const std::string& text, const std::string& origin);

class Params {
 public:
  Params() = default;
  Params(std::string subcommand, std::map<std::string, std::string> values)
      : subcommand_(std::move(subcommand)), values_(std::move(values)) {}

  /// Defaults, then config-file values, then explicit flags.
  static Params resolve(const std::string& subcommand, const std::map<std::string, std::string>& file,
                        const std::map<std::string, std::string>& flags);

  const std::string& subcommand() const { return subcommand_; }
  const std::map<std::string, std::string>& values() const { return values_; }
  std::string str(const std::string& key) const;
  double num(const std::string& key) const;
  long integer(const std::string& key) const;
  std::size_t count(const std::string& key) const;  // non-negative integer
  bool flag(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  /// Resolved values without the output location, so identical computations
  /// produce identical manifests wherever they are written.
  nlohmann::json to_json() const;
  std::vector<std::string> command_line() const;

 private:
  std::string subcommand_;
  std::map<std::string, std::string> values_;
};

/// Environment variable overriding the output root directory.
inline constexpr const char* kOutputRootEnv = "QSPIRAL_OUTPUT_ROOT";

}  // namespace qspiral::cli
