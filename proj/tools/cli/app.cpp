#include "app.hpp"

#include <iostream>
#include <memory>
#include <thread>

#include "CLI11.hpp"
#include "commands.hpp"

namespace qspiral::cli {

namespace {

struct KeyOptions {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config;

  std::map<std::string, std::string> given() const {
    std::map<std::string, std::string> m;
    for (const auto& [k, opt] : options)
      if (opt->count() > 0) m[k] = values.at(k);
    return m;
  }
};

void add_keys(CLI::App* app, const std::string& sub, KeyOptions& ko) {
  for (const auto& k : keys_for(sub)) {
    ko.values[k.key] = k.default_value;
    std::string help = k.help;
    if (!k.default_value.empty()) help += " [" + k.default_value + "]";
    ko.options[k.key] = app->add_option("--" + k.key, ko.values[k.key], help);
  }
  app->add_option("--config", ko.config, "key = value file; flags override it");
}

std::map<std::string, std::string> config_file(const std::string& path) {
  if (path.empty()) return {};
  if (!fs::exists(path)) throw UsageError("config file '" + path + "' not found");
  return parse_config_text(read_file(path), path);
}

// Extras after `sweep <target>`: --key value or --key=value.
std::map<std::string, std::string> parse_extras(const std::vector<std::string>& extras) {
  std::map<std::string, std::string> m;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& a = extras[i];
    if (a.rfind("--", 0) != 0 || a.size() == 2) throw UsageError("sweep: unexpected argument '" + a + "'");
    const auto eq = a.find('=');
    if (eq != std::string::npos) {
      m[a.substr(2, eq - 2)] = a.substr(eq + 1);
    } else {
      if (i + 1 >= extras.size()) throw UsageError("sweep: option '" + a + "' needs a value");
      m[a.substr(2)] = extras[++i];
    }
  }
  return m;
}

}  // namespace

int dispatch(int argc, char** argv) {
  CLI::App app{"qspiral: two-component spinor fields, thermal closures and stationary spiral states"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kArtifactVersion));

  std::map<std::string, std::unique_ptr<KeyOptions>> keyed;
  for (const auto& sub : subcommands()) {
    if (sub == "sweep" || sub == "reproduce-figure") continue;
    auto* sc = app.add_subcommand(sub);
    keyed[sub] = std::make_unique<KeyOptions>();
    add_keys(sc, sub, *keyed[sub]);
  }

  std::string target, sweep_key, sweep_values, sweep_config, sweep_out;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* sw = app.add_subcommand("sweep", "run a subcommand over a list of values of one key");
  sw->add_option("target", target, "thermo-check | stationary1d | lyapunov | evolve1d | spiral")->required();
  sw->add_option("--sweep-key", sweep_key, "key to vary")->required();
  sw->add_option("--sweep-values", sweep_values, "comma-separated values")->required();
  sw->add_option("--jobs", jobs, "points run concurrently");
  sw->add_option("--config", sweep_config, "key = value file for the target");
  sw->allow_extras();

  std::string figure, figure_out;
  auto* rf = app.add_subcommand("reproduce-figure", "regenerate a figure from a pinned configuration");
  rf->add_option("figure", figure, "1 | 2 | 3 | 4a | 4b")->required();
  rf->add_option("--out", figure_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    if (dynamic_cast<const CLI::ExtrasError*>(&e))
      for (const auto& [sub, ko] : keyed)
        if (app.got_subcommand(sub)) std::cerr << "valid keys for " << sub << ": " << key_list(sub) << "\n";
    return rc == 0 ? 0 : 1;
  }

  try {
    if (sw->parsed()) {
      auto extras = parse_extras(sw->remaining());
      return sweep(target, sweep_key, sweep_values, config_file(sweep_config), extras, jobs);
    }
    if (rf->parsed()) {
      Params common("reproduce-figure", {{"out", figure_out}});
      return reproduce_figure(figure, common);
    }
    for (auto& [sub, ko] : keyed) {
      if (!app.got_subcommand(sub)) continue;
      const Params p = Params::resolve(sub, config_file(ko->config), ko->given());
      return execute(p, run_directory(p, sub));
    }
  } catch (const UsageError& e) {
    std::cerr << "qspiral: usage error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace qspiral::cli
