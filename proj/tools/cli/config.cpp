#include "config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace qspiral::cli {

namespace {

std::vector<KeySpec> common() {
  return {{"out", "", "output directory (relative paths resolve against $QSPIRAL_OUTPUT_ROOT)"},
          {"hbar", "1", "reduced Planck constant"},
          {"mass", "1", "particle mass"}};
}

std::vector<KeySpec> eos_keys() {
  return {{"cv", "1", "specific heat c_v"},
          {"sigma0", "0", "entropy offset sigma_0 of the ideal gas"},
          {"s1", "1", "entropy slope, S(sigma) = s1 sigma + s0"},
          {"s0", "0", "entropy intercept"}};
}

std::vector<KeySpec> stationary_keys() {
  return {{"lambda", "0", "separation constant lambda"},
          {"a", "-2", "enthalpy coefficient, H = a rho"},
          {"g", "0", "constant baroclinic term (G_1 = -g, G_2 = +g)"},
          {"ic.phi1", "1", "phi_1(0)"},
          {"ic.phi2", "0.6", "phi_2(0)"},
          {"ic.dphi1", "0", "phi_1'(0)"},
          {"ic.dphi2", "0", "phi_2'(0)"},
          {"x_max", "100", "integration length"},
          {"rtol", "1e-13", "relative tolerance"},
          {"atol", "1e-15", "absolute tolerance"},
          {"guard", "1e8", "overflow guard on |phi|"}};
}

std::vector<KeySpec> join(std::vector<std::vector<KeySpec>> parts) {
  std::vector<KeySpec> out;
  for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  std::sort(out.begin(), out.end(), [](const KeySpec& a, const KeySpec& b) { return a.key < b.key; });
  return out;
}

const std::map<std::string, std::vector<KeySpec>>& table() {
  static const std::map<std::string, std::vector<KeySpec>> t = [] {
    std::map<std::string, std::vector<KeySpec>> m;
    m["thermo-check"] = join({common(), eos_keys(),
                              {{"rho", "2", "density"},
                               {"sigma", "0", "entropy phase sigma"},
                               {"mu", "0", "rho_1 - rho_2 (for G_1, G_2)"},
                               {"fd_step", "1e-5", "central-difference step for the identity checks"}}});
    m["stationary1d"] = join({common(), stationary_keys(), {{"dx", "0.01", "output sample spacing"}}});
    m["lyapunov"] = join({common(), stationary_keys(),
                          {{"renorm", "1", "renormalisation interval"},
                           {"length", "500", "integration length"},
                           {"length2", "1000", "second integration length for the agreement check"}}});
    m["evolve1d"] = join({common(), eos_keys(),
                          {{"closure", "barotropic", "barotropic | ideal"},
                           {"a", "-1", "barotropic enthalpy coefficient, H = a rho"},
                           {"scheme", "split-step", "split-step (periodic grid) | crank-nicolson (open grid)"},
                           {"dt", "1e-3", "time step"},
                           {"steps", "1000", "number of steps"},
                           {"stride", "100", "steps between snapshots"},
                           {"grid.xmin", "-20", "left end"},
                           {"grid.xmax", "20", "right end"},
                           {"grid.n", "800", "grid points"},
                           {"ic", "soliton", "soliton | gaussian | pair"},
                           {"ic.eta", "1", "soliton amplitude eta"},
                           {"ic.width", "1", "gaussian width"},
                           {"ic.k", "0", "gaussian carrier wavenumber"}}});
    m["spiral"] = join({common(), eos_keys(),
                        {{"n", "2", "azimuthal mode number"},
                         {"omega", "4.5", "frequency (energy units)"},
                         {"thermal", "true", "false: linear limit with H = G = 0"},
                         {"reps", "1e-3", "inner radius of the series start"},
                         {"rmax", "20", "outer radius"},
                         {"c_lo", "1", "shooting bracket, lower amplitude"},
                         {"c_hi", "3", "shooting bracket, upper amplitude"},
                         {"beta10", "0", "entropy gauge offset beta_1(0)"},
                         {"samples", "2001", "radial samples"},
                         {"guard", "1e3", "overflow guard on |phi_1|"},
                         {"rtol", "1e-11", "relative tolerance"},
                         {"atol", "1e-13", "absolute tolerance"},
                         {"arm.rmin", "3", "inner radius of the arm-linearity fit"},
                         {"render", "true", "write 2D renders"},
                         {"render.size", "401", "render pixels per side"},
                         {"render.extent", "20", "render half-width"},
                         {"render.t", "0", "time of the render"}}});
    m["render2d"] = join({common(),
                          {{"run", "", "spiral run directory"},
                           {"quantity", "re_psi1", "re_psi1 | re_psi2 | rho | arg_psi1 | arg_psi2"},
                           {"t", "0", "time"},
                           {"size", "401", "pixels per side"},
                           {"extent", "20", "half-width"}}});
    m["diagnose"] = join({common(), {{"run", "", "evolve1d run directory, or a comma-separated list for convergence"}}});
    return m;
  }();
  return t;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<KeySpec>& keys_for(const std::string& subcommand) {
  const auto& t = table();
  auto it = t.find(subcommand);
  if (it == t.end()) throw UsageError("no key table for subcommand '" + subcommand + "'");
  return it->second;
}

std::vector<std::string> subcommands() {
  return {"thermo-check", "stationary1d", "lyapunov", "evolve1d", "spiral",
          "render2d",     "diagnose",     "sweep",    "reproduce-figure"};
}

std::string key_list(const std::string& subcommand) {
  std::string s;
  for (const auto& k : keys_for(subcommand)) s += (s.empty() ? "" : ", ") + k.key;
  return s;
}

std::map<std::string, std::string> parse_config_text(const std::string& text, const std::string& origin) {
  std::map<std::string, std::string> m;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(origin + ":" + std::to_string(n) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw UsageError(origin + ":" + std::to_string(n) + ": empty key");
    m[key] = value;
  }
  return m;
}

Params Params::resolve(const std::string& subcommand, const std::map<std::string, std::string>& file,
                       const std::map<std::string, std::string>& flags) {
  std::map<std::string, std::string> v;
  for (const auto& k : keys_for(subcommand)) v[k.key] = k.default_value;
  for (const auto* src : {&file, &flags})
    for (const auto& [k, val] : *src) {
      if (!v.count(k))
        throw UsageError("unknown key '" + k + "' for " + subcommand + "; valid keys: " + key_list(subcommand));
      v[k] = val;
    }
  return Params(subcommand, std::move(v));
}

std::string Params::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::logic_error("Params: undeclared key " + key);
  return it->second;
}

double Params::num(const std::string& key) const {
  const std::string s = str(key);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(v))
    throw UsageError("key '" + key + "': '" + s + "' is not a finite number");
  return v;
}

long Params::integer(const std::string& key) const {
  const std::string s = str(key);
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || errno == ERANGE) throw UsageError("key '" + key + "': '" + s + "' is not an integer");
  return v;
}

std::size_t Params::count(const std::string& key) const {
  const long v = integer(key);
  if (v < 0) throw UsageError("key '" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

bool Params::flag(const std::string& key) const {
  const std::string s = str(key);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw UsageError("key '" + key + "': '" + s + "' is not a boolean");
}

void Params::set(const std::string& key, const std::string& value) {
  if (!values_.count(key))
    throw UsageError("unknown key '" + key + "' for " + subcommand_ + "; valid keys: " + key_list(subcommand_));
  values_[key] = value;
}

nlohmann::json Params::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : values_)
    if (k != "out") j[k] = v;
  return j;
}

std::vector<std::string> Params::command_line() const {
  std::vector<std::string> argv{"qspiral", subcommand_};
  for (const auto& [k, v] : values_) {
    if (k == "out") continue;
    argv.push_back("--" + k);
    argv.push_back(v);
  }
  return argv;
}

}  // namespace qspiral::cli
