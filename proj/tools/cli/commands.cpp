#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <atomic>
#include <numbers>
#include <set>
#include <thread>

#include "qspiral/errors.hpp"
#include "qspiral/evolve.hpp"
#include "qspiral/fluidbridge.hpp"
#include "qspiral/lyapunov.hpp"
#include "qspiral/spiral.hpp"
#include "qspiral/stationary.hpp"
#include "qspiral/thermo.hpp"

namespace qspiral::cli {

namespace {

PhysConsts consts_of(const Params& p) {
  PhysConsts c{p.num("hbar"), p.num("mass")};
  c.validate();
  return c;
}

EosParams eos_of(const Params& p) {
  EosParams e{p.num("cv"), p.num("sigma0"), p.num("s1"), p.num("s0")};
  e.validate();
  return e;
}

std::string index_name(const char* prefix, std::size_t i, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%05zu%s", prefix, i, suffix);
  return buf;
}

// thermo-check

void run_thermo_check(const Params& p, RunWriter& w) {
  const EosParams e = eos_of(p);
  const PhysConsts c = consts_of(p);
  const double rho = p.num("rho"), sigma = p.num("sigma"), mu = p.num("mu"), h = p.num("fd_step");
  if (!(rho > 0.0)) throw UsageError("thermo-check: rho must be positive");
  if (std::abs(mu) > rho) throw UsageError("thermo-check: need |mu| <= rho");
  if (!(h > 0.0) || h >= rho) throw UsageError("thermo-check: need 0 < fd_step < rho");

  const ThermoState s = temperature_enthalpy(rho, sigma, e);
  const BaroclinicTerms g = baroclinic_G(0.5 * (rho + mu), 0.5 * (rho - mu), sigma, e, c);

  // H = d(rho U)/d rho and T = dU/dS by central differences.
  auto rho_u = [&](double r) { return r * internal_energy(r, sigma, e); };
  const double h_fd = (rho_u(rho + h) - rho_u(rho - h)) / (2.0 * h);
  EosParams up = e, dn = e;
  up.entropy_offset += h;
  dn.entropy_offset -= h;
  const double t_fd = (internal_energy(rho, sigma, up) - internal_energy(rho, sigma, dn)) / (2.0 * h);

  json out;
  out["inputs"] = {{"rho", rho}, {"sigma", sigma}, {"mu", mu}, {"cv", e.cv}, {"sigma0", e.sigma0},
                   {"s1", e.entropy_slope}, {"s0", e.entropy_offset}, {"hbar", c.hbar}, {"mass", c.mass}};
  out["U"] = s.U;
  out["T"] = s.T;
  out["H"] = s.H;
  out["tau"] = s.tau;
  out["P"] = s.P;
  if (g.masked) {
    out["G1"] = nullptr;
    out["G2"] = nullptr;
  } else {
    out["G1"] = g.G1;
    out["G2"] = g.G2;
  }
  out["fd_residuals"] = {{"H_vs_drhoU_drho", std::abs(h_fd - s.H) / std::abs(s.H)},
                         {"T_vs_dU_dS", std::abs(t_fd - s.T) / std::abs(s.T)}};
  const std::string text = out.dump(2) + "\n";
  std::cout << text;
  w.write("thermo.json", text);
  w.diagnostics() = out;
}

// stationary1d and lyapunov

Stationary1DParams stationary_of(const Params& p) {
  Stationary1DParams s;
  s.lambda = p.num("lambda");
  s.a = p.num("a");
  s.g = p.num("g");
  s.initial = {p.num("ic.phi1"), p.num("ic.phi2"), p.num("ic.dphi1"), p.num("ic.dphi2")};
  s.x_max = p.num("x_max");
  s.overflow_guard = p.num("guard");
  s.tol = OdeTolerances{p.num("rtol"), p.num("atol")};
  s.consts = consts_of(p);
  return s;
}

// First lag at which the normalised autocorrelation of v drops below 1/2.
double half_decay_lag(const std::vector<double>& v, double dx) {
  const std::size_t n = v.size();
  if (n < 4) return -1.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(n);
  double c0 = 0.0;
  for (double x : v) c0 += (x - mean) * (x - mean);
  if (c0 <= 0.0) return -1.0;
  for (std::size_t lag = 1; lag < n / 2; ++lag) {
    double c = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) c += (v[i] - mean) * (v[i + lag] - mean);
    c *= static_cast<double>(n) / static_cast<double>(n - lag);
    if (c / c0 < 0.5) return static_cast<double>(lag) * dx;
  }
  return -1.0;
}

void run_stationary1d(const Params& p, RunWriter& w) {
  Stationary1DParams s = stationary_of(p);
  s.sample_spacing = p.num("dx");
  const StationaryTrajectory tr = stationary_integrate(s);

  CsvTable csv({"x", "re_phi1", "im_phi1", "re_phi2", "im_phi2", "re_dphi1", "im_dphi1", "re_dphi2",
                "im_dphi2", "rho", "energy_x"});
  double e0 = tr.energy_x.empty() ? 0.0 : tr.energy_x.front(), drift = 0.0;
  std::vector<double> re1(tr.x.size()), re2(tr.x.size());
  for (std::size_t i = 0; i < tr.x.size(); ++i) {
    csv.add_row({tr.x[i], tr.phi1[i].real(), tr.phi1[i].imag(), tr.phi2[i].real(), tr.phi2[i].imag(),
                 tr.dphi1[i].real(), tr.dphi1[i].imag(), tr.dphi2[i].real(), tr.dphi2[i].imag(), tr.rho[i],
                 tr.energy_x[i]});
    re1[i] = tr.phi1[i].real();
    re2[i] = tr.phi2[i].real();
    drift = std::max(drift, std::abs(tr.energy_x[i] - e0) / std::max(std::abs(e0), 1e-300));
  }
  w.write("trajectory.csv", csv.str());
  w.write("phi.svg", svg_line_plot("stationary components", "x", "phi",
                                   {{"Re phi1", tr.x, re1}, {"Re phi2", tr.x, re2}}));
  w.write("rho.svg", svg_line_plot("density", "x", "rho", {{"rho", tr.x, tr.rho}}));

  auto& d = w.diagnostics();
  d["samples"] = tr.x.size();
  d["truncated"] = tr.truncated;
  d["diagnostic"] = tr.diagnostic;
  d["x_end"] = tr.x.empty() ? 0.0 : tr.x.back();
  d["energy_x_max_rel_drift"] = drift;
  if (!tr.rho.empty()) {
    const auto [lo, hi] = std::minmax_element(tr.rho.begin(), tr.rho.end());
    d["rho_min"] = *lo;
    d["rho_max"] = *hi;
  }
  d["phi1_autocorr_half_lag"] = half_decay_lag(re1, s.sample_spacing);
  if (!tr.rho.empty()) {
    const auto ev = local_eigenvalues(s.lambda, s.a * tr.rho.front(), s.g, s.consts);
    d["local_min_abs_real_at_origin"] = ev.min_abs_real;
  }
}

void run_lyapunov(const Params& p, RunWriter& w) {
  const Stationary1DParams s = stationary_of(p);
  const double renorm = p.num("renorm"), l1 = p.num("length"), l2 = p.num("length2");
  if (!(l2 > 0.0)) throw UsageError("lyapunov: length2 must be positive");
  const LyapunovResult a = lyapunov_exponent(s, renorm, l1);
  const LyapunovResult b = lyapunov_exponent(s, renorm, l2);
  const LyapunovResult& longer = l2 >= l1 ? b : a;

  CsvTable csv({"x", "estimate"});
  for (std::size_t i = 0; i < longer.trace_x.size(); ++i) csv.add_row({longer.trace_x[i], longer.trace_estimate[i]});
  w.write("trace.csv", csv.str());
  w.write("trace.svg", svg_line_plot("running Lyapunov estimate", "x", "estimate",
                                     {{"estimate", longer.trace_x, longer.trace_estimate}}));
  auto& d = w.diagnostics();
  d["exponent"] = a.exponent;
  d["exponent2"] = b.exponent;
  const double scale = std::max(std::abs(a.exponent), std::abs(b.exponent));
  d["relative_agreement"] = scale > 0.0 ? std::abs(a.exponent - b.exponent) / scale : 0.0;
}

// evolve1d

SpinorField1D initial_field(const Params& p, const Grid1D& g, const PhysConsts& c) {
  const std::string ic = p.str("ic");
  SpinorField1D f(g);
  if (ic == "soliton") {
    const double a = p.num("a"), eta = p.num("ic.eta");
    if (p.str("closure") != "barotropic" || !(a < 0.0))
      throw UsageError("evolve1d: ic=soliton needs closure=barotropic with a < 0");
    if (!(eta > 0.0)) throw UsageError("evolve1d: ic.eta must be positive");
    const double ell = c.hbar / (eta * std::sqrt(c.mass * -a));
    const double mid = 0.5 * (g.x_min() + g.x_max());
    for (std::size_t i = 0; i < g.size(); ++i) f.psi1[i] = eta / std::cosh((g.x(i) - mid) / ell);
  } else if (ic == "gaussian") {
    const double s = p.num("ic.width"), k = p.num("ic.k");
    if (!(s > 0.0)) throw UsageError("evolve1d: ic.width must be positive");
    const double mid = 0.5 * (g.x_min() + g.x_max());
    const double norm = std::pow(2.0 * std::numbers::pi * s * s, -0.25);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = g.x(i) - mid;
      f.psi1[i] = std::polar(norm * std::exp(-x * x / (4.0 * s * s)), k * x);
    }
  } else if (ic == "pair") {
    if (!g.periodic()) throw UsageError("evolve1d: ic=pair needs the periodic split-step grid");
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double th = 2.0 * std::numbers::pi * (g.x(i) - g.x_min()) / g.length();
      f.psi1[i] = std::polar(std::sqrt(0.6 + 0.2 * std::cos(th)), 0.3 * std::sin(th) + th);
      f.psi2[i] = std::polar(std::sqrt(0.5 + 0.1 * std::sin(2.0 * th)), -0.2 * std::cos(th) + th);
    }
  } else {
    throw UsageError("evolve1d: unknown ic '" + ic + "' (soliton | gaussian | pair)");
  }
  f.validate();
  return f;
}

struct EvolveSetup {
  Evolve1DParams params;
  SpinorField1D initial;
};

Grid1D grid_of(const Params& p) {
  const std::string scheme = p.str("scheme");
  if (scheme != "split-step" && scheme != "crank-nicolson")
    throw UsageError("evolve1d: unknown scheme '" + scheme + "' (split-step | crank-nicolson)");
  return Grid1D(p.num("grid.xmin"), p.num("grid.xmax"), p.count("grid.n"), scheme == "split-step");
}

Closure closure_of(const Params& p) {
  const std::string c = p.str("closure");
  if (c == "barotropic") return BarotropicClosure{p.num("a")};
  if (c == "ideal") return eos_of(p);
  throw UsageError("unknown closure '" + c + "' (barotropic | ideal)");
}

void run_evolve1d(const Params& p, RunWriter& w) {
  const PhysConsts c = consts_of(p);
  const Grid1D g = grid_of(p);
  Evolve1DParams e{g};
  e.dt = p.num("dt");
  e.n_steps = p.count("steps");
  e.stride = p.count("stride");
  if (e.stride == 0) throw UsageError("evolve1d: stride must be positive");
  e.closure = closure_of(p);
  e.consts = c;
  e.scheme = g.periodic() ? Scheme::split_step_spectral : Scheme::crank_nicolson;
  const SpinorField1D f0 = initial_field(p, g, c);
  const EvolveResult r = evolve(f0, e);

  CsvTable cons({"t", "N", "E"});
  for (std::size_t i = 0; i < r.report.t.size(); ++i) cons.add_row({r.report.t[i], r.report.N[i], r.report.E[i]});
  w.write("conservation.csv", cons.str());

  json snaps = json::array();
  for (std::size_t k = 0; k < r.snapshots.size(); ++k) {
    const Snapshot& s = r.snapshots[k];
    CsvTable t({"x", "re_psi1", "im_psi1", "re_psi2", "im_psi2", "sigma"});
    for (std::size_t i = 0; i < g.size(); ++i)
      t.add_row({g.x(i), s.psi1[i].real(), s.psi1[i].imag(), s.psi2[i].real(), s.psi2[i].imag(), s.sigma[i]});
    const std::string name = index_name("snapshots/snap_", k, ".csv");
    w.write(name, t.str());
    snaps.push_back({{"file", name}, {"t", s.t}});
  }
  if (!r.snapshots.empty()) {
    std::vector<double> x(g.size()), first(g.size()), last(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      x[i] = g.x(i);
      first[i] = std::norm(r.snapshots.front().psi1[i]) + std::norm(r.snapshots.front().psi2[i]);
      last[i] = std::norm(r.snapshots.back().psi1[i]) + std::norm(r.snapshots.back().psi2[i]);
    }
    w.write("density.svg", svg_line_plot("density", "x", "rho", {{"initial", x, first}, {"final", x, last}}));
  }
  auto& d = w.diagnostics();
  d["snapshots"] = snaps;
  d["max_rel_N_drift"] = r.report.max_rel_N_drift;
  d["max_rel_E_drift"] = r.report.max_rel_E_drift;
  d["clamp_activations"] = r.clamp_activations;
  d["first_clamp_t"] = r.first_clamp_t;
  d["log"] = r.log;
  d["h"] = g.spacing();
}

// spiral and render2d

SpiralParams spiral_of(const Params& p) {
  SpiralParams s;
  s.n = static_cast<int>(p.integer("n"));
  s.omega = p.num("omega");
  s.eos = eos_of(p);
  s.consts = consts_of(p);
  s.thermal = p.flag("thermal");
  s.r_eps = p.num("reps");
  s.r_max = p.num("rmax");
  s.c_lo = p.num("c_lo");
  s.c_hi = p.num("c_hi");
  s.beta10 = p.num("beta10");
  s.n_samples = p.count("samples");
  s.overflow_guard = p.num("guard");
  s.tol = OdeTolerances{p.num("rtol"), p.num("atol")};
  s.validate();
  return s;
}

Grid2D square_grid(std::size_t size, double extent) {
  if (size < 8) throw UsageError("render size must be at least 8");
  if (!(extent > 0.0)) throw UsageError("render extent must be positive");
  const Grid1D a(-extent, extent, size, false);
  return Grid2D(a, a);
}

std::vector<double> render_quantity(const Reconstruction2D& rec, const std::string& q) {
  const auto& f = rec.field;
  std::vector<double> v(f.size(), 0.0);
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (q == "re_psi1") v[k] = f.psi1[k].real();
    else if (q == "re_psi2") v[k] = f.psi2[k].real();
    else if (q == "rho") v[k] = f.density(k);
    else if (q == "arg_psi1") v[k] = std::arg(f.psi1[k]);
    else if (q == "arg_psi2") v[k] = std::arg(f.psi2[k]);
    else throw UsageError("unknown quantity '" + q + "' (re_psi1 | re_psi2 | rho | arg_psi1 | arg_psi2)");
  }
  return v;
}

void write_raster(RunWriter& w, const std::string& name, const std::vector<double>& v, const Grid2D& g,
                  const Mask& valid, double extent, double t) {
  PgmScale scale;
  w.write(name, encode_pgm16(v, g.nx(), g.ny(), valid, scale));
  w.rasters()[name] = {{"min", scale.min}, {"max", scale.max}, {"nx", g.nx()}, {"ny", g.ny()},
                       {"extent", extent}, {"t", t}};
}

void write_spiral_tables(RunWriter& w, const SpiralSolution& s) {
  CsvTable csv({"r", "re_phi1", "im_phi1", "beta1", "beta2", "rho", "sigma"});
  std::vector<double> amp(s.r.size());
  for (std::size_t i = 0; i < s.r.size(); ++i) {
    csv.add_row({s.r[i], s.phi1[i].real(), s.phi1[i].imag(), s.beta1[i], s.beta2[i], s.rho[i], s.sigma[i]});
    amp[i] = std::norm(s.phi1[i]);
  }
  w.write("spiral.csv", csv.str());
  w.write("beta.svg", svg_line_plot("entropy phases", "r", "beta", {{"beta1", s.r, s.beta1}, {"beta2", s.r, s.beta2}}));
  w.write("amplitude.svg", svg_line_plot("component densities", "r", "|phi|^2",
                                         {{"|phi1|^2", s.r, amp}, {"|phi2|^2", s.r, amp}}));
}

void run_spiral(const Params& p, RunWriter& w, json* summary) {
  const SpiralParams sp = spiral_of(p);
  const ShootResult sh = shoot(sp);
  const SpiralSolution& s = sh.solution;
  write_spiral_tables(w, s);

  auto& d = w.diagnostics();
  d["c0"] = sh.c0;
  d["scale_invariant"] = sh.scale_invariant;
  d["iterations"] = sh.iterations;
  d["bounded_end"] = sh.bounded_end;
  d["unbounded_end"] = sh.unbounded_end;
  d["bounded_verified"] = sh.bounded_verified;
  d["unbounded_verified"] = sh.unbounded_verified;
  d["bounded"] = s.bounded;
  d["r_end"] = s.r_end;
  d["diagnostic"] = s.diagnostic;
  const SpiralResidual res = spiral_residual(s);
  d["residual_amplitude"] = res.amplitude;
  d["residual_phase"] = res.phase;
  if (!s.beta1.empty()) {
    const auto [lo, hi] = std::minmax_element(s.beta1.begin(), s.beta1.end());
    d["beta1_range"] = *hi - *lo;
  }
  try {
    const ArmFit a = arm_linearity(s, p.num("arm.rmin"));
    d["arm"] = {{"slope", a.slope}, {"intercept", a.intercept}, {"max_abs_deviation", a.max_abs_deviation},
                {"fit_r2", a.fit_r2}, {"samples", a.samples}, {"r_min", p.num("arm.rmin")}};
  } catch (const DomainError& e) {
    d["arm"] = nullptr;
    d["arm_error"] = e.what();
  }

  if (p.flag("render")) {
    const double extent = p.num("render.extent"), t = p.num("render.t");
    const Grid2D g = square_grid(p.count("render.size"), extent);
    const Reconstruction2D rec = reconstruct_2d(s, t, g);
    write_raster(w, "re_psi1.pgm", render_quantity(rec, "re_psi1"), g, rec.valid, extent, t);
    write_raster(w, "re_psi2.pgm", render_quantity(rec, "re_psi2"), g, rec.valid, extent, t);
  }
  if (summary) {
    (*summary)["c0"] = sh.c0;
    (*summary)["bounded"] = s.bounded ? 1.0 : 0.0;
    (*summary)["residual_amplitude"] = res.amplitude;
    (*summary)["residual_phase"] = res.phase;
    (*summary)["arm_slope"] = d["arm"].is_null() ? json(nullptr) : d["arm"]["slope"];
    (*summary)["arm_fit_r2"] = d["arm"].is_null() ? json(nullptr) : d["arm"]["fit_r2"];
  }
}

json read_manifest(const fs::path& run) {
  const fs::path m = run / "manifest.json";
  if (!fs::exists(m)) throw UsageError("no manifest.json in '" + run.string() + "'");
  try {
    return json::parse(read_file(m));
  } catch (const json::exception& e) {
    throw UsageError("cannot parse '" + m.string() + "': " + e.what());
  }
}

Params manifest_params(const json& m) {
  std::map<std::string, std::string> v;
  for (const auto& [k, val] : m.at("parameters").items()) v[k] = val.get<std::string>();
  return Params(m.at("subcommand").get<std::string>(), std::move(v));
}

fs::path resolve_run(const std::string& run) {
  if (run.empty()) throw UsageError("missing --run");
  fs::path r(run);
  if (r.is_relative() && !fs::exists(r)) r = output_root() / r;
  return r;
}

void run_render2d(const Params& p, RunWriter& w) {
  const fs::path run = resolve_run(p.str("run"));
  const json m = read_manifest(run);
  if (m.value("subcommand", "") != "spiral") throw UsageError("render2d: '" + run.string() + "' is not a spiral run");
  const Params src = manifest_params(m);
  const fs::path csv_path = run / "spiral.csv";
  const CsvData csv = parse_csv(read_file(csv_path));
  w.add_input(run / "manifest.json");
  w.add_input(csv_path);

  SpiralSolution s;
  s.params.n = static_cast<int>(src.integer("n"));
  s.params.omega = src.num("omega");
  s.params.consts = consts_of(src);
  const std::size_t cr = csv.column("r"), c1 = csv.column("re_phi1"), c2 = csv.column("im_phi1"),
                    cb = csv.column("beta1");
  for (const auto& row : csv.rows) {
    s.r.push_back(row[cr]);
    s.phi1.emplace_back(row[c1], row[c2]);
    s.beta1.push_back(row[cb]);
  }
  const double extent = p.num("extent"), t = p.num("t");
  const Grid2D g = square_grid(p.count("size"), extent);
  const Reconstruction2D rec = reconstruct_2d(s, t, g);
  const std::string q = p.str("quantity");
  write_raster(w, q + ".pgm", render_quantity(rec, q), g, rec.valid, extent, t);
  w.diagnostics()["source"] = run.string();
}

// diagnose

struct LoadedRun {
  fs::path dir;
  Grid1D grid;
  Closure closure;
  PhysConsts consts;
  std::vector<Snapshot> snaps;
};

LoadedRun load_evolve_run(const fs::path& run, RunWriter& w) {
  const json m = read_manifest(run);
  if (m.value("subcommand", "") != "evolve1d") throw UsageError("diagnose: '" + run.string() + "' is not an evolve1d run");
  const Params src = manifest_params(m);
  LoadedRun out{run, grid_of(src), closure_of(src), consts_of(src), {}};
  w.add_input(run / "manifest.json");
  for (const auto& s : m.at("diagnostics").at("snapshots")) {
    const fs::path f = run / s.at("file").get<std::string>();
    const CsvData d = parse_csv(read_file(f));
    w.add_input(f);
    if (d.rows.size() != out.grid.size()) throw UsageError("snapshot '" + f.string() + "' does not match the grid");
    Snapshot snap;
    snap.t = s.at("t").get<double>();
    const std::size_t a = d.column("re_psi1"), b = d.column("im_psi1"), c = d.column("re_psi2"),
                      e = d.column("im_psi2"), sg = d.column("sigma");
    for (const auto& row : d.rows) {
      snap.psi1.emplace_back(row[a], row[b]);
      snap.psi2.emplace_back(row[c], row[e]);
      snap.sigma.push_back(row[sg]);
    }
    out.snaps.push_back(std::move(snap));
  }
  return out;
}

void run_diagnose(const Params& p, RunWriter& w) {
  std::vector<fs::path> runs;
  const std::string list = p.str("run");
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = list.find(',', start);
    const std::string item = list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) runs.push_back(resolve_run(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (runs.empty()) throw UsageError("diagnose: missing --run");

  const std::vector<std::string> names{"continuity", "phase", "mu", "entropy", "momentum"};
  std::vector<std::string> header{"run", "h", "dt"};
  for (const auto& n : names) {
    header.push_back(n + "_l2");
    header.push_back(n + "_max");
  }
  CsvTable table(header);
  json all = json::array();
  std::vector<ResidualReport> reports;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const LoadedRun r = load_evolve_run(runs[i], w);
    const ResidualReport rep = fluid_residuals(r.snaps, r.grid, r.closure, r.consts);
    std::vector<double> row{static_cast<double>(i), rep.h, rep.dt};
    json eq = json::object();
    for (const auto& n : names) {
      const auto& e = rep.at(n);
      row.push_back(e.l2);
      row.push_back(e.max);
      eq[n] = {{"l2", e.l2}, {"max", e.max}};
    }
    table.add_row(row);
    all.push_back({{"run", runs[i].string()}, {"h", rep.h}, {"dt", rep.dt}, {"equations", eq},
                   {"masked_fraction", rep.masked_fraction}, {"evaluated_snapshots", rep.evaluated_snapshots}});
    reports.push_back(rep);

    if (i == 0) {
      CsvTable en({"t", "N", "H_total", "H_classical", "H_quantum", "masked_measure"});
      for (const auto& s : r.snaps) {
        const SpinorField1D f(r.grid, s.psi1, s.psi2);
        const EnergyBreakdown b = energy_and_number(f, r.closure, r.consts, std::span<const double>(s.sigma));
        en.add_row({s.t, b.N, b.H_total, b.H_classical, b.H_quantum, b.masked_measure});
      }
      w.write("energy.csv", en.str());
    }
  }
  w.write("residuals.csv", table.str());
  w.write("residuals.json", all.dump(2) + "\n");
  w.diagnostics()["runs"] = all;

  if (reports.size() > 1) {
    std::vector<std::string> ch{"run", "h", "dt"};
    for (const auto& n : names) ch.push_back(n + "_order");
    CsvTable conv(ch);
    json orders = json::array();
    for (std::size_t i = 1; i < reports.size(); ++i) {
      const auto& a = reports[i - 1];
      const auto& b = reports[i];
      const double ratio = a.h / b.h;
      std::vector<double> row{static_cast<double>(i), b.h, b.dt};
      json o = json::object();
      for (const auto& n : names) {
        const double ea = a.at(n).l2, eb = b.at(n).l2;
        const double order = (ea > 0.0 && eb > 0.0 && ratio > 1.0) ? std::log(ea / eb) / std::log(ratio) : NAN;
        row.push_back(order);
        o[n] = std::isfinite(order) ? json(order) : json(nullptr);
      }
      conv.add_row(row);
      orders.push_back(o);
    }
    w.write("convergence.csv", conv.str());
    w.diagnostics()["convergence_orders"] = orders;
  }
}

void dispatch_run(const Params& p, RunWriter& w, json* summary) {
  const std::string& sub = p.subcommand();
  if (sub == "thermo-check") run_thermo_check(p, w);
  else if (sub == "stationary1d") run_stationary1d(p, w);
  else if (sub == "lyapunov") run_lyapunov(p, w);
  else if (sub == "evolve1d") run_evolve1d(p, w);
  else if (sub == "spiral") run_spiral(p, w, summary);
  else if (sub == "render2d") run_render2d(p, w);
  else if (sub == "diagnose") run_diagnose(p, w);
  else throw UsageError("not a runnable subcommand: " + sub);

  if (summary && sub != "spiral") {
    const json& d = w.diagnostics();
    for (const char* k : {"exponent", "exponent2", "max_rel_N_drift", "max_rel_E_drift", "energy_x_max_rel_drift",
                          "phi1_autocorr_half_lag", "T", "H"})
      if (d.contains(k)) (*summary)[k] = d[k];
  }
}

}  // namespace

fs::path output_root() {
  const char* env = std::getenv(kOutputRootEnv);
  return (env && *env) ? fs::path(env) : fs::path("qspiral-out");
}

fs::path run_directory(const Params& p, const std::string& fallback) {
  const std::string out = p.str("out");
  if (out.empty()) return output_root() / fallback;
  const fs::path o(out);
  return o.is_absolute() ? o : output_root() / o;
}

bool is_runnable(const std::string& s) {
  return s == "thermo-check" || s == "stationary1d" || s == "lyapunov" || s == "evolve1d" || s == "spiral" ||
         s == "render2d" || s == "diagnose";
}

int execute(const Params& p, const fs::path& dir, json* summary, const std::string& figure) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    RunWriter w(dir, p.subcommand());
    w.set_parameters(p.to_json());
    w.set_command(p.command_line());
    if (!figure.empty()) w.diagnostics()["figure"] = figure;
    dispatch_run(p, w, summary);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    w.finish(dt.count());
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "qspiral " << p.subcommand() << ": usage error: " << e.what() << "\n";
    return 1;
  } catch (const InvalidField& e) {
    std::cerr << "qspiral " << p.subcommand() << ": invalid input: " << e.what() << "\n";
    return 1;
  } catch (const DomainError& e) {
    std::cerr << "qspiral " << p.subcommand() << ": invalid input: " << e.what() << "\n";
    return 1;
  } catch (const BracketError& e) {
    std::cerr << "qspiral " << p.subcommand() << ": shooting failed: " << e.what() << "\n";
    return 2;
  } catch (const NumericalFailure& e) {
    std::cerr << "qspiral " << p.subcommand() << ": numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "qspiral " << p.subcommand() << ": error: " << e.what() << "\n";
    return 2;
  }
}

int reproduce_figure(const std::string& figure, const Params& common) {
  const fs::path dir = run_directory(common, "figure-" + figure);
  auto params = [&](const std::string& sub, std::map<std::string, std::string> over) {
    over["out"] = "";
    return Params::resolve(sub, {}, over);
  };
  if (figure == "1") {
    int rc = execute(params("stationary1d", {}), dir, nullptr, figure);
    if (rc == 0) rc = execute(params("lyapunov", {}), dir / "lyapunov", nullptr, figure);
    return rc;
  }
  if (figure == "2") return execute(params("spiral", {}), dir, nullptr, figure);
  if (figure == "3") return execute(params("spiral", {{"render", "false"}}), dir, nullptr, figure);
  if (figure == "4a") return execute(params("spiral", {{"n", "0"}}), dir, nullptr, figure);
  if (figure == "4b") return execute(params("spiral", {{"s1", "0"}}), dir, nullptr, figure);
  std::cerr << "qspiral reproduce-figure: unknown figure '" << figure << "' (1 | 2 | 3 | 4a | 4b)\n";
  return 1;
}

int sweep(const std::string& target, const std::string& key, const std::string& values,
          const std::map<std::string, std::string>& file, const std::map<std::string, std::string>& flags,
          std::size_t jobs) {
  std::vector<std::string> list;
  Params base;
  try {
    if (!is_runnable(target) || target == "render2d" || target == "diagnose")
      throw UsageError("sweep: cannot sweep '" + target + "'");
    base = Params::resolve(target, file, flags);
    if (key.empty() || key == "out" || !base.values().count(key))
      throw UsageError("sweep: '" + key + "' is not a key of " + target + "; valid keys: " + key_list(target));
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = values.find(',', start);
      std::string item = values.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      while (!item.empty() && item.front() == ' ') item.erase(item.begin());
      while (!item.empty() && item.back() == ' ') item.pop_back();
      if (item.empty()) {
        if (!values.empty()) throw UsageError("sweep: empty entry in --sweep-values");
      } else {
        list.push_back(item);
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (list.empty()) throw UsageError("sweep: --sweep-values is empty");
  } catch (const UsageError& e) {
    std::cerr << "qspiral sweep: usage error: " << e.what() << "\n";
    return 1;
  }

  const fs::path dir = run_directory(base, "sweep-" + target);
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<int> codes(list.size(), 0);
  std::vector<json> summaries(list.size(), json::object());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < list.size();) {
      Params p = base;
      p.set(key, list[i]);
      char name[32];
      std::snprintf(name, sizeof name, "point_%03zu", i);
      codes[i] = execute(p, dir / name, &summaries[i]);
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, list.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::set<std::string> columns;
  for (const auto& s : summaries)
    for (const auto& [k, v] : s.items()) columns.insert(k);
  std::string csv = "index," + key + ",exit_code";
  for (const auto& c : columns) csv += "," + c;
  csv += "\n";
  for (std::size_t i = 0; i < list.size(); ++i) {
    csv += std::to_string(i) + "," + list[i] + "," + std::to_string(codes[i]);
    for (const auto& c : columns) {
      csv += ",";
      if (summaries[i].contains(c) && summaries[i][c].is_number()) csv += format_double(summaries[i][c].get<double>());
      else if (summaries[i].contains(c) && summaries[i][c].is_boolean()) csv += summaries[i][c].get<bool>() ? "1" : "0";
    }
    csv += "\n";
  }

  RunWriter w(dir, "sweep");
  json params = base.to_json();
  params["sweep.target"] = target;
  params["sweep.key"] = key;
  params["sweep.values"] = list;
  w.set_parameters(params);
  std::vector<std::string> cmd{"qspiral", "sweep", target, "--sweep-key", key, "--sweep-values", values};
  for (const auto& a : base.command_line()) if (a != "qspiral" && a != target) cmd.push_back(a);
  w.set_command(cmd);
  w.write("summary.csv", csv);
  std::size_t failed = 0;
  for (int c : codes) failed += c != 0;
  w.diagnostics()["points"] = list.size();
  w.diagnostics()["failed"] = failed;
  w.diagnostics()["exit_codes"] = codes;
  const std::chrono::duration<double> el = std::chrono::steady_clock::now() - t0;
  w.finish(el.count());
  if (failed) {
    std::cerr << "qspiral sweep: " << failed << " of " << list.size() << " points failed\n";
    return 2;
  }
  return 0;
}

}  // namespace qspiral::cli
