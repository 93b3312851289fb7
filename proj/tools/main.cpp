// Command-line front end: equilibrium solves, coupled runs, the iteration
// certificates and the cross-module verification suite. All numeric output
// uses 17 significant digits so runs can be reproduced bit-for-bit.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "cadsim/cadsim.hpp"

namespace fs = std::filesystem;
using namespace cadsim;

namespace {

// exit codes: 0 ok, 1 internal, 2 validation/config, 3 hypothesis,
// 4 numerical failure, 5 io, 6 no convergence
constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitValidation = 2;
constexpr int kExitHypothesis = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitIo = 5;
constexpr int kExitNoConvergence = 6;

std::string fmt(double v) { return format_full(v); }

struct OutputBundle {
  fs::path root;
  std::vector<std::string> written;  // relative paths, manifest order

  explicit OutputBundle(fs::path dir) : root(std::move(dir)) {
    fs::create_directories(root / "fields");
    fs::create_directories(root / "series");
    fs::create_directories(root / "certificates");
  }

  fs::path reserve(const std::string& rel) {
    written.push_back(rel);
    return root / rel;
  }
};

class Manifest {
 public:
  void add(const std::string& key, const std::string& value) { rows_.push_back({key, value}); }
  void add(const std::string& key, double value) { add(key, fmt(value)); }

  // the manifest goes last so it only ever lists files that exist
  void write(OutputBundle& bundle, double wallclock_s) {
    for (size_t i = 0; i < bundle.written.size(); ++i) {
      add("output." + std::to_string(i), bundle.written[i]);
    }
    add("wallclock_seconds", wallclock_s);
    std::ofstream os(bundle.root / "manifest.txt");
    if (!os) throw Error("cannot write manifest");
    for (const auto& [k, v] : rows_) os << k << '=' << v << '\n';
  }

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

struct CommonOpts {
  double rho = 0.7, sigma = 0.5, a0 = 0.25, a1 = 0.5, eps = 0.35;
  bool strict = false, lenient = false;
  std::string out;

  Params params() const { return {rho, sigma, a0, a1, eps}; }
  ValidationMode mode() const {
    return lenient ? ValidationMode::lenient : ValidationMode::strict;
  }
};

void add_param_flags(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--rho", o.rho, "target density");
  sub->add_option("--sigma", o.sigma, "diffusion coefficient");
  sub->add_option("--a0", o.a0, "baseline binding rate");
  sub->add_option("--a1", o.a1, "gregarious binding coefficient");
  sub->add_option("--eps", o.eps, "unbinding rate");
  auto* strict = sub->add_flag("--strict", o.strict, "enforce the open range (0,1) (default)");
  sub->add_flag("--lenient", o.lenient, "downgrade range violations to warnings")
      ->excludes(strict);
  sub->set_config("--config", "", "flat key=value file; command-line flags win");
}

// returns false (after printing) when validation fails hard
bool check_params(const Params& p, ValidationMode mode) {
  const ParamCheck check = validate_params(p, mode);
  for (const auto& w : check.warnings) std::cerr << "warning: " << w.message << '\n';
  for (const auto& e : check.errors) std::cerr << "error: " << e.message << '\n';
  return check.ok();
}

Grid parse_grid(const std::string& text) {
  int nx = 0, ny = 0;
  char sep = 0;
  std::istringstream is(text);
  if (!(is >> nx >> sep >> ny) || (sep != 'x' && sep != 'X') || !is.eof()) {
    throw Error("bad --grid, expected NXxNY: " + text);
  }
  return Grid(nx, ny);
}

std::pair<Field, Field> parse_init(const std::string& text, const Grid& g, const Params& p) {
  if (text == "reference") {
    return {sample(g, reference_u0), sample(g, reference_v0)};
  }
  if (text == "stationary") {
    const double v_hat = *normalized_stationary(p).admissible;
    return {constant_field(g, 1.0 - v_hat), constant_field(g, v_hat)};
  }
  constexpr std::string_view kConst = "constant:";
  if (text.rfind(kConst, 0) == 0) {
    const std::string rest = text.substr(kConst.size());
    const size_t comma = rest.find(',');
    if (comma == std::string::npos) throw Error("--init constant needs two values: u,v");
    return {constant_field(g, std::stod(rest.substr(0, comma))),
            constant_field(g, std::stod(rest.substr(comma + 1)))};
  }
  throw UnknownBuiltin("unknown --init: " + text + " (reference | stationary | constant:u,v)");
}

std::vector<double> parse_eps_grid(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {  // lo:hi:count
    double lo = 0, hi = 0;
    int count = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%d", &lo, &hi, &count) != 3 || count < 2) {
      throw Error("bad --sweep-eps range, expected lo:hi:count");
    }
    for (int i = 0; i < count; ++i) out.push_back(lo + (hi - lo) * i / (count - 1));
    return out;
  }
  std::istringstream is(text);
  std::string tok;
  while (std::getline(is, tok, ',')) out.push_back(std::stod(tok));
  if (out.empty()) throw Error("empty --sweep-eps list");
  return out;
}

void write_series_csv(const fs::path& path, const std::vector<std::string>& header,
                      const std::vector<const std::vector<double>*>& cols) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  for (size_t k = 0; k < header.size(); ++k) os << (k ? "," : "") << header[k];
  os << '\n';
  const size_t rows = cols.empty() ? 0 : cols.front()->size();
  for (size_t r = 0; r < rows; ++r) {
    for (size_t k = 0; k < cols.size(); ++k) os << (k ? "," : "") << fmt((*cols[k])[r]);
    os << '\n';
  }
}

// ---------------------------------------------------------------------------

struct StationaryOpts : CommonOpts {
  std::string sweep;
};

int cmd_stationary(const StationaryOpts& o) {
  // eps = 0 is the deformation limit of the cubic; validate the rest normally
  const Params p = o.params();
  Params gate = p;
  if (o.eps == 0.0) gate.epsilon = std::numeric_limits<double>::min();
  if (!check_params(gate, o.mode())) return kExitValidation;

  const auto t0 = std::chrono::steady_clock::now();
  const CubicRootReport rep = solve_stationary_cubic(p.rho, p.a0, p.a1, p.epsilon);
  std::vector<CubicRootReport> sweep_reports;
  std::vector<double> eps_grid;
  if (!o.sweep.empty()) {
    eps_grid = parse_eps_grid(o.sweep);
    sweep_reports = sweep_epsilon(p, eps_grid);
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ostringstream report;
  for (size_t i = 0; i < rep.roots.size(); ++i) {
    report << "roots." << i << '=' << fmt(rep.roots[i]) << '\n';
  }
  report << "admissible=" << fmt(*rep.admissible) << '\n'
         << "residual=" << fmt(rep.residual) << '\n';
  if (rep.degenerate_pattern) report << "warning=degenerate-root-pattern\n";
  std::cout << report.str();

  if (!o.out.empty()) {
    OutputBundle bundle{fs::path(o.out)};
    Manifest mf;
    mf.add("tool", "cadsim");
    mf.add("subcommand", "stationary");
    mf.add("param.rho", p.rho);
    mf.add("param.a0", p.a0);
    mf.add("param.a1", p.a1);
    mf.add("param.epsilon", p.epsilon);
    {
      std::ofstream os(bundle.reserve("stationary.txt"));
      os << report.str();
    }
    if (!sweep_reports.empty()) {
      std::ofstream os(bundle.reserve("series/eps_sweep.csv"));
      os << "epsilon,root_low,root_mid,root_high,admissible,residual\n";
      for (size_t i = 0; i < sweep_reports.size(); ++i) {
        const auto& r = sweep_reports[i];
        os << fmt(eps_grid[i]) << ',' << fmt(r.roots[0]) << ',' << fmt(r.roots[1]) << ','
           << fmt(r.roots[2]) << ',' << fmt(*r.admissible) << ',' << fmt(r.residual) << '\n';
      }
    }
    mf.add("admissible", *rep.admissible);
    mf.add("residual", rep.residual);
    mf.write(bundle, wall);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvolveOpts : CommonOpts {
  std::string grid = "64x64";
  double dt = 1e-3, dt_max = 0.0, dt_growth = 1.0, t_end = 1.0;
  std::string scheme = "riccati-exact";
  std::string init = "constant:0.6,0.4";
  double threshold = 0.0;  // > 0 enables the convergence stop rule
  int snapshot_every = 0;
  double cg_tol = 1e-11;
  std::string preset;
};

void apply_reference_preset(CLI::App* sub, EvolveOpts& o) {
  auto unset = [&](const char* flag) { return sub->count(flag) == 0; };
  if (unset("--rho")) o.rho = 0.7;
  if (unset("--sigma")) o.sigma = 1.0;
  if (unset("--a0")) o.a0 = 0.25;
  if (unset("--a1")) o.a1 = 0.5;
  if (unset("--eps")) o.eps = 0.35;
  if (unset("--grid")) o.grid = "128x128";
  if (unset("--dt")) o.dt = 1e-4;
  if (unset("--dt-max")) o.dt_max = 5e-3;
  if (unset("--dt-growth")) o.dt_growth = 1.05;
  if (unset("--T")) o.t_end = 40.0;
  if (unset("--threshold")) o.threshold = 1e-3;
  if (unset("--init")) o.init = "reference";
  if (unset("--strict") && unset("--lenient")) o.lenient = true;
}

int cmd_evolve(const EvolveOpts& o) {
  const Params p = o.params();
  if (!check_params(p, o.mode())) return kExitValidation;
  if (o.out.empty()) throw Error("--out is required for evolve");

  const Grid grid = parse_grid(o.grid);
  const auto [u0, v0] = parse_init(o.init, grid, p);
  const DerivedConstants dc = derived_constants(p);

  RunConfig cfg{p, grid, o.dt, o.t_end};
  cfg.scheme_v = o.scheme == "explicit-euler" ? VScheme::explicit_euler
                                              : VScheme::riccati_exact;
  if (o.scheme != "explicit-euler" && o.scheme != "riccati-exact") {
    throw Error("unknown --scheme-v: " + o.scheme);
  }
  cfg.snapshot_every = o.snapshot_every;
  cfg.dt_max = o.dt_max;
  cfg.dt_growth = o.dt_growth;
  cfg.cg_tol = o.cg_tol;
  double v_target = 0.0;
  if (o.threshold > 0.0) {
    v_target = *normalized_stationary(p).admissible;
    cfg.stop_rule = StopRule{v_target, o.threshold};
  }

  const auto t0 = std::chrono::steady_clock::now();
  const RunResult rr = run(cfg, u0, v0);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!rr.hypothesis_warning.empty()) std::cerr << "warning: " << rr.hypothesis_warning << '\n';

  OutputBundle bundle{fs::path(o.out)};
  Manifest mf;
  mf.add("tool", "cadsim");
  mf.add("subcommand", "evolve");
  mf.add("param.rho", p.rho);
  mf.add("param.sigma", p.sigma);
  mf.add("param.a0", p.a0);
  mf.add("param.a1", p.a1);
  mf.add("param.epsilon", p.epsilon);
  mf.add("mode", o.lenient ? "lenient" : "strict");
  mf.add("derived.u_bound", dc.u_bound);
  mf.add("derived.v_bound", dc.v_bound);
  mf.add("derived.lipschitz", dc.lipschitz);
  mf.add("derived.bound_prefactor", dc.bound_prefactor);
  mf.add("grid.nx", std::to_string(grid.nx));
  mf.add("grid.ny", std::to_string(grid.ny));
  mf.add("run.dt", o.dt);
  mf.add("run.dt_max", o.dt_max);
  mf.add("run.dt_growth", o.dt_growth);
  mf.add("run.t_end", o.t_end);
  mf.add("run.scheme_v", to_string(cfg.scheme_v));
  mf.add("run.snapshot_every", std::to_string(o.snapshot_every));
  mf.add("run.cg_tol", o.cg_tol);
  mf.add("run.init", o.init);

  write_field_csv(rr.u_snapshots.frames.front(), 0.0, bundle.reserve("fields/u_initial.csv"));
  write_field_csv(rr.v_snapshots.frames.front(), 0.0, bundle.reserve("fields/v_initial.csv"));
  for (size_t k = 1; k + 1 < rr.u_snapshots.times.size(); ++k) {
    char name[64];
    std::snprintf(name, sizeof name, "fields/u_snap_%03zu.csv", k);
    write_field_csv(rr.u_snapshots.frames[k], rr.u_snapshots.times[k], bundle.reserve(name));
    std::snprintf(name, sizeof name, "fields/v_snap_%03zu.csv", k);
    write_field_csv(rr.v_snapshots.frames[k], rr.v_snapshots.times[k], bundle.reserve(name));
  }
  const double t_final = rr.u_snapshots.times.back();
  write_field_csv(rr.final_state.u, t_final, bundle.reserve("fields/u_final.csv"));
  write_field_csv(rr.final_state.v, t_final, bundle.reserve("fields/v_final.csv"));
  {
    const FieldStats su = field_stats(rr.final_state.u);
    write_field_pgm(rr.final_state.u, su.min, su.max, t_final, bundle.reserve("fields/u_final.pgm"));
    bundle.written.push_back("fields/u_final.pgm.txt");
    const FieldStats sv = field_stats(rr.final_state.v);
    write_field_pgm(rr.final_state.v, sv.min, sv.max, t_final, bundle.reserve("fields/v_final.pgm"));
    bundle.written.push_back("fields/v_final.pgm.txt");
  }

  {
    std::vector<std::string> header{"t", "mass", "min_u", "max_u", "min_v", "max_v", "v_mid"};
    std::vector<const std::vector<double>*> cols{
        &rr.series.t,     &rr.series.mass,  &rr.series.min_u, &rr.series.max_u,
        &rr.series.min_v, &rr.series.max_v, &rr.series.v_mid};
    if (cfg.stop_rule) {
      header.insert(header.end(), {"err_max", "err_min", "err_mean"});
      cols.insert(cols.end(), {&rr.series.err_max, &rr.series.err_min, &rr.series.err_mean});
    }
    write_series_csv(bundle.reserve("series/diagnostics.csv"), header, cols);
  }

  double drift = 0.0;
  for (double m : rr.series.mass) drift = std::max(drift, std::abs(m - rr.series.mass.front()));

  if (cfg.stop_rule) {
    const ConvergenceSeries cs = convergence_study(rr.series, v_target, o.threshold);
    write_series_csv(bundle.reserve("series/convergence.csv"),
                     {"t", "err_max", "err_min", "err_mean"},
                     {&cs.times, &cs.err_max, &cs.err_min, &cs.err_mean});
    mf.add("stop.target", v_target);
    mf.add("stop.threshold", o.threshold);
    const std::tuple<const char*, const std::vector<double>*, std::optional<double>> fits[] = {
        {"err_max", &cs.err_max, cs.cross_max},
        {"err_min", &cs.err_min, cs.cross_min},
        {"err_mean", &cs.err_mean, cs.cross_mean}};
    for (const auto& [name, curve, cross] : fits) {
      const auto [lo, hi] = default_fit_window(cs, cross);
      try {
        const RateFit fit = exponential_rate_fit(cs.times, *curve, lo, hi);
        const std::string base = std::string("fit.") + name;
        mf.add(base + ".window_lo", lo);
        mf.add(base + ".window_hi", hi);
        mf.add(base + ".slope", fit.slope);
        mf.add(base + ".intercept", fit.intercept);
        mf.add(base + ".residual_std", fit.residual_std);
        mf.add(base + ".points", std::to_string(fit.points));
      } catch (const InsufficientData&) {
        mf.add(std::string("fit.") + name + ".error", "insufficient data in window");
      }
    }
  }

  mf.add("stop.reason", rr.stop_reason);
  if (rr.stop_time) mf.add("stop.time", *rr.stop_time);
  mf.add("steps", std::to_string(rr.steps));
  mf.add("mass_drift", drift);
  mf.write(bundle, wall);

  std::cout << "stop_reason=" << rr.stop_reason << '\n';
  if (rr.stop_time) std::cout << "stop_time=" << fmt(*rr.stop_time) << '\n';
  std::cout << "steps=" << rr.steps << '\n' << "mass_drift=" << fmt(drift) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct PicardOpts : CommonOpts {
  std::string grid = "64x64";
  double dt = 1e-3, t_end = 1.0;
  std::string init = "constant:0.6,0.4";
  double tol = 1e-6;
  int n_max = 20;
  int stride = 1;
  double cg_tol = 1e-11;
};

int cmd_picard(const PicardOpts& o) {
  const Params p = o.params();
  if (!check_params(p, o.mode())) return kExitValidation;
  if (o.out.empty()) throw Error("--out is required for picard");

  const Grid grid = parse_grid(o.grid);
  const auto [f, g] = parse_init(o.init, grid, p);

  RunConfig cfg{p, grid, o.dt, o.t_end};
  cfg.cg_tol = o.cg_tol;
  PicardOptions opt;
  opt.tol = o.tol;
  opt.n_max = o.n_max;
  opt.certificate_stride = o.stride;

  const auto t0 = std::chrono::steady_clock::now();
  const PicardResult res = picard_solve(cfg, f, g, opt);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  OutputBundle bundle{fs::path(o.out)};
  Manifest mf;
  mf.add("tool", "cadsim");
  mf.add("subcommand", "picard");
  mf.add("param.rho", p.rho);
  mf.add("param.sigma", p.sigma);
  mf.add("param.a0", p.a0);
  mf.add("param.a1", p.a1);
  mf.add("param.epsilon", p.epsilon);
  mf.add("derived.u_bound", res.consts.u_bound);
  mf.add("derived.v_bound", res.consts.v_bound);
  mf.add("derived.lipschitz", res.consts.lipschitz);
  mf.add("derived.bound_prefactor", res.consts.bound_prefactor);
  mf.add("grid.nx", std::to_string(grid.nx));
  mf.add("grid.ny", std::to_string(grid.ny));
  mf.add("run.dt", o.dt);
  mf.add("run.t_end", o.t_end);
  mf.add("run.tol", o.tol);
  mf.add("run.n_max", std::to_string(o.n_max));

  bool all_within = true;
  {
    std::ofstream os(bundle.reserve("certificates/summary.csv"));
    os << "n,sup_U,sup_V,sup_bound,pass\n";
    for (const auto& cert : res.certificates) {
      os << cert.n << ',' << fmt(cert.sup_u) << ',' << fmt(cert.sup_v) << ','
         << fmt(cert.sup_bound) << ',' << (cert.within_bound ? 1 : 0) << '\n';
      all_within = all_within && cert.within_bound;
    }
  }
  for (const auto& cert : res.certificates) {
    char name[64];
    std::snprintf(name, sizeof name, "certificates/cert_%03d.csv", cert.n);
    std::ofstream os(bundle.reserve(name));
    os << "t,U_n,V_n,bound_n\n";
    for (size_t m = 0; m < cert.times.size(); ++m) {
      os << fmt(cert.times[m]) << ',' << fmt(cert.u_norms[m]) << ',' << fmt(cert.v_norms[m])
         << ',' << fmt(cert.bound[m]) << '\n';
    }
  }
  const double t_final = res.times.back();
  write_field_csv(res.u.frames.back(), t_final, bundle.reserve("fields/u_final.csv"));
  write_field_csv(res.v.frames.back(), t_final, bundle.reserve("fields/v_final.csv"));

  mf.add("converged", res.converged ? "true" : "false");
  mf.add("iterations", std::to_string(res.iterations));
  mf.add("certificates_pass", all_within ? "true" : "false");
  mf.write(bundle, wall);

  for (const auto& cert : res.certificates) {
    std::cout << "n=" << cert.n << " sup_U=" << fmt(cert.sup_u) << " sup_V=" << fmt(cert.sup_v)
              << " within_bound=" << (cert.within_bound ? 1 : 0) << '\n';
  }
  std::cout << "converged=" << (res.converged ? "true" : "false")
            << " iterations=" << res.iterations << '\n';
  return res.converged ? kExitOk : kExitNoConvergence;
}

// ---------------------------------------------------------------------------

struct VerifyOpts {
  bool quick = false;
  bool perturb_laplacian = false;
  std::string out;
};

struct CheckLog {
  std::vector<std::string> lines;
  int failed = 0;

  void report(const std::string& name, bool pass, const std::string& detail) {
    lines.push_back(std::string(pass ? "PASS " : "FAIL ") + name + " " + detail);
    std::cout << lines.back() << '\n';
    if (!pass) ++failed;
  }
};

int cmd_verify(const VerifyOpts& o) {
  const Params p{0.7, 1.0, 0.25, 0.5, 0.35};
  const DerivedConstants dc = derived_constants(p);
  std::mt19937_64 rng(20240817);
  CheckLog log;

  {  // conservativity, with the optional injected stencil bug
    const Grid g = o.quick ? Grid(24, 24) : Grid(96, 64);
    std::uniform_real_distribution<double> amp(-10.0, 10.0);
    double worst = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
      Field f(g);
      for (double& v : f.values) v = amp(rng);
      Field lap = laplacian_neumann(f, 1.0);
      if (o.perturb_laplacian) lap.values[0] += 1e-3 * f.values[0];  // boundary flux leak
      worst = std::max(worst, std::abs(integrate(lap)));
    }
    log.report("laplacian-conservativity", worst < 1e-12,
               "max_integral=" + fmt(worst) + " budget=1e-12");
  }

  {  // self-adjointness under the midpoint inner product
    const Grid g = o.quick ? Grid(16, 24) : Grid(32, 48);
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    double worst = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
      Field f(g), h(g);
      for (double& v : f.values) v = amp(rng);
      for (double& v : h.values) v = amp(rng);
      worst = std::max(worst, std::abs(inner_product(laplacian_neumann(f, 1.0), h) -
                                       inner_product(f, laplacian_neumann(h, 1.0))));
    }
    log.report("laplacian-self-adjoint", worst < 1e-12, "max_gap=" + fmt(worst) + " budget=1e-12");
  }

  {  // second order on the cosine eigenfunction
    auto eig = [](double x, double y) {
      return std::cos(std::numbers::pi * x) * std::cos(std::numbers::pi * y);
    };
    const double lambda = -2.0 * std::numbers::pi * std::numbers::pi;
    std::vector<double> errs;
    for (int n : (o.quick ? std::vector<int>{16, 32, 64} : std::vector<int>{32, 64, 128})) {
      const Grid g(n, n);
      const Field f = sample(g, eig);
      const Field lap = laplacian_neumann(f, 1.0);
      double err = 0.0;
      for (size_t c = 0; c < f.values.size(); ++c) {
        err = std::max(err, std::abs(lap.values[c] - lambda * f.values[c]));
      }
      errs.push_back(err);
    }
    const double o1 = std::log2(errs[0] / errs[1]);
    const double o2 = std::log2(errs[1] / errs[2]);
    log.report("laplacian-order", o1 >= 1.9 && o2 >= 1.9,
               "orders=" + fmt(o1) + "," + fmt(o2) + " budget>=1.9");
  }

  {  // reference data quadrature
    const Grid g = o.quick ? Grid(64, 64) : Grid(128, 128);
    const double iv = integrate(sample(g, reference_v0));
    const double total = integrate(sample(g, reference_u0)) + iv;
    const bool ok = std::abs(iv - 0.4) < 1e-10 && std::abs(total - 1.0) < 1e-10;
    log.report("quadrature-reference-data", ok,
               "int_v0=" + fmt(iv) + " int_total=" + fmt(total));
  }

  {  // equilibrium root against a plain bisection oracle
    auto bisect = [](double rho, double a0, double a1, double eps) {
      auto fn = [&](double v) { return (rho - v) * (a0 + a1 * v) * (1.0 - v) - eps * v; };
      double lo = 0.0, hi = rho, flo = fn(lo);
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((fn(mid) > 0.0) == (flo > 0.0)) {
          lo = mid;
          flo = fn(mid);
        } else {
          hi = mid;
        }
      }
      return 0.5 * (lo + hi);
    };
    const CubicRootReport rep = normalized_stationary(p);
    double worst = std::abs(*rep.admissible - bisect(p.rho, p.a0, p.a1, p.epsilon));
    bool ok = worst < 1e-12 && rep.residual < 1e-12 &&
              std::abs(*rep.admissible - 0.3107435) < 1e-6;
    std::uniform_real_distribution<double> u01(0.05, 0.95);
    const int draws = o.quick ? 10 : 50;
    for (int i = 0; i < draws; ++i) {
      Params q;
      q.rho = u01(rng);
      q.a1 = u01(rng);
      q.a0 = q.rho * q.a1 * u01(rng);
      q.epsilon = u01(rng);
      q.sigma = 0.5;
      const CubicRootReport r = normalized_stationary(q);
      const double gap = std::abs(*r.admissible - bisect(q.rho, q.a0, q.a1, q.epsilon));
      worst = std::max(worst, gap);
      ok = ok && gap < 1e-12 && r.residual < 1e-12;
    }
    log.report("stationary-oracle", ok, "max_gap=" + fmt(worst) + " budget=1e-12");
  }

  {  // jacobian against central differences
    std::uniform_real_distribution<double> ur(0.0, dc.u_bound);
    std::uniform_real_distribution<double> us(0.0, dc.v_bound);
    const double h = 1e-6;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const double r = ur(rng), s = us(rng);
      const ReactionPartials d = reaction_jacobian(r, s, p);
      const double fd_r = (reaction(r + h, s, p) - reaction(r - h, s, p)) / (2.0 * h);
      const double fd_s = (reaction(r, s + h, p) - reaction(r, s - h, p)) / (2.0 * h);
      worst = std::max({worst,
                        std::abs(fd_r - d.d_free) / std::max(1e-3, std::abs(d.d_free)),
                        std::abs(fd_s - d.d_bound) / std::max(1e-3, std::abs(d.d_bound))});
    }
    log.report("reaction-jacobian-fd", worst < 1e-6, "max_rel=" + fmt(worst) + " budget=1e-6");
  }

  {  // closed-form Lipschitz constant vs grid scan, plus random increments
    const int n = o.quick ? 500 : 2000;
    double scanned = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double r = dc.u_bound * i / n;
      for (int j = 0; j <= n; ++j) {
        const double s = dc.v_bound * j / n;
        const ReactionPartials d = reaction_jacobian(r, s, p);
        scanned = std::max({scanned, std::abs(d.d_free), std::abs(d.d_bound)});
      }
    }
    bool ok = std::abs(scanned - dc.lipschitz) < 1e-6;
    std::uniform_real_distribution<double> ur(0.0, dc.u_bound);
    std::uniform_real_distribution<double> us(0.0, dc.v_bound);
    const int pairs = o.quick ? 10000 : 100000;
    for (int i = 0; i < pairs && ok; ++i) {
      const double r = ur(rng), rp = ur(rng), s = us(rng), sp = us(rng);
      const double dq = std::abs(reaction(r, s, p) - reaction(rp, sp, p));
      ok = dq <= dc.lipschitz * (std::abs(r - rp) + std::abs(s - sp)) * (1.0 + 1e-12) + 1e-15;
    }
    log.report("lipschitz-certificate", ok,
               "scan=" + fmt(scanned) + " closed_form=" + fmt(dc.lipschitz));
  }

  {  // mass conservation and the invariant region on an adversarial run
    const Grid g = o.quick ? Grid(16, 16) : Grid(32, 32);
    RunConfig cfg{p, g, 1e-3, o.quick ? 0.2 : 0.5};
    const Field f = sample(g, [&](double x, double y) {
      return dc.u_bound * (x < 0.5 ? 1.0 : x * y);
    });
    const Field gv = sample(g, [&](double x, double y) {
      return 0.999 * dc.v_bound * (y < 0.5 ? 1.0 : (1.0 - x) * y);
    });
    const RunResult rr = run(cfg, f, gv);
    double drift = 0.0, min_u = 1e300, max_u = -1e300, min_v = 1e300, max_v = -1e300;
    for (size_t m = 0; m < rr.series.t.size(); ++m) {
      drift = std::max(drift, std::abs(rr.series.mass[m] - rr.series.mass.front()));
      min_u = std::min(min_u, rr.series.min_u[m]);
      max_u = std::max(max_u, rr.series.max_u[m]);
      min_v = std::min(min_v, rr.series.min_v[m]);
      max_v = std::max(max_v, rr.series.max_v[m]);
    }
    const bool ok = drift < 1e-8 && min_u >= -1e-8 && max_u <= dc.u_bound + 1e-8 &&
                    min_v >= -1e-8 && max_v <= dc.v_bound + 1e-8;
    log.report("evolve-mass-invariant", ok,
               "mass_drift=" + fmt(drift) + " u=[" + fmt(min_u) + "," + fmt(max_u) + "] v=[" +
                   fmt(min_v) + "," + fmt(max_v) + "]");
  }

  {  // constant-data run against the homogeneous reference
    const Grid g(8, 8);
    RunConfig cfg{p, g, 1e-4, o.quick ? 0.5 : 1.0};
    const RunResult rr = run(cfg, constant_field(g, 0.6), constant_field(g, 0.4));
    const auto [ur, vr] = homogeneous_ode_reference(0.6, 0.4, p, cfg.t_end, 1e-5);
    const double eu = std::abs(rr.final_state.u.values[0] - ur);
    const double ev = std::abs(rr.final_state.v.values[0] - vr);
    log.report("evolve-vs-ode", eu < 1e-5 && ev < 1e-5,
               "err_u=" + fmt(eu) + " err_v=" + fmt(ev) + " budget=1e-5");
  }

  {  // small iteration run: certificates under the envelope, iterates boxed
    const Grid g = o.quick ? Grid(8, 8) : Grid(16, 16);
    RunConfig cfg{p, g, 2e-3, 0.25};
    PicardOptions opt;
    opt.tol = 1e-8;
    bool ok = true;
    std::string detail;
    try {
      const PicardResult res = picard_solve(cfg, constant_field(g, 0.6), constant_field(g, 0.4), opt);
      ok = res.converged;
      for (const auto& cert : res.certificates) {
        ok = ok && cert.within_bound && cert.u_norms.front() == 0.0 && cert.v_norms.front() == 0.0;
      }
      for (const auto& r : res.iterate_ranges) {
        ok = ok && r.min_u >= -1e-8 && r.max_u <= dc.u_bound + 1e-8 && r.min_v >= -1e-8 &&
             r.max_v <= dc.v_bound + 1e-8;
      }
      detail = "iterations=" + std::to_string(res.iterations);
    } catch (const Error& e) {
      ok = false;
      detail = e.what();
    }
    log.report("picard-certificates", ok, detail);
  }

  const int total = static_cast<int>(log.lines.size());
  std::cout << "verify: " << (total - log.failed) << "/" << total << " checks passed\n";
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    std::ofstream os(fs::path(o.out) / "verify_report.txt");
    for (const auto& line : log.lines) os << line << '\n';
    os << "verify: " << (total - log.failed) << "/" << total << " checks passed\n";
  }
  return log.failed == 0 ? kExitOk : kExitInternal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"toolkit for a degenerate reaction-diffusion model of surface binding kinetics"};
  app.require_subcommand(1);

  StationaryOpts st;
  auto* st_cmd = app.add_subcommand("stationary", "admissible equilibrium of the bound density");
  add_param_flags(st_cmd, st);
  st_cmd->add_option("--sweep-eps", st.sweep, "unbinding-rate sweep: a,b,c or lo:hi:count");
  st_cmd->add_option("--out", st.out, "output directory (optional)");

  EvolveOpts ev;
  auto* ev_cmd = app.add_subcommand("evolve", "integrate the coupled system");
  add_param_flags(ev_cmd, ev);
  ev_cmd->add_option("--grid", ev.grid, "cells per axis, NXxNY");
  ev_cmd->add_option("--dt", ev.dt, "time step (initial step when ramping)");
  ev_cmd->add_option("--dt-max", ev.dt_max, "cap for the geometric step ramp (0 = fixed step)");
  ev_cmd->add_option("--dt-growth", ev.dt_growth, "per-step ramp factor");
  ev_cmd->add_option("--T", ev.t_end, "time horizon");
  ev_cmd->add_option("--scheme-v", ev.scheme, "riccati-exact | explicit-euler");
  ev_cmd->add_option("--init", ev.init, "reference | stationary | constant:u,v");
  ev_cmd->add_option("--threshold", ev.threshold,
                     "stop once all three equilibrium errors drop below this");
  ev_cmd->add_option("--snapshot-every", ev.snapshot_every, "steps between field snapshots");
  ev_cmd->add_option("--cg-tol", ev.cg_tol, "relative residual of the linear solves");
  ev_cmd->add_option("--preset", ev.preset, "reference: the convergence experiment defaults");
  ev_cmd->add_option("--out", ev.out, "output directory")->required();

  PicardOpts pc;
  auto* pc_cmd = app.add_subcommand("picard", "successive-approximation certificates");
  add_param_flags(pc_cmd, pc);
  pc_cmd->add_option("--grid", pc.grid, "cells per axis, NXxNY");
  pc_cmd->add_option("--dt", pc.dt, "time step");
  pc_cmd->add_option("--T", pc.t_end, "time horizon");
  pc_cmd->add_option("--init", pc.init, "stationary | constant:u,v");
  pc_cmd->add_option("--tol", pc.tol, "stop when sup-in-time increments fall below tol^2");
  pc_cmd->add_option("--n-max", pc.n_max, "iteration cap");
  pc_cmd->add_option("--stride", pc.stride, "certificate sampling stride");
  pc_cmd->add_option("--cg-tol", pc.cg_tol, "relative residual of the linear solves");
  pc_cmd->add_option("--out", pc.out, "output directory")->required();

  VerifyOpts vf;
  auto* vf_cmd = app.add_subcommand("verify", "cross-module invariant suite");
  vf_cmd->add_flag("--quick", vf.quick, "reduced sizes, finishes in seconds");
  vf_cmd->add_flag("--perturb-laplacian", vf.perturb_laplacian,
                   "negative control: inject a stencil bug and expect a failure");
  vf_cmd->add_option("--out", vf.out, "directory for verify_report.txt (optional)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (st_cmd->parsed()) return cmd_stationary(st);
    if (ev_cmd->parsed()) {
      if (!ev.preset.empty()) {
        if (ev.preset != "reference") throw Error("unknown --preset: " + ev.preset);
        apply_reference_preset(ev_cmd, ev);
      }
      return cmd_evolve(ev);
    }
    if (pc_cmd->parsed()) return cmd_picard(pc);
    if (vf_cmd->parsed()) return cmd_verify(vf);
  } catch (const HypothesisViolated& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitHypothesis;
  } catch (const NoConvergence& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNoConvergence;
  } catch (const LinearSolveDiverged& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const NonFiniteState& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
