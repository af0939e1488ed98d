#include "kvdelay/cli.hpp"

#include <future>
#include <optional>

#include <CLI11.hpp>

#include "kvdelay/analysis.hpp"
#include "kvdelay/io.hpp"
#include "kvdelay/spectral.hpp"
#include "kvdelay/timestepper.hpp"

namespace kvdelay {

namespace {

using nlohmann::json;

struct Resolution {
  std::size_t n = 200;
  std::size_t n_rho = 32;
  std::optional<double> dt;
  std::optional<double> T;
};

struct SweepRange {
  std::optional<double> lmin, lmax;
  std::size_t points = 40;
  bool pointwise = false;
  bool unweighted = false;
  std::size_t oracle = 0;
};

class OutputDir {
 public:
  explicit OutputDir(std::string dir) : dir_(std::move(dir)) {}
  void write(const std::string& name, const std::string& text) {
    write_file_atomic(path(name), text);
    written_.push_back(name);
  }
  void write_matrix(const std::string& name, const SparseMatrix& m) {
    write_matrix_market(path(name), m);
    written_.push_back(name);
  }
  std::string path(const std::string& name) const { return dir_ + "/" + name; }
  void manifest(const WaveConfig& cfg, const Resolution& res, double dt, double T) {
    written_.push_back("manifest.json");
    json m = {{"config_hash", config_hash(cfg)},
              {"resolution", {{"n_elements", res.n}, {"n_rho", res.n_rho}, {"dt", dt}, {"T", T}}},
              {"outputs", written_},
              {"tool_version", kToolVersion}};
    write_file_atomic(path("manifest.json"), json_text(m));
  }

 private:
  std::string dir_;
  std::vector<std::string> written_;
};

double resolved_T(const WaveConfig& cfg, const Resolution& r) { return r.T.value_or(20.0 * cfg.tau); }

double resolved_dt(const WaveConfig& cfg, const Mesh& mesh, const Resolution& r) {
  if (r.dt) {
    if (!(*r.dt > 0)) throw Error("--dt must be > 0");
    return snap_step(cfg.tau, *r.dt);
  }
  return default_step(cfg, mesh);
}

GeneratorMatrix generator_for(const WaveConfig& cfg, const Resolution& r) {
  GeneratorOptions g;
  g.n_rho = r.n_rho;
  return assemble_generator(cfg, build_mesh(cfg, r.n), g);
}

ResolventSweep run_sweep(const GeneratorMatrix& gen, const SweepRange& s, const SpectrumReport* spec,
                         std::ostream& err) {
  const double lmin = s.lmin.value_or(5.0);
  const double lmax = s.lmax.value_or(gen.lambda_cut);
  SweepOptions opt;
  opt.norm = s.unweighted ? NormKind::Unweighted : NormKind::EnergyWeighted;
  opt.probe = s.pointwise ? SweepProbe::Pointwise : SweepProbe::PeakEnvelope;
  opt.spectrum = spec;
  ResolventSweep sw = resolvent_sweep(gen, lmin, lmax, s.points, opt);
  if (sw.beyond_cutoff)
    err << "warning: lambda_max " << format_double(lmax) << " exceeds the resolution cutoff "
        << format_double(gen.lambda_cut) << "\n";
  return sw;
}

json oracle_checks(const GeneratorMatrix& gen, const ResolventSweep& sw, std::size_t count, NormKind kind) {
  json rows = json::array();
  if (count == 0) return rows;
  const ResolventEvaluator ev(gen, kind);
  const std::uint64_t seed = seed_from_hash(gen.config_hash);
  const auto step = std::max<std::size_t>(1, sw.probes.size() / count);
  for (std::size_t i = 0; i < sw.probes.size() && rows.size() < count; i += step) {
    const double l = sw.probes[i];
    rows.push_back({{"lambda", l}, {"svd", ev.norm(l)}, {"power_iteration", estimate_resolvent_norm(ev, l, seed)}});
  }
  return rows;
}

int cmd_check(const std::string& path, std::ostream& out) {
  const WaveConfig cfg = load_config(path);
  validate_config(cfg);
  const HypothesisReport r = check_hypotheses(cfg);
  json j = to_json(r);
  j["hypothesis"] = has_boundary_delay(cfg.scenario) ? "H" : "H1";
  j["scenario"] = std::string(to_string(cfg.scenario));
  out << j.dump() << "\n";
  return r.holds ? 0 : 2;
}

int cmd_simulate(const std::string& path, Resolution res, const std::string& dir, bool rho_grid) {
  const WaveConfig cfg = load_config(path);
  validate_config(cfg);
  const Mesh mesh = build_mesh(cfg, res.n);
  const SemiDiscreteSystem sys = assemble(cfg, mesh);
  const double dt = resolved_dt(cfg, mesh, res), T = resolved_T(cfg, res);
  SimulationOptions opt;
  opt.path = rho_grid ? DelayPath::RhoGrid : DelayPath::HistoryBuffer;
  opt.n_rho = res.n_rho;
  const EnergySeries s = simulate(sys, dt, T, opt);
  OutputDir out(dir);
  out.write("energy.csv", energy_csv(s));
  out.manifest(cfg, res, dt, T);
  return 0;
}

int cmd_spectrum(const std::string& path, Resolution res, const std::string& dir) {
  const WaveConfig cfg = load_config(path);
  validate_config(cfg);
  const SpectrumReport r = spectrum(generator_for(cfg, res));
  OutputDir out(dir);
  out.write("spectrum.csv", spectrum_csv(r));
  out.write("spectrum.json", json_text(to_json(r)));
  out.manifest(cfg, res, 0.0, 0.0);
  return 0;
}

int cmd_sweep(const std::string& path, Resolution res, const SweepRange& range, const std::string& dir,
              std::ostream& err) {
  const WaveConfig cfg = load_config(path);
  validate_config(cfg);
  const GeneratorMatrix gen = generator_for(cfg, res);
  const ResolventSweep sw = run_sweep(gen, range, nullptr, err);
  json j = to_json(sw);
  if (range.oracle > 0)
    j["oracle"] = oracle_checks(gen, sw, range.oracle, range.unweighted ? NormKind::Unweighted : NormKind::EnergyWeighted);
  OutputDir out(dir);
  out.write("sweep.csv", sweep_csv(sw));
  out.write("sweep.json", json_text(j));
  out.manifest(cfg, res, 0.0, 0.0);
  return 0;
}

int cmd_verdict(const std::string& path, Resolution res, const SweepRange& range, const std::string& dir,
                std::ostream& err) {
  const WaveConfig cfg = load_config(path);
  validate_config(cfg);
  const Mesh mesh = build_mesh(cfg, res.n);
  const double dt = resolved_dt(cfg, mesh, res), T = resolved_T(cfg, res);

  auto series_job = std::async(std::launch::async, [&] { return simulate(assemble(cfg, mesh), dt, T); });
  const GeneratorMatrix gen = generator_for(cfg, res);
  const SpectrumReport spec = spectrum(gen);
  const ResolventSweep sw = run_sweep(gen, range, &spec, err);
  const EnergySeries series = series_job.get();
  const Verdict v = scenario_verdict(cfg, series, sw, spec);

  OutputDir out(dir);
  out.write("energy.csv", energy_csv(series));
  out.write("spectrum.csv", spectrum_csv(spec));
  out.write("spectrum.json", json_text(to_json(spec)));
  out.write("sweep.csv", sweep_csv(sw));
  out.write("sweep.json", json_text(to_json(sw)));
  out.write("verdict.json", json_text(to_json(v)));
  out.manifest(cfg, res, dt, T);
  return 0;
}

int cmd_matrices(const std::string& path, Resolution res, const std::string& dir) {
  const WaveConfig cfg = load_config(path);
  validate_config(cfg);
  const SemiDiscreteSystem sys = assemble(cfg, build_mesh(cfg, res.n));
  GeneratorOptions g;
  g.n_rho = res.n_rho;
  const GeneratorMatrix gen = assemble_generator(sys, g);
  OutputDir out(dir);
  out.write_matrix("M.mtx", sys.M);
  out.write_matrix("K.mtx", sys.K);
  out.write_matrix("D.mtx", sys.D);
  out.write_matrix("A.mtx", SparseMatrix(gen.A.sparseView(1.0, 0.0)));
  out.manifest(cfg, res, 0.0, 0.0);
  return 0;
}

}  // namespace

int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kelvin-Voigt wave equations with delayed feedback: simulation and spectral checks", "kvdelay"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string config, dir = ".";
  Resolution res;
  SweepRange range;
  bool rho_grid = false;
  double dt = 0.0, T = 0.0;

  auto add_resolution = [&](CLI::App* c, bool time) {
    c->add_option("--n", res.n, "number of elements")->check(CLI::Range(std::size_t{4}, std::size_t{100000}));
    c->add_option("--n-rho", res.n_rho, "cells of the delay variable")->check(CLI::Range(std::size_t{2}, std::size_t{4096}));
    if (time) {
      c->add_option("--dt", dt, "time step (snapped to divide tau)");
      c->add_option("--T", T, "final time (default 20 tau)");
    }
    c->add_option("--out", dir, "output directory");
  };
  auto add_sweep = [&](CLI::App* c) {
    c->add_option("--lmin", range.lmin, "lowest frequency (default 5)");
    c->add_option("--lmax", range.lmax, "highest frequency (default: resolution cutoff)");
    c->add_option("--points", range.points, "grid points")->check(CLI::Range(std::size_t{2}, std::size_t{10000}));
    c->add_flag("--pointwise", range.pointwise, "evaluate at grid points instead of the peak envelope");
    c->add_flag("--unweighted", range.unweighted, "plain 2-norm instead of the energy norm");
  };

  auto* check = app.add_subcommand("check", "print the hypothesis report");
  check->add_option("config", config, "config JSON")->required();
  auto* sim = app.add_subcommand("simulate", "write energy.csv");
  sim->add_option("config", config, "config JSON")->required();
  add_resolution(sim, true);
  sim->add_flag("--rho-grid", rho_grid, "use the fully implicit rho-grid delay path");
  auto* spec = app.add_subcommand("spectrum", "write spectrum.csv and spectrum.json");
  spec->add_option("config", config, "config JSON")->required();
  add_resolution(spec, false);
  auto* sweep = app.add_subcommand("sweep", "write sweep.csv and sweep.json");
  sweep->add_option("config", config, "config JSON")->required();
  add_resolution(sweep, false);
  add_sweep(sweep);
  sweep->add_option("--oracle", range.oracle, "cross-check this many probes by power iteration");
  auto* verdict = app.add_subcommand("verdict", "simulate, spectrum and sweep, then write verdict.json");
  verdict->add_option("config", config, "config JSON")->required();
  add_resolution(verdict, true);
  add_sweep(verdict);
  auto* mats = app.add_subcommand("matrices", "write M, K, D and A in Matrix Market format");
  mats->add_option("config", config, "config JSON")->required();
  add_resolution(mats, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << "\n";
    return 1;
  }
  if (dt != 0.0) res.dt = dt;
  if (T != 0.0) {
    if (!(T > 0)) {
      err << "error: --T must be > 0\n";
      return 1;
    }
    res.T = T;
  }

  try {
    if (check->parsed()) return cmd_check(config, out);
    if (sim->parsed()) return cmd_simulate(config, res, dir, rho_grid);
    if (spec->parsed()) return cmd_spectrum(config, res, dir);
    if (sweep->parsed()) return cmd_sweep(config, res, range, dir, err);
    if (verdict->parsed()) return cmd_verdict(config, res, range, dir, err);
    if (mats->parsed()) return cmd_matrices(config, res, dir);
  } catch (const ValidationError& e) {
    err << "error: invalid config: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"kvdelay"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_command(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace kvdelay
