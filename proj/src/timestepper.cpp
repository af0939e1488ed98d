#include "kvdelay/timestepper.hpp"

#include <algorithm>
#include <cmath>

#include "kvdelay/io.hpp"

namespace kvdelay {

namespace {

double condition_estimate(const Eigen::SimplicialLDLT<SparseMatrix>& f) {
  const Eigen::VectorXd d = f.vectorD().cwiseAbs();
  if (d.size() == 0) return 0.0;
  const double lo = d.minCoeff();
  return lo > 0 ? d.maxCoeff() / lo : std::numeric_limits<double>::infinity();
}

Eigen::VectorXd nodal(const SemiDiscreteSystem& sys, const SpatialProfile& p) {
  Eigen::VectorXd v(sys.n_dof());
  for (Index d = 0; d < sys.n_dof(); ++d)
    v[d] = evaluate(p, sys.mesh.nodes[sys.dofs.node_of_dof[static_cast<std::size_t>(d)]], sys.cfg.L);
  return v;
}

// `trace` is the delayed quantity of the current V and `eta1` the one at rho = 1,
// both measured by `metric`.
FluxRecord flux_terms(const SemiDiscreteSystem& sys, const Eigen::VectorXd& V, const Eigen::VectorXd& trace,
                      const Eigen::VectorXd& eta1, const SparseMatrix& metric) {
  const auto& c = sys.cfg;
  const double vdv = V.dot(sys.D * V);
  const double ad2 = std::abs(c.delta2);
  FluxRecord r;
  if (has_boundary_delay(c.scenario)) {
    const double vl = V[sys.boundary.dof];
    r.kv = -c.delta1 * vdv;
    if (!sys.delay.active()) {
      r.bnd_ut = -c.kappa3 * c.delta3 * vl * vl;
      r.young_bound = r.sum();
      return r;
    }
    const double e = eta1[0];
    r.bnd_ut = -(c.kappa3 * c.delta3 - 0.5) * vl * vl;
    r.bnd_eta = -0.5 * e * e;
    r.cross = -c.kappa3 * c.delta2 * e * vl;
    const auto h = check_hypothesis_H(c);
    const double p = h.p_interval_nonempty() ? 0.5 * (h.p_interval->first + h.p_interval->second) : 1.0;
    const double a = c.kappa3 * ad2;
    r.young_bound = r.kv - (c.kappa3 * c.delta3 - 0.5 - 0.5 * a * p) * vl * vl - (0.5 - 0.5 * a / p) * e * e;
    return r;
  }
  if (!sys.delay.active()) {
    r.kv = -c.delta1 * vdv;
    r.young_bound = r.sum();
    return r;
  }
  r.kv = (-c.delta1 + 0.5 * ad2) * vdv;
  r.bnd_eta = -0.5 * ad2 * eta1.dot(metric * eta1);
  r.cross = -c.delta2 * trace.dot(metric * eta1);
  r.young_bound = (-c.delta1 + ad2) * vdv;
  return r;
}

std::size_t step_count(double T, double dt) {
  const double q = T / dt;
  const double r = std::round(q);
  if (std::abs(q - r) <= 1e-9 * std::max(1.0, q)) return static_cast<std::size_t>(std::max(1.0, r));
  return static_cast<std::size_t>(std::ceil(q));
}

void record(EnergySeries& s, double t, double ew, double ed, const FluxRecord& f) {
  s.times.push_back(t);
  s.E_wave.push_back(ew);
  s.E_delay.push_back(ed);
  s.E.push_back(ew + ed);
  s.flux.push_back(f);
}

}  // namespace

double snap_step(double tau, double dt) {
  if (!(dt > 0) || !(tau > 0)) throw Error("dt and tau must be > 0");
  const double m = std::max(1.0, std::ceil(tau / dt - 1e-9));
  return tau / m;
}

double default_step(const WaveConfig& cfg, const Mesh& mesh) {
  const double hmin = *std::min_element(mesh.element_sizes.begin(), mesh.element_sizes.end());
  return snap_step(cfg.tau, std::min(cfg.tau / 32.0, hmin / std::sqrt(cfg.kappa_max())));
}

MidpointStepper::MidpointStepper(const SemiDiscreteSystem& sys, double dt) : sys_(&sys), dt_(dt) {
  if (dt == 0 || !std::isfinite(dt)) throw Error("dt must be finite and nonzero");
  C_ = sys.damping();
  const SparseMatrix S = sys.M + (0.5 * dt) * C_ + (0.25 * dt * dt) * sys.K;
  rhs_ = sys.M - (0.5 * dt) * C_ - (0.25 * dt * dt) * sys.K;
  factor_.compute(S);
  if (factor_.info() != Eigen::Success || !(condition_estimate(factor_) < 1e15))
    throw StepError("singular step matrix", 0.0, condition_estimate(factor_));
}

void MidpointStepper::advance(SimState& s) const {
  const auto& sys = *sys_;
  Eigen::VectorXd b = rhs_ * s.V - dt_ * (sys.K * s.U);
  if (sys.delay.active()) {
    if (std::abs(dt_ - s.line.stride()) > 1e-12 * s.line.stride())
      throw Error("step size does not match the history stride");
    b -= dt_ * sys.delay_force(delayed_value(s.line, s.line.window() - 0.5 * dt_));
  }
  Eigen::VectorXd Vn = factor_.solve(b);
  if (!Vn.allFinite()) throw StepError("step produced non-finite values", s.t, condition_estimate(factor_));
  s.U += (0.5 * dt_) * (s.V + Vn);
  s.V = std::move(Vn);
  s.t += dt_;
  if (sys.delay.active()) s.line.push(sys.delay_trace(s.V));
}

SimState step(const SemiDiscreteSystem& sys, const SimState& state, double dt) {
  SimState next = state;
  MidpointStepper(sys, dt).advance(next);
  return next;
}

SimState initial_state(const SemiDiscreteSystem& sys, double dt) {
  SimState s;
  s.U = nodal(sys, sys.cfg.initial.displacement);
  s.V = nodal(sys, sys.cfg.initial.velocity);
  if (sys.delay.active()) {
    s.line = init_history(sys.cfg, buffer_shape(sys, dt));
    // The lag-0 slot is the present: the initial velocity, not f0(0).
    s.line.set_newest(sys.delay_trace(s.V));
  }
  return s;
}

FluxRecord dissipation_rate(const SemiDiscreteSystem& sys, const SimState& state) {
  if (!sys.delay.active()) return flux_terms(sys, state.V, {}, {}, {});
  return flux_terms(sys, state.V, sys.delay_trace(state.V), state.line.at_lag_steps(state.line.depth()),
                    sys.history_metric());
}

double wave_energy(const SemiDiscreteSystem& sys, const Eigen::VectorXd& U, const Eigen::VectorXd& V) {
  return 0.5 * U.dot(sys.K * U) + 0.5 * V.dot(sys.M * V);
}

double delay_energy(const SemiDiscreteSystem& sys, const SimState& state) {
  if (!sys.delay.active()) return 0.0;
  return delay_energy(state.line, sys.cfg, sys.history_metric());
}

AugmentedStepper::AugmentedStepper(const AugmentedSystem& aug, double dt) {
  const SparseMatrix lhs = aug.E - (0.5 * dt) * aug.F;
  rhs_ = aug.E + (0.5 * dt) * aug.F;
  lu_.analyzePattern(lhs);
  lu_.factorize(lhs);
  if (lu_.info() != Eigen::Success) throw StepError("singular augmented step matrix", 0.0, 0.0);
}

void AugmentedStepper::advance(Eigen::VectorXd& X) const {
  X = lu_.solve(rhs_ * X).eval();
}

EnergySeries simulate(const SemiDiscreteSystem& sys, double dt_requested, double T, const SimulationOptions& opt) {
  if (!(T > 0)) throw Error("T must be > 0");
  const double dt = snap_step(sys.cfg.tau, dt_requested);
  const std::size_t n_steps = step_count(T, dt);
  const std::size_t every = std::max<std::size_t>(1, opt.decimation);
  EnergySeries out;
  out.config_hash = config_hash(sys.cfg);
  auto keep = [&](std::size_t k) { return k % every == 0 || k == n_steps; };

  if (opt.path == DelayPath::HistoryBuffer) {
    SimState s = initial_state(sys, dt);
    const MidpointStepper stepper(sys, dt);
    const SparseMatrix metric = sys.history_metric();
    auto sample = [&] {
      const double ed = sys.delay.active() ? delay_energy(s.line, sys.cfg, metric, opt.quadrature) : 0.0;
      record(out, s.t, wave_energy(sys, s.U, s.V), ed, dissipation_rate(sys, s));
    };
    sample();
    for (std::size_t k = 1; k <= n_steps; ++k) {
      try {
        stepper.advance(s);
      } catch (const StepError& e) {
        throw StepError(std::string(e.what()) + " at t=" + format_double(s.t), s.t, e.condition_estimate());
      }
      s.t = static_cast<double>(k) * dt;
      if (keep(k)) sample();
    }
    return out;
  }

  GeneratorOptions gopt;
  gopt.n_rho = opt.n_rho;
  gopt.quadrature = opt.quadrature;
  gopt.max_dim = std::numeric_limits<Index>::max();
  const AugmentedSystem aug = assemble_augmented(sys, gopt);
  const auto& lay = aug.layout;
  RhoGrid line = init_rho_grid(sys, opt.n_rho);
  Eigen::VectorXd X(lay.size());
  X.segment(lay.u_begin(), lay.n_dof) = nodal(sys, sys.cfg.initial.displacement);
  X.segment(lay.v_begin(), lay.n_dof) = nodal(sys, sys.cfg.initial.velocity);
  if (lay.n_eta() > 0) X.segment(lay.eta_begin(), lay.n_eta()) = line.values;
  const SparseMatrix metric = rho_grid_metric(sys);
  const AugmentedStepper stepper(aug, dt);

  auto sample = [&](double t) {
    const Eigen::VectorXd U = X.segment(lay.u_begin(), lay.n_dof);
    const Eigen::VectorXd V = X.segment(lay.v_begin(), lay.n_dof);
    if (!sys.delay.active()) {
      record(out, t, wave_energy(sys, U, V), 0.0, flux_terms(sys, V, {}, {}, {}));
      return;
    }
    line.values = X.segment(lay.eta_begin(), lay.n_eta());
    const bool boundary = sys.delay.kind == DelayCoupling::Kind::BoundaryTraceAtL;
    line.synchronize(boundary ? Eigen::VectorXd(sys.delay_trace(V)) : Eigen::VectorXd(sys.delay.gradient * V));
    const Eigen::VectorXd eta1 = line.at(line.n_rho);
    record(out, t, wave_energy(sys, U, V), delay_energy(line, sys.cfg, metric, opt.quadrature),
           flux_terms(sys, V, line.inflow, eta1, metric));
  };
  sample(0.0);
  for (std::size_t k = 1; k <= n_steps; ++k) {
    stepper.advance(X);
    if (!X.allFinite())
      throw StepError("augmented step produced non-finite values at t=" + format_double(static_cast<double>(k) * dt),
                      static_cast<double>(k) * dt, 0.0);
    if (keep(k)) sample(static_cast<double>(k) * dt);
  }
  return out;
}

EnergySeries simulate(const WaveConfig& cfg, std::size_t n_elements, double dt, double T,
                      const SimulationOptions& opt) {
  const Mesh mesh = build_mesh(cfg, n_elements);
  const SemiDiscreteSystem sys = assemble(cfg, mesh, opt.mass);
  return simulate(sys, dt, T, opt);
}

std::string energy_csv(const EnergySeries& s) {
  std::vector<std::vector<double>> rows;
  rows.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& f = s.flux[i];
    rows.push_back({s.times[i], s.E[i], s.E_wave[i], s.E_delay[i], f.kv, f.bnd_ut, f.bnd_eta, f.cross});
  }
  return csv_text({"t", "E", "E_wave", "E_delay", "flux_kv", "flux_bnd_ut", "flux_bnd_eta", "flux_cross"}, rows);
}

}  // namespace kvdelay
