#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "kvdelay/timestepper.hpp"
#include "support.hpp"

namespace kvdelay {
namespace {

using std::numbers::pi;

WaveConfig neumann_conservative() {
  WaveConfig c = testing::boundary_config(0.25, 0.5);
  c.delta1 = c.delta2 = c.delta3 = 0.0;
  c.kappa2 = 2.0;
  c.initial.displacement = SineMode{0.5, 1.0};
  c.initial.velocity = Bump{0.1, 0.6, 0.5};
  return c;
}

WaveConfig smooth_boundary_delay() {
  WaveConfig c = testing::boundary_config(0.25, 0.75);
  c.delta1 = 0.5;
  c.delta2 = 0.5;
  c.delta3 = 1.0;
  c.initial.displacement = SineMode{0.5, 1.0};  // U_x(L) = 0 matches zero velocity and history
  return c;
}

TEST(Step, ConservativeLimitKeepsEnergy) {
  const WaveConfig c = neumann_conservative();
  const SemiDiscreteSystem sys = assemble(c, build_mesh(c, 64));
  const double dt = 1.0 / 128;
  SimState s = initial_state(sys, dt);
  const double e0 = wave_energy(sys, s.U, s.V);
  const MidpointStepper stepper(sys, dt);
  for (int i = 0; i < 1000; ++i) stepper.advance(s);
  EXPECT_NEAR(wave_energy(sys, s.U, s.V), e0, 1e-10 * e0);
  EXPECT_NEAR(s.t, 1000 * dt, 1e-9);
}

TEST(Step, ZeroStateStaysZero) {
  WaveConfig c = smooth_boundary_delay();
  c.initial.displacement = ZeroProfile{};
  const SemiDiscreteSystem sys = assemble(c, build_mesh(c, 32));
  const SimState s0 = initial_state(sys, 1.0 / 16);
  const SimState s1 = step(sys, s0, 1.0 / 16);
  EXPECT_EQ(s1.U.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(s1.V.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(s1.t, 1.0 / 16);
}

TEST(Step, NewestSnapshotIsCurrentTrace) {
  WaveConfig c = testing::interior_config(0.3, 0.6);
  c.initial.velocity = Bump{0.2, 0.7, 1.0};
  const SemiDiscreteSystem sys = assemble(c, build_mesh(c, 30));
  SimState s = initial_state(sys, 0.125);
  for (int i = 0; i < 5; ++i) {
    s = step(sys, s, 0.125);
    EXPECT_TRUE((s.line.at_lag_steps(0).array() == sys.delay_trace(s.V).array()).all());
  }
}

TEST(Step, RejectsMismatchedStride) {
  const WaveConfig c = smooth_boundary_delay();
  const SemiDiscreteSystem sys = assemble(c, build_mesh(c, 16));
  const SimState s = initial_state(sys, 0.125);
  EXPECT_THROW(step(sys, s, 0.25), Error);
}

TEST(Step, TimeReversal) {
  const WaveConfig c = neumann_conservative();
  const SemiDiscreteSystem sys = assemble(c, build_mesh(c, 48));
  const double dt = 0.01;
  SimState s = initial_state(sys, dt);
  const SimState s0 = s;
  const MidpointStepper fwd(sys, dt), back(sys, -dt);
  for (int i = 0; i < 300; ++i) fwd.advance(s);
  for (int i = 0; i < 300; ++i) back.advance(s);
  const double scale = std::max(s0.U.norm(), s0.V.norm());
  EXPECT_LE((s.U - s0.U).norm(), 1e-8 * scale);
  EXPECT_LE((s.V - s0.V).norm(), 1e-8 * scale);
}

TEST(Simulate, ZeroDataGivesZeroEnergy) {
  WaveConfig c = testing::interior_config();
  c.initial = InitialData{};
  const EnergySeries s = simulate(c, 20, 0.1, 2.0);
  for (double e : s.E) EXPECT_EQ(e, 0.0);
}

TEST(Simulate, EnergyIsAdditive) {
  WaveConfig c = smooth_boundary_delay();
  c.initial.history = SineHistory{0.3, 2.0, 0.0};
  for (auto path : {DelayPath::HistoryBuffer, DelayPath::RhoGrid}) {
    SimulationOptions o;
    o.path = path;
    o.n_rho = 16;
    const EnergySeries s = simulate(c, 24, 1.0 / 16, 3.0, o);
    ASSERT_EQ(s.size(), 49u);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s.E[i], s.E_wave[i] + s.E_delay[i]);
  }
}

TEST(Simulate, ConservativeSineModeIsConstant) {
  const WaveConfig c = testing::conservative_config(2.0);
  const EnergySeries s = simulate(c, 64, 1.0 / 128, 5.0);
  for (double e : s.E) EXPECT_NEAR(e, s.E.front(), 1e-10 * s.E.front());
}

TEST(Simulate, AdmissibleBoundaryDelayIsDissipative) {
  WaveConfig c = smooth_boundary_delay();
  c.initial.history = SineHistory{1.0, 3.0, 0.0};
  c.initial.velocity = Bump{0.5, 1.0, 1.0};
  const EnergySeries s = simulate(c, 64, 1.0 / 32, 20.0);
  for (std::size_t i = 1; i < s.size(); ++i) ASSERT_LE(s.E[i], s.E[i - 1] + 1e-9 * s.E[0]) << s.times[i];
  EXPECT_LT(s.E.back(), 0.5 * s.E.front());
}

TEST(Simulate, InteriorDelayDecaysAfterFirstWindow) {
  const WaveConfig c = load_config(testing::source_dir() + "/configs/fig3_admissible.json");
  const EnergySeries s = simulate(c, 100, c.tau / 32, 20.0 * c.tau);
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s.times[i - 1] >= c.tau) ASSERT_LT(s.E[i], s.E[i - 1]) << s.times[i];
  EXPECT_LT(s.E.back() / s.E.front(), 0.9);
}

TEST(Simulate, RhoGridPathMonotone) {
  WaveConfig c = smooth_boundary_delay();
  c.initial.history = SineHistory{1.0, 3.0, 0.0};
  SimulationOptions o;
  o.path = DelayPath::RhoGrid;
  o.n_rho = 16;
  const EnergySeries s = simulate(c, 48, 1.0 / 32, 20.0, o);
  for (std::size_t i = 1; i < s.size(); ++i) ASSERT_LE(s.E[i], s.E[i - 1] + 1e-12 * s.E[0]);
}

TEST(Simulate, Deterministic) {
  const WaveConfig c = smooth_boundary_delay();
  EXPECT_EQ(energy_csv(simulate(c, 32, 0.05, 2.0)), energy_csv(simulate(c, 32, 0.05, 2.0)));
}

TEST(Simulate, DecimationKeepsLastSample) {
  const WaveConfig c = smooth_boundary_delay();
  SimulationOptions o;
  o.decimation = 7;
  const EnergySeries s = simulate(c, 16, 0.125, 3.0, o);
  EXPECT_DOUBLE_EQ(s.times.back(), 3.0);
  EXPECT_DOUBLE_EQ(s.times[1], 7 * 0.125);
}

TEST(Simulate, StepIsSnappedToDivideTau) {
  EXPECT_DOUBLE_EQ(snap_step(1.0, 0.3), 0.25);
  EXPECT_DOUBLE_EQ(snap_step(1.0, 0.25), 0.25);
  EXPECT_DOUBLE_EQ(snap_step(2.0, 5.0), 2.0);
}

// With kappa = 2.25 the phase at T = 1 is 3 pi / 2, where the phase error enters at
// first order. At kappa = 1 the wave sits at a turning point and the error is O(h^4).
TEST(Simulate, ManufacturedStandingWaveConvergesAtSecondOrder) {
  const WaveConfig c = testing::conservative_config(1.0, 2.25);
  std::vector<double> err;
  for (std::size_t n : {16u, 32u, 64u, 128u}) {
    const SemiDiscreteSystem sys = assemble(c, build_mesh(c, n));
    const double dt = 1.0 / (2.0 * n);
    SimState s = initial_state(sys, dt);
    const MidpointStepper st(sys, dt);
    for (std::size_t k = 0; k < 2 * n; ++k) st.advance(s);
    Eigen::VectorXd e(sys.n_dof());
    for (Index d = 0; d < sys.n_dof(); ++d) {
      const double x = sys.mesh.nodes[sys.dofs.node_of_dof[static_cast<std::size_t>(d)]];
      e[d] = s.U[d] - std::sin(pi * x) * std::cos(1.5 * pi * s.t);
    }
    err.push_back(std::sqrt(e.dot(sys.M * e)));
  }
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double order = std::log2(err[i - 1] / err[i]);
    EXPECT_NEAR(order, 2.0, 0.3) << i;
  }
}

TEST(DissipationRate, NullCouplingGivesZeroTerms) {
  const WaveConfig c = neumann_conservative();
  const SemiDiscreteSystem sys = assemble(c, build_mesh(c, 16));
  const FluxRecord f = dissipation_rate(sys, initial_state(sys, 0.125));
  EXPECT_EQ(f.kv, 0.0);
  EXPECT_EQ(f.bnd_ut, 0.0);
  EXPECT_EQ(f.bnd_eta, 0.0);
  EXPECT_EQ(f.cross, 0.0);
}

TEST(DissipationRate, BoundaryTermsVanishAtRest) {
  WaveConfig c = smooth_boundary_delay();
  c.initial.velocity = Bump{0.2, 0.6, 1.0};  // zero at L
  const SemiDiscreteSystem sys = assemble(c, build_mesh(c, 20));
  const FluxRecord f = dissipation_rate(sys, initial_state(sys, 0.125));
  EXPECT_EQ(f.bnd_ut, 0.0);
  EXPECT_EQ(f.bnd_eta, 0.0);
  EXPECT_EQ(f.cross, 0.0);
  EXPECT_LT(f.kv, 0.0);
}

TEST(DissipationRate, YoungBoundDominatesAndIsNonpositive) {
  WaveConfig c = smooth_boundary_delay();
  c.initial.history = SineHistory{1.0, 3.0, 0.0};
  c.initial.velocity = Bump{0.5, 1.0, 1.0};
  const EnergySeries s = simulate(c, 32, 1.0 / 16, 6.0);
  for (const auto& f : s.flux) {
    EXPECT_GE(f.young_bound, f.sum() - 1e-12);
    EXPECT_LE(f.young_bound, 1e-14);
  }
  WaveConfig ci = testing::interior_config(0.3, 0.6);
  ci.initial.velocity = Bump{0.2, 0.7, 1.0};
  ci.initial.history = SineHistory{1.0, 2.0, 1.0};
  const EnergySeries si = simulate(ci, 32, 1.0 / 16, 6.0);
  for (const auto& f : si.flux) {
    EXPECT_GE(f.young_bound, f.sum() - 1e-12);
    EXPECT_LE(f.young_bound, 1e-14);
  }
}

// Centred differences of E against the flux sum at one time, for dt and dt/2. The
// coarse mesh and light damping keep every mode resolved by both steps; stiff modes
// under the midpoint rule alternate in sign and would mask the rate.
TEST(DissipationRate, MatchesEnergySlopeAtSecondOrder) {
  WaveConfig c = smooth_boundary_delay();
  c.delta1 = 0.02;
  const double t_star = 0.5;
  std::vector<double> gap;
  for (double dt : {1.0 / 256, 1.0 / 512}) {
    const EnergySeries s = simulate(c, 16, dt, 1.0);
    const auto i = static_cast<std::size_t>(std::lround(t_star / dt));
    const double fd = (s.E[i + 1] - s.E[i - 1]) / (2 * dt);
    gap.push_back(std::abs(s.flux[i].sum() - fd));
  }
  const double ratio = gap[0] / gap[1];
  EXPECT_GE(ratio, 3.4);
  EXPECT_LE(ratio, 4.6);
}

TEST(EnergyCsv, HeaderAndRows) {
  const std::string text = energy_csv(simulate(smooth_boundary_delay(), 8, 0.5, 1.0));
  EXPECT_EQ(text.substr(0, text.find('\n')), "t,E,E_wave,E_delay,flux_kv,flux_bnd_ut,flux_bnd_eta,flux_cross");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}

}  // namespace
}  // namespace kvdelay
