#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "kvdelay/delay_line.hpp"
#include "kvdelay/mesh.hpp"

namespace kvdelay {

struct SimState {
  double t = 0.0;
  Eigen::VectorXd U, V;
  HistoryBuffer line;  // empty (depth 0) when there is no delayed feedback
};

// Terms of the energy dissipation identity at one state; sum() approximates dE/dt.
//   boundary delay: kv = -delta1 V'DV, bnd_ut = -(kappa3 delta3 - 1/2) V_L^2,
//                   bnd_eta = -eta1^2 / 2, cross = -kappa3 delta2 eta1 V_L
//   interior delay: kv = (-delta1 + |delta2|/2) V'DV, bnd_ut = 0,
//                   bnd_eta = -(|delta2|/2) |eta1|_D^2, cross = -delta2 <V, eta1>_D
// young_bound replaces the cross term by its Young estimate: at the midpoint p of
// the admissible p interval (p = 1 if it is empty) at L, with unit weights inside.
struct FluxRecord {
  double kv = 0.0;
  double bnd_ut = 0.0;
  double bnd_eta = 0.0;
  double cross = 0.0;
  double young_bound = 0.0;

  double sum() const { return kv + bnd_ut + bnd_eta + cross; }
};

struct EnergySeries {
  std::vector<double> times, E, E_wave, E_delay;
  std::vector<FluxRecord> flux;
  std::string config_hash;

  std::size_t size() const { return times.size(); }
};

enum class DelayPath { HistoryBuffer, RhoGrid };

struct SimulationOptions {
  DelayPath path = DelayPath::HistoryBuffer;
  std::size_t n_rho = 32;  // RhoGrid path only
  RhoQuadrature quadrature = RhoQuadrature::Matched;
  MassKind mass = MassKind::Consistent;
  std::size_t decimation = 1;  // record every k-th step (the last step is always kept)
};

// tau / ceil(tau / dt): the largest step not above dt that divides tau.
double snap_step(double tau, double dt);
// min(tau/32, h_min / sqrt(kappa_max)), snapped.
double default_step(const WaveConfig& cfg, const Mesh& mesh);

// Implicit midpoint on (U, V) with the delayed force taken explicitly from the
// history at lag tau - dt/2. The step matrix M + dt/2 C + dt^2/4 K is factorized once.
class MidpointStepper {
 public:
  MidpointStepper(const SemiDiscreteSystem& sys, double dt);

  double dt() const { return dt_; }
  void advance(SimState& state) const;

 private:
  const SemiDiscreteSystem* sys_;
  double dt_;
  SparseMatrix C_;
  SparseMatrix rhs_;
  Eigen::SimplicialLDLT<SparseMatrix> factor_;
};

SimState step(const SemiDiscreteSystem& sys, const SimState& state, double dt);

// Initial state from the config's selectors; the buffer stride is dt.
SimState initial_state(const SemiDiscreteSystem& sys, double dt);

FluxRecord dissipation_rate(const SemiDiscreteSystem& sys, const SimState& state);

double wave_energy(const SemiDiscreteSystem& sys, const Eigen::VectorXd& U, const Eigen::VectorXd& V);
double delay_energy(const SemiDiscreteSystem& sys, const SimState& state);

// Fully implicit midpoint on the augmented descriptor system; everything including
// the transport rows is implicit, so the P-energy is non-increasing to roundoff.
class AugmentedStepper {
 public:
  AugmentedStepper(const AugmentedSystem& aug, double dt);
  void advance(Eigen::VectorXd& X) const;

 private:
  SparseMatrix rhs_;
  Eigen::SparseLU<SparseMatrix> lu_;
};

EnergySeries simulate(const WaveConfig& cfg, std::size_t n_elements, double dt, double T,
                      const SimulationOptions& opt = {});
EnergySeries simulate(const SemiDiscreteSystem& sys, double dt, double T, const SimulationOptions& opt = {});

// Header t,E,E_wave,E_delay,flux_kv,flux_bnd_ut,flux_bnd_eta,flux_cross.
std::string energy_csv(const EnergySeries& s);

}  // namespace kvdelay
