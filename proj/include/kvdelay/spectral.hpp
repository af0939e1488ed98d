#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "kvdelay/mesh.hpp"

namespace kvdelay {

struct SpectrumReport {
  std::vector<std::complex<double>> eigenvalues;
  double spectral_abscissa = 0.0;
  std::size_t n_unstable = 0;
  std::complex<double> closest_to_axis;
  // Max real part over eigenvalues with |Im| <= lambda_cut. Near-Nyquist modes of
  // the P1 mesh sit close to the axis regardless of the physics; this excludes them.
  double resolved_abscissa = 0.0;
  double lambda_cut = 0.0;
  std::string config_hash;
};

SpectrumReport spectrum(const GeneratorMatrix& gen);

enum class NormKind { EnergyWeighted, Unweighted };

// Holds the operator whose 2-norm resolvent equals the requested one: L^T A L^{-T}
// with P = L L^T for the energy norm, A itself otherwise.
class ResolventEvaluator {
 public:
  explicit ResolventEvaluator(const GeneratorMatrix& gen, NormKind kind = NormKind::EnergyWeighted);
  ResolventEvaluator(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P, NormKind kind = NormKind::EnergyWeighted);

  const Eigen::MatrixXd& op() const { return op_; }
  double op_norm() const { return op_norm_; }
  // Smallest singular value of i*lambda - op.
  double sigma_min(double lambda) const;
  // 1 / sigma_min; throws SingularResolvent below 1e-14 * ||op||.
  double norm(double lambda) const;
  Eigen::MatrixXcd shifted(double lambda) const;

 private:
  Eigen::MatrixXd op_;
  double op_norm_ = 0.0;
};

double resolvent_norm(const GeneratorMatrix& gen, double lambda, NormKind kind = NormKind::EnergyWeighted);

// Independent check of norm(lambda): block power iteration on (i lambda - op)^{-1}
// through an LU factorization, started from a seeded random block.
double estimate_resolvent_norm(const ResolventEvaluator& ev, double lambda, std::uint64_t seed,
                               int block = 6, int max_iter = 400, double tol = 1e-12);

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
};

// Least squares of log(norm) on log(lambda) over the upper half of the grid.
ExponentFit fit_growth_exponent(const std::vector<double>& lambdas, const std::vector<double>& norms);

enum class SweepProbe {
  // Each grid value is the resolvent norm at the frequency of the least damped
  // eigenvalue in [lambda/w, lambda*w] (the grid point itself if the window holds
  // none). Tracks the resonance peaks.
  PeakEnvelope,
  // Norm at the grid point.
  Pointwise,
};

struct SweepOptions {
  NormKind norm = NormKind::EnergyWeighted;
  SweepProbe probe = SweepProbe::PeakEnvelope;
  double window_factor = 1.4142135623730951;
  unsigned workers = 0;  // 0: hardware concurrency
  const SpectrumReport* spectrum = nullptr;  // reused by PeakEnvelope when given
};

struct ResolventSweep {
  std::vector<double> lambdas;
  std::vector<double> norms;
  std::vector<double> probes;  // frequency actually evaluated for each grid point
  ExponentFit exponent_fit;
  double lambda_cut = 0.0;
  bool beyond_cutoff = false;  // lambda_max > lambda_cut
  SweepProbe probe = SweepProbe::PeakEnvelope;
  std::string config_hash;
};

std::vector<double> log_grid(double lo, double hi, std::size_t n);

ResolventSweep resolvent_sweep(const GeneratorMatrix& gen, double lambda_min, double lambda_max,
                               std::size_t n_points, const SweepOptions& opt = {});

// Test hook: a sweep record built from given norms.
ResolventSweep sweep_from_norms(const std::vector<double>& lambdas, const std::vector<double>& norms);

struct AxisClearance {
  double value = 0.0;  // min over the grid of sigma_min(i lambda - A)
  double at_lambda = 0.0;
  bool singular = false;
};

AxisClearance axis_clearance(const GeneratorMatrix& gen, const std::vector<double>& grid);

std::uint64_t seed_from_hash(const std::string& hash);

nlohmann::json to_json(const SpectrumReport& r);
nlohmann::json to_json(const ResolventSweep& s);
std::string spectrum_csv(const SpectrumReport& r);
std::string sweep_csv(const ResolventSweep& s);

}  // namespace kvdelay
