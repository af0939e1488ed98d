#include "kvdelay/spectral.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <map>
#include <random>
#include <thread>

#include "kvdelay/io.hpp"
#include "kvdelay/linalg.hpp"

namespace kvdelay {

namespace {

using cd = std::complex<double>;

template <typename F>
void parallel_for(std::size_t n, unsigned workers, F&& body) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) body(i);
  };
  if (workers <= 1) {
    run();
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
}

}  // namespace

SpectrumReport spectrum(const GeneratorMatrix& gen) {
  // Eigenvalues of the energy-similar operator: same spectrum, better conditioned.
  const ResolventEvaluator ev(gen, NormKind::EnergyWeighted);
  const Eigen::VectorXcd ev_values = linalg::eigenvalues(ev.op());
  SpectrumReport r;
  r.eigenvalues.assign(ev_values.data(), ev_values.data() + ev_values.size());
  std::sort(r.eigenvalues.begin(), r.eigenvalues.end(), [](cd a, cd b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() < b.imag();
  });
  r.lambda_cut = gen.lambda_cut;
  r.config_hash = gen.config_hash;
  if (r.eigenvalues.empty()) return r;
  r.closest_to_axis = r.eigenvalues.front();
  r.spectral_abscissa = r.closest_to_axis.real();
  r.n_unstable = static_cast<std::size_t>(
      std::count_if(r.eigenvalues.begin(), r.eigenvalues.end(), [](cd z) { return z.real() > 0; }));
  r.resolved_abscissa = r.spectral_abscissa;
  for (cd z : r.eigenvalues)
    if (std::abs(z.imag()) <= gen.lambda_cut) {
      r.resolved_abscissa = z.real();
      break;
    }
  return r;
}

ResolventEvaluator::ResolventEvaluator(const GeneratorMatrix& gen, NormKind kind)
    : ResolventEvaluator(gen.A, gen.P, kind) {}

ResolventEvaluator::ResolventEvaluator(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P, NormKind kind) {
  if (A.rows() != A.cols()) throw ShapeError("generator must be square");
  if (kind == NormKind::Unweighted) {
    op_ = A;
  } else {
    if (P.rows() != A.rows() || P.cols() != A.cols()) throw ShapeError("energy weight does not match the generator");
    const Eigen::LLT<Eigen::MatrixXd> llt(P);
    if (llt.info() != Eigen::Success) throw Error("energy weight is not positive definite");
    const Eigen::MatrixXd Lt_A = llt.matrixU() * A;
    op_ = llt.matrixL().solve(Lt_A.transpose()).transpose();
  }
  op_norm_ = op_.norm();
}

Eigen::MatrixXcd ResolventEvaluator::shifted(double lambda) const {
  Eigen::MatrixXcd B = -op_.cast<cd>();
  B.diagonal().array() += cd(0.0, lambda);
  return B;
}

double ResolventEvaluator::sigma_min(double lambda) const {
  const Eigen::VectorXd s = linalg::singular_values(shifted(lambda));
  return s.size() ? s[s.size() - 1] : 0.0;
}

double ResolventEvaluator::norm(double lambda) const {
  const double s = sigma_min(lambda);
  if (s < 1e-14 * op_norm_)
    throw SingularResolvent("i*lambda is numerically an eigenvalue at lambda=" + format_double(lambda), lambda);
  return 1.0 / s;
}

double resolvent_norm(const GeneratorMatrix& gen, double lambda, NormKind kind) {
  return ResolventEvaluator(gen, kind).norm(lambda);
}

double estimate_resolvent_norm(const ResolventEvaluator& ev, double lambda, std::uint64_t seed, int block,
                               int max_iter, double tol) {
  const Eigen::Index n = ev.op().rows();
  const Eigen::Index b = std::min<Eigen::Index>(block, n);
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(ev.shifted(lambda));
  std::uint64_t bits;
  std::memcpy(&bits, &lambda, sizeof bits);
  std::mt19937_64 rng(seed ^ (bits * 0x9e3779b97f4a7c15ULL));
  std::normal_distribution<double> normal;
  Eigen::MatrixXcd Q(n, b);
  for (Eigen::Index j = 0; j < b; ++j)
    for (Eigen::Index i = 0; i < n; ++i) Q(i, j) = cd(normal(rng), normal(rng));
  auto orth = [&](const Eigen::MatrixXcd& X) {
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(X);
    return Eigen::MatrixXcd(qr.householderQ() * Eigen::MatrixXcd::Identity(n, b));
  };
  Q = orth(Q);
  double estimate = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::MatrixXcd Y = lu.solve(Q);
    const double s = Eigen::JacobiSVD<Eigen::MatrixXcd>(Y).singularValues()[0];
    if (it > 1 && std::abs(s - estimate) <= tol * s) return s;
    estimate = s;
    Q = orth(lu.adjoint().solve(Y));
  }
  return estimate;
}

ExponentFit fit_growth_exponent(const std::vector<double>& lambdas, const std::vector<double>& norms) {
  if (lambdas.size() != norms.size()) throw ShapeError("lambda and norm lists differ in length");
  if (lambdas.size() < 2) throw Error("exponent fit needs at least two points");
  const std::size_t start = lambdas.size() / 2;
  const std::size_t count = lambdas.size() - start;
  if (count < 2) throw Error("exponent fit needs at least two points in the upper half");
  Eigen::MatrixXd X(static_cast<Eigen::Index>(count), 2);
  Eigen::VectorXd y(static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) {
    const double l = lambdas[start + i], v = norms[start + i];
    if (!(l > 0) || !(v > 0)) throw Error("exponent fit needs positive values");
    X(static_cast<Eigen::Index>(i), 0) = std::log(l);
    X(static_cast<Eigen::Index>(i), 1) = 1.0;
    y[static_cast<Eigen::Index>(i)] = std::log(v);
  }
  const Eigen::Vector2d c = X.colPivHouseholderQr().solve(y);
  ExponentFit f;
  f.slope = c[0];
  f.intercept = c[1];
  const double ss_res = (y - X * c).squaredNorm();
  const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
  f.r2 = ss_tot > 0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
  f.window_lo = lambdas[start];
  f.window_hi = lambdas.back();
  return f;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0) || !(hi > lo)) throw Error("grid needs 0 < lambda_min < lambda_max");
  if (n < 2) throw Error("grid needs at least two points");
  std::vector<double> g(n);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

ResolventSweep resolvent_sweep(const GeneratorMatrix& gen, double lambda_min, double lambda_max,
                               std::size_t n_points, const SweepOptions& opt) {
  ResolventSweep s;
  s.lambdas = log_grid(lambda_min, lambda_max, n_points);
  s.lambda_cut = gen.lambda_cut;
  s.beyond_cutoff = lambda_max > gen.lambda_cut;
  s.probe = opt.probe;
  s.config_hash = gen.config_hash;

  s.probes = s.lambdas;
  if (opt.probe == SweepProbe::PeakEnvelope) {
    SpectrumReport own;
    if (!opt.spectrum) own = spectrum(gen);
    const SpectrumReport& spec = opt.spectrum ? *opt.spectrum : own;
    if (spec.config_hash != gen.config_hash) throw InconsistentInputs("spectrum belongs to another config");
    for (std::size_t k = 0; k < s.lambdas.size(); ++k) {
      const double lo = s.lambdas[k] / opt.window_factor;
      const double hi = std::min(s.lambdas[k] * opt.window_factor, lambda_max);
      const cd* best = nullptr;
      for (const cd& z : spec.eigenvalues)
        if (z.imag() >= lo && z.imag() <= hi && (!best || z.real() > best->real())) best = &z;
      if (best) s.probes[k] = best->imag();
    }
  }

  std::vector<double> unique = s.probes;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  const ResolventEvaluator ev(gen, opt.norm);
  std::vector<double> values(unique.size());
  std::vector<std::exception_ptr> errors(unique.size());
  parallel_for(unique.size(), opt.workers, [&](std::size_t i) {
    try {
      values[i] = ev.norm(unique[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::map<double, double> cache;
  for (std::size_t i = 0; i < unique.size(); ++i) cache[unique[i]] = values[i];
  for (double p : s.probes) s.norms.push_back(cache.at(p));
  s.exponent_fit = fit_growth_exponent(s.lambdas, s.norms);
  return s;
}

ResolventSweep sweep_from_norms(const std::vector<double>& lambdas, const std::vector<double>& norms) {
  ResolventSweep s;
  s.lambdas = lambdas;
  s.norms = norms;
  s.probes = lambdas;
  s.probe = SweepProbe::Pointwise;
  s.exponent_fit = fit_growth_exponent(lambdas, norms);
  return s;
}

AxisClearance axis_clearance(const GeneratorMatrix& gen, const std::vector<double>& grid) {
  if (grid.empty()) throw Error("empty grid");
  const ResolventEvaluator ev(gen, NormKind::Unweighted);
  std::vector<double> sig(grid.size());
  parallel_for(grid.size(), 0, [&](std::size_t i) { sig[i] = ev.sigma_min(grid[i]); });
  AxisClearance c;
  const auto it = std::min_element(sig.begin(), sig.end());
  c.value = *it;
  c.at_lambda = grid[static_cast<std::size_t>(it - sig.begin())];
  c.singular = c.value < 1e-14 * ev.op_norm();
  if (c.singular) c.value = 0.0;
  return c;
}

std::uint64_t seed_from_hash(const std::string& hash) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : hash) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

nlohmann::json to_json(const SpectrumReport& r) {
  return {{"spectral_abscissa", r.spectral_abscissa},
          {"n_unstable", r.n_unstable},
          {"resolved_abscissa", r.resolved_abscissa},
          {"closest_to_axis", {r.closest_to_axis.real(), r.closest_to_axis.imag()}},
          {"lambda_cut", r.lambda_cut},
          {"n_eigenvalues", r.eigenvalues.size()},
          {"config_hash", r.config_hash}};
}

nlohmann::json to_json(const ResolventSweep& s) {
  const auto& f = s.exponent_fit;
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"r2", f.r2},
          {"window_lo", f.window_lo},
          {"window_hi", f.window_hi},
          {"lambda_cut", s.lambda_cut},
          {"beyond_cutoff", s.beyond_cutoff},
          {"probe", s.probe == SweepProbe::PeakEnvelope ? "peak_envelope" : "pointwise"},
          {"config_hash", s.config_hash}};
}

std::string spectrum_csv(const SpectrumReport& r) {
  std::vector<std::vector<double>> rows;
  for (cd z : r.eigenvalues) rows.push_back({z.real(), z.imag()});
  return csv_text({"re", "im"}, rows);
}

std::string sweep_csv(const ResolventSweep& s) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < s.lambdas.size(); ++i) rows.push_back({s.lambdas[i], s.norms[i]});
  return csv_text({"lambda", "resolvent_norm"}, rows);
}

}  // namespace kvdelay
