#include "kvdelay/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace kvdelay {

namespace {

DecayFit fit_log_linear(const EnergySeries& s, std::pair<double, double> window, DecayFit::Model model) {
  const auto [lo, hi] = window;
  if (!(hi > lo)) throw Error("fit window must have t_lo < t_hi");
  if (s.size() == 0 || lo < s.times.front() || hi > s.times.back()) throw Error("fit window outside the series span");
  if (model == DecayFit::Model::Polynomial && !(lo > 0)) throw Error("polynomial fit needs t_lo > 0");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double t = s.times[i];
    if (t < lo || t > hi) continue;
    if (!(s.E[i] > 0)) throw Error("energy must be > 0 on the fit window (t=" + std::to_string(t) + ")");
    x.push_back(model == DecayFit::Model::Exponential ? t : std::log(t));
    y.push_back(std::log(s.E[i]));
  }
  if (x.size() < 2) throw Error("fit window holds fewer than two samples");
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd Y = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  X.col(0) = Eigen::Map<const Eigen::VectorXd>(x.data(), n);
  X.col(1).setOnes();
  const Eigen::Vector2d c = X.colPivHouseholderQr().solve(Y);
  const Eigen::VectorXd r = Y - X * c;
  const double ss_tot = (Y.array() - Y.mean()).matrix().squaredNorm();
  DecayFit f;
  f.model = model;
  f.rate = -c[0];
  f.amplitude = std::exp(c[1]);
  f.r2 = ss_tot > 0 ? std::clamp(1.0 - r.squaredNorm() / ss_tot, 0.0, 1.0) : 1.0;
  f.residual = r.cwiseAbs().maxCoeff();
  f.window = window;
  return f;
}

std::optional<DecayFit> try_fit(const EnergySeries& s, std::pair<double, double> w, DecayFit::Model m) {
  try {
    return fit_log_linear(s, w, m);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

DecayFit fit_exponential(const EnergySeries& series, std::pair<double, double> window) {
  return fit_log_linear(series, window, DecayFit::Model::Exponential);
}

DecayFit fit_polynomial(const EnergySeries& series, std::pair<double, double> window) {
  return fit_log_linear(series, window, DecayFit::Model::Polynomial);
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::Exponential: return "exponential";
    case Regime::Polynomial: return "polynomial";
    case Regime::Undetermined: return "undetermined";
  }
  return "undetermined";
}

Regime regime_from_slope(double slope) {
  if (std::abs(slope) <= kBoundedSlopeMax) return Regime::Exponential;
  if (slope >= kPolynomialSlopeLo && slope <= kPolynomialSlopeHi) return Regime::Polynomial;
  return Regime::Undetermined;
}

Regime expected_regime(const WaveConfig& cfg) {
  if (!check_hypotheses(cfg).holds) return Regime::Undetermined;
  if (cfg.scenario == Scenario::BoundaryKvBoundaryDelay) return Regime::Exponential;
  return Regime::Polynomial;
}

Verdict scenario_verdict(const WaveConfig& cfg, const EnergySeries& series, const ResolventSweep& sweep,
                         const SpectrumReport& spectrum) {
  const std::string hash = config_hash(cfg);
  if (series.config_hash != hash || sweep.config_hash != hash || spectrum.config_hash != hash)
    throw InconsistentInputs("verdict inputs come from different configs");
  Verdict v;
  v.scenario = cfg.scenario;
  v.config_hash = hash;
  v.hypothesis_applies_H = has_boundary_delay(cfg.scenario);
  if (v.hypothesis_applies_H)
    v.hypothesis_H = check_hypothesis_H(cfg).holds;
  else
    v.hypothesis_H1 = check_hypothesis_H1(cfg).holds;
  v.expected = expected_regime(cfg);
  v.sweep_slope = sweep.exponent_fit.slope;
  v.observed = regime_from_slope(v.sweep_slope);
  v.spectral_abscissa = spectrum.spectral_abscissa;
  if (series.size() >= 2) {
    const std::pair<double, double> w{0.5 * (series.times.front() + series.times.back()), series.times.back()};
    v.exp_fit = try_fit(series, w, DecayFit::Model::Exponential);
    v.poly_fit = try_fit(series, w, DecayFit::Model::Polynomial);
  }
  v.agreement = v.expected != Regime::Undetermined && v.expected == v.observed;
  return v;
}

nlohmann::json to_json(const DecayFit& f) {
  return {{"model", f.model == DecayFit::Model::Exponential ? "exponential" : "polynomial"},
          {"rate", f.rate},
          {"amplitude", f.amplitude},
          {"r2", f.r2},
          {"window", {f.window.first, f.window.second}}};
}

nlohmann::json to_json(const Verdict& v) {
  nlohmann::json hyp = {{"H", nullptr}, {"H1", nullptr}};
  if (v.hypothesis_applies_H)
    hyp["H"] = v.hypothesis_H;
  else
    hyp["H1"] = v.hypothesis_H1;
  return {{"scenario", std::string(to_string(v.scenario))},
          {"hypotheses", hyp},
          {"expected_regime", std::string(to_string(v.expected))},
          {"observed_regime", std::string(to_string(v.observed))},
          {"sweep_slope", v.sweep_slope},
          {"spectral_abscissa", v.spectral_abscissa},
          {"exp_fit", v.exp_fit ? to_json(*v.exp_fit) : nlohmann::json(nullptr)},
          {"poly_fit", v.poly_fit ? to_json(*v.poly_fit) : nlohmann::json(nullptr)},
          {"agreement", v.agreement},
          {"thresholds",
           {{"bounded_slope_max", kBoundedSlopeMax},
            {"polynomial_slope", {kPolynomialSlopeLo, kPolynomialSlopeHi}}}},
          {"config_hash", v.config_hash}};
}

}  // namespace kvdelay
