#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "kvdelay/analysis.hpp"
#include "support.hpp"

namespace kvdelay {
namespace {

EnergySeries synthetic(const std::function<double(double)>& e, double t0, double t1, std::size_t n) {
  EnergySeries s;
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n);
    s.times.push_back(t);
    s.E.push_back(e(t));
    s.E_wave.push_back(e(t));
    s.E_delay.push_back(0.0);
    s.flux.emplace_back();
  }
  return s;
}

TEST(Fit, ExponentialIsExact) {
  const auto s = synthetic([](double t) { return 3.0 * std::exp(-2.0 * t); }, 0.0, 5.0, 200);
  const DecayFit f = fit_exponential(s, {0.0, 5.0});
  EXPECT_NEAR(f.rate, 2.0, 1e-10);
  EXPECT_NEAR(f.amplitude, 3.0, 1e-9);
  EXPECT_LT(f.residual, 1e-10);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
}

TEST(Fit, PolynomialIsExact) {
  const auto s = synthetic([](double t) { return 5.0 * std::pow(t, -4.0); }, 1.0, 10.0, 300);
  const DecayFit f = fit_polynomial(s, {1.0, 10.0});
  EXPECT_NEAR(f.rate, 4.0, 1e-10);
  EXPECT_NEAR(f.amplitude, 5.0, 1e-9);
  EXPECT_LT(f.residual, 1e-10);
}

TEST(Fit, ExponentialRateIgnoresTimeShift) {
  const auto a = synthetic([](double t) { return 2.0 * std::exp(-0.7 * t) * (1 + 0.1 * std::sin(t)); }, 0.0, 8.0, 160);
  EnergySeries b = a;
  for (double& t : b.times) t += 3.0;
  const DecayFit fa = fit_exponential(a, {2.0, 8.0});
  const DecayFit fb = fit_exponential(b, {5.0, 11.0});
  EXPECT_NEAR(fa.rate, fb.rate, 1e-10);
  EXPECT_NEAR(std::log(fb.amplitude) - std::log(fa.amplitude), 3.0 * fa.rate, 1e-9);
}

TEST(Fit, WindowSelectsSamples) {
  const auto s = synthetic([](double t) { return t < 2 ? 1.0 : std::exp(-(t - 2)); }, 0.0, 6.0, 60);
  EXPECT_NEAR(fit_exponential(s, {2.0, 6.0}).rate, 1.0, 1e-10);
}

TEST(Fit, Errors) {
  const auto s = synthetic([](double t) { return std::exp(-t); }, 0.0, 4.0, 40);
  EXPECT_THROW(fit_exponential(s, {1.0, 5.0}), Error);
  EXPECT_THROW(fit_exponential(s, {2.0, 1.0}), Error);
  EXPECT_THROW(fit_polynomial(s, {0.0, 4.0}), Error);
  const auto z = synthetic([](double) { return 0.0; }, 0.0, 4.0, 40);
  EXPECT_THROW(fit_exponential(z, {1.0, 4.0}), Error);
}

TEST(Regime, Thresholds) {
  EXPECT_EQ(regime_from_slope(0.0), Regime::Exponential);
  EXPECT_EQ(regime_from_slope(-0.15), Regime::Exponential);
  EXPECT_EQ(regime_from_slope(0.2), Regime::Undetermined);
  EXPECT_EQ(regime_from_slope(0.3), Regime::Polynomial);
  EXPECT_EQ(regime_from_slope(0.7), Regime::Polynomial);
  EXPECT_EQ(regime_from_slope(0.9), Regime::Undetermined);
  EXPECT_EQ(to_string(Regime::Polynomial), "polynomial");
}

TEST(Regime, Expected) {
  EXPECT_EQ(expected_regime(testing::boundary_config(0.0, 0.5)), Regime::Exponential);
  EXPECT_EQ(expected_regime(testing::boundary_config(0.25, 0.5)), Regime::Polynomial);
  EXPECT_EQ(expected_regime(testing::interior_config()), Regime::Polynomial);
  WaveConfig bad = testing::boundary_config(0.0, 0.5);
  bad.delta2 = 1.5;
  EXPECT_EQ(expected_regime(bad), Regime::Undetermined);
  WaveConfig bad_i = testing::interior_config();
  bad_i.delta2 = 2.0;
  EXPECT_EQ(expected_regime(bad_i), Regime::Undetermined);
}

struct VerdictInputs {
  WaveConfig cfg;
  EnergySeries series;
  ResolventSweep sweep;
  SpectrumReport spec;
};

VerdictInputs inputs(double slope) {
  VerdictInputs in;
  in.cfg = testing::boundary_config(0.0, 0.5);
  const std::string h = config_hash(in.cfg);
  in.series = synthetic([](double t) { return 2.0 * std::exp(-0.5 * t); }, 0.0, 10.0, 100);
  in.series.config_hash = h;
  const auto lam = log_grid(5, 50, 10);
  std::vector<double> n;
  for (double l : lam) n.push_back(std::pow(l, slope));
  in.sweep = sweep_from_norms(lam, n);
  in.sweep.config_hash = h;
  in.spec.spectral_abscissa = -0.25;
  in.spec.resolved_abscissa = -0.25;
  in.spec.config_hash = h;
  return in;
}

TEST(Verdict, AgreesAndIsDeterministic) {
  const auto in = inputs(0.01);
  const Verdict v = scenario_verdict(in.cfg, in.series, in.sweep, in.spec);
  EXPECT_TRUE(v.hypothesis_H);
  EXPECT_EQ(v.expected, Regime::Exponential);
  EXPECT_EQ(v.observed, Regime::Exponential);
  EXPECT_TRUE(v.agreement);
  ASSERT_TRUE(v.exp_fit.has_value());
  EXPECT_NEAR(v.exp_fit->rate, 0.5, 1e-10);
  EXPECT_EQ(v.exp_fit->window.first, 5.0);
  EXPECT_EQ(to_json(v).dump(), to_json(scenario_verdict(in.cfg, in.series, in.sweep, in.spec)).dump());
  const auto j = to_json(v);
  for (const char* k : {"scenario", "hypotheses", "expected_regime", "observed_regime", "sweep_slope",
                        "spectral_abscissa", "exp_fit", "poly_fit", "agreement", "thresholds", "config_hash"})
    EXPECT_TRUE(j.contains(k)) << k;
}

TEST(Verdict, DisagreementIsReported) {
  const auto in = inputs(0.5);
  const Verdict v = scenario_verdict(in.cfg, in.series, in.sweep, in.spec);
  EXPECT_EQ(v.observed, Regime::Polynomial);
  EXPECT_FALSE(v.agreement);
}

TEST(Verdict, ZeroEnergyOmitsFits) {
  auto in = inputs(0.0);
  for (double& e : in.series.E) e = 0.0;
  const Verdict v = scenario_verdict(in.cfg, in.series, in.sweep, in.spec);
  EXPECT_FALSE(v.exp_fit.has_value());
  EXPECT_FALSE(v.poly_fit.has_value());
}

TEST(Verdict, HashMismatch) {
  auto in = inputs(0.0);
  in.sweep.config_hash = "ffffffffffffffff";
  EXPECT_THROW(scenario_verdict(in.cfg, in.series, in.sweep, in.spec), InconsistentInputs);
}

}  // namespace
}  // namespace kvdelay
