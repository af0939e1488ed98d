#pragma once

#include <optional>
#include <string>
#include <utility>

#include <json.hpp>

#include "kvdelay/model.hpp"
#include "kvdelay/spectral.hpp"
#include "kvdelay/timestepper.hpp"

namespace kvdelay {

// Sweep-slope thresholds separating the two regimes.
inline constexpr double kBoundedSlopeMax = 0.15;
inline constexpr double kPolynomialSlopeLo = 0.3;
inline constexpr double kPolynomialSlopeHi = 0.7;

struct DecayFit {
  enum class Model { Exponential, Polynomial };
  Model model = Model::Exponential;
  double rate = 0.0;       // omega in C e^{-omega t}, or p in C t^{-p}
  double amplitude = 0.0;  // C
  double r2 = 1.0;
  double residual = 0.0;  // max |log E - fitted| over the window
  std::pair<double, double> window{0.0, 0.0};
};

DecayFit fit_exponential(const EnergySeries& series, std::pair<double, double> window);
DecayFit fit_polynomial(const EnergySeries& series, std::pair<double, double> window);

enum class Regime { Exponential, Polynomial, Undetermined };
std::string_view to_string(Regime r);

// Regime read off a sweep slope with the thresholds above.
Regime regime_from_slope(double slope);
// Regime the theory predicts: exponential when the KV region reaches x = 0 with
// boundary delay, polynomial otherwise; undetermined when the hypothesis fails.
Regime expected_regime(const WaveConfig& cfg);

struct Verdict {
  Scenario scenario = Scenario::InteriorKvBoundaryDelay;
  bool hypothesis_H = false;
  bool hypothesis_H1 = false;
  bool hypothesis_applies_H = false;
  Regime expected = Regime::Undetermined;
  Regime observed = Regime::Undetermined;
  double sweep_slope = 0.0;
  double spectral_abscissa = 0.0;
  std::optional<DecayFit> exp_fit;  // absent when the energy vanishes on the window
  std::optional<DecayFit> poly_fit;
  bool agreement = false;
  std::string config_hash;
};

// Fits use the second half of the series span.
Verdict scenario_verdict(const WaveConfig& cfg, const EnergySeries& series, const ResolventSweep& sweep,
                         const SpectrumReport& spectrum);

nlohmann::json to_json(const DecayFit& f);
nlohmann::json to_json(const Verdict& v);

}  // namespace kvdelay
