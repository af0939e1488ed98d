#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "kvdelay/errors.hpp"

namespace kvdelay {

enum class Scenario {
  InteriorKvBoundaryDelay,  // KV on (alpha, beta) strictly inside, delayed feedback at L
  BoundaryKvBoundaryDelay,  // KV on (0, beta), delayed feedback at L
  InteriorKvInteriorDelay,  // KV and delayed feedback both on (alpha, beta), fixed ends
};

std::string_view to_string(Scenario s);
Scenario scenario_from_string(std::string_view name);
bool has_boundary_delay(Scenario s);

// Spatial selectors for the initial displacement and velocity.
struct ZeroProfile {};
struct SineMode {
  double k = 1.0;  // a * sin(k pi x / L)
  double amplitude = 1.0;
};
struct Bump {
  double a = 0.0;  // amplitude * sin^2(pi (x - a) / (b - a)) on [a, b], zero elsewhere
  double b = 1.0;
  double amplitude = 1.0;
};
using SpatialProfile = std::variant<ZeroProfile, SineMode, Bump>;

// History selectors f0 on the window (-tau, 0).
struct ZeroHistory {};
struct ConstantHistory {
  double c = 0.0;
};
struct SineHistory {
  double amplitude = 1.0;
  double omega = 1.0;
  // Interior delay only: spatial factor sin(profile_k pi x / L); 0 means a uniform factor.
  double profile_k = 0.0;
};
using HistoryProfile = std::variant<ZeroHistory, ConstantHistory, SineHistory>;

struct InitialData {
  SpatialProfile displacement = ZeroProfile{};
  SpatialProfile velocity = ZeroProfile{};
  HistoryProfile history = ZeroHistory{};
};

double evaluate(const SpatialProfile& p, double x, double L);
// History value f0(x, t) for t in [-tau, 0]. Boundary-delay scenarios use x = L and
// ignore the spatial factor.
double evaluate(const HistoryProfile& h, double x, double t, double L, bool spatial_factor);

struct WaveConfig {
  double L = 1.0;
  double alpha = 0.25;
  double beta = 0.5;
  double kappa1 = 1.0;
  double kappa2 = 1.0;
  double kappa3 = 1.0;
  double delta1 = 1.0;
  double delta2 = 0.5;
  double delta3 = 1.0;
  double tau = 1.0;
  Scenario scenario = Scenario::InteriorKvBoundaryDelay;
  InitialData initial;

  double kappa_on(double lo, double hi) const;  // coefficient of an element [lo, hi]
  double kappa_min() const;
  double kappa_max() const;
};

struct HypothesisReport {
  bool holds = false;
  std::vector<std::string> failed_clauses;
  // Open interval (kappa3|delta2|, (2/(kappa3|delta2|))(kappa3 delta3 - 1/2)); present
  // whenever kappa3 > 0 and delta2 != 0, possibly empty when the hypothesis fails.
  std::optional<std::pair<double, double>> p_interval;

  bool p_interval_nonempty() const {
    return p_interval && p_interval->first < p_interval->second;
  }
};

HypothesisReport check_hypothesis_H(const WaveConfig& cfg);
HypothesisReport check_hypothesis_H1(const WaveConfig& cfg);
// Dispatches on the scenario.
HypothesisReport check_hypotheses(const WaveConfig& cfg);

// Full well-formedness check used for user-supplied configs.
const WaveConfig& validate_config(const WaveConfig& cfg);
// Geometry, positivity of kappa and tau, and finiteness only. Allows delta1 = 0 and
// delta2 = 0, which library routines accept for conservative-limit studies.
const WaveConfig& check_structure(const WaveConfig& cfg);

nlohmann::json to_json(const WaveConfig& cfg);
WaveConfig config_from_json(const nlohmann::json& j);
WaveConfig load_config(const std::string& path);
nlohmann::json to_json(const HypothesisReport& r);

// FNV-1a 64 of the canonical JSON text, as 16 hex digits.
std::string config_hash(const WaveConfig& cfg);

}  // namespace kvdelay
