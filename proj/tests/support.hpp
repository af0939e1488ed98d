#pragma once

#include <string>

#include "kvdelay/model.hpp"

namespace kvdelay::testing {

inline WaveConfig boundary_config(double alpha = 0.25, double beta = 0.5) {
  WaveConfig c;
  c.alpha = alpha;
  c.beta = beta;
  c.scenario = alpha > 0 ? Scenario::InteriorKvBoundaryDelay : Scenario::BoundaryKvBoundaryDelay;
  c.delta1 = 1.0;
  c.delta2 = 0.5;
  c.delta3 = 1.0;
  c.initial.displacement = SineMode{0.5, 1.0};
  c.initial.velocity = ZeroProfile{};
  c.initial.history = ZeroHistory{};
  return c;
}

inline WaveConfig interior_config(double alpha = 0.3, double beta = 0.6) {
  WaveConfig c;
  c.alpha = alpha;
  c.beta = beta;
  c.scenario = Scenario::InteriorKvInteriorDelay;
  c.delta1 = 1.0;
  c.delta2 = 0.5;
  c.delta3 = 0.0;
  c.initial.displacement = SineMode{1.0, 1.0};
  c.initial.velocity = ZeroProfile{};
  c.initial.history = ZeroHistory{};
  return c;
}

// Undamped fixed-fixed string with uniform kappa on (0, 1). The interfaces sit on a
// uniform mesh whenever the element count is a multiple of 4.
inline WaveConfig conservative_config(double k = 1.0, double kappa = 1.0) {
  WaveConfig c = interior_config(0.25, 0.5);
  c.kappa1 = c.kappa2 = c.kappa3 = kappa;
  c.delta1 = 0.0;
  c.delta2 = 0.0;
  c.initial.displacement = SineMode{k, 1.0};
  return c;
}

inline std::string source_dir() { return KVDELAY_SOURCE_DIR; }

}  // namespace kvdelay::testing
