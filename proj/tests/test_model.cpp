#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "kvdelay/model.hpp"
#include "support.hpp"

namespace kvdelay {
namespace {

bool lists(const HypothesisReport& r, const std::string& clause) {
  return std::find(r.failed_clauses.begin(), r.failed_clauses.end(), clause) != r.failed_clauses.end();
}

TEST(HypothesisH, AdmissibleUnitCoefficients) {
  WaveConfig c = testing::boundary_config();
  c.kappa3 = 1;
  c.delta3 = 1;
  c.delta2 = 0.5;
  const auto r = check_hypothesis_H(c);
  EXPECT_TRUE(r.holds);
  EXPECT_TRUE(r.failed_clauses.empty());
  ASSERT_TRUE(r.p_interval);
  EXPECT_DOUBLE_EQ(r.p_interval->first, 0.5);
  EXPECT_DOUBLE_EQ(r.p_interval->second, 2.0);
}

TEST(HypothesisH, StiffEndSegment) {
  WaveConfig c = testing::boundary_config();
  c.kappa3 = 2;
  c.delta3 = 1;
  c.delta2 = 0.5;
  const auto r = check_hypothesis_H(c);
  EXPECT_TRUE(r.holds);
  EXPECT_DOUBLE_EQ(r.p_interval->first, 1.0);
  EXPECT_DOUBLE_EQ(r.p_interval->second, 3.0);
}

TEST(HypothesisH, WeakUndelayedGain) {
  WaveConfig c = testing::boundary_config();
  c.kappa3 = 1;
  c.delta3 = 0.4;
  c.delta2 = 0.1;
  const auto r = check_hypothesis_H(c);
  EXPECT_FALSE(r.holds);
  EXPECT_TRUE(lists(r, "delta3>1/(2*kappa3)"));
}

TEST(HypothesisH, ZeroDelayWeight) {
  WaveConfig c = testing::boundary_config();
  c.delta2 = 0;
  const auto r = check_hypothesis_H(c);
  EXPECT_FALSE(r.holds);
  EXPECT_TRUE(lists(r, "delta2!=0"));
  EXPECT_FALSE(r.p_interval);
}

TEST(HypothesisH, FailedClausesAreExactlyTheViolatedOnes) {
  WaveConfig c = testing::boundary_config();
  c.delta1 = 0;
  c.delta2 = 1.5;
  const auto r = check_hypothesis_H(c);
  EXPECT_EQ(r.failed_clauses,
            (std::vector<std::string>{"delta1>0", "|delta2|<sqrt(2*kappa3*delta3-1)/kappa3"}));
}

TEST(HypothesisH, RejectsInteriorDelay) {
  EXPECT_THROW(check_hypothesis_H(testing::interior_config()), ScenarioMismatch);
}

TEST(HypothesisH, HoldsIffPIntervalNonempty) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> k3(0.05, 4.0), d2(-3.0, 3.0), d3(0.0, 4.0);
  WaveConfig c = testing::boundary_config();
  for (int i = 0; i < 5000; ++i) {
    c.kappa3 = k3(rng);
    c.delta2 = d2(rng);
    c.delta3 = d3(rng);
    const auto r = check_hypothesis_H(c);
    ASSERT_EQ(r.holds, r.p_interval_nonempty()) << c.kappa3 << " " << c.delta2 << " " << c.delta3;
  }
}

TEST(HypothesisH, MonotoneInDelayWeight) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> k3(0.05, 4.0), d2(0.0, 3.0), d3(0.0, 4.0), frac(0.0, 1.0);
  WaveConfig c = testing::boundary_config();
  int holding = 0;
  for (int i = 0; i < 5000; ++i) {
    c.kappa3 = k3(rng);
    c.delta3 = d3(rng);
    const double d = d2(rng);
    c.delta2 = d;
    if (!check_hypothesis_H(c).holds) continue;
    ++holding;
    c.delta2 = -d * std::max(1e-6, frac(rng));
    ASSERT_TRUE(check_hypothesis_H(c).holds);
  }
  EXPECT_GT(holding, 100);
}

TEST(HypothesisH1, Examples) {
  WaveConfig c = testing::interior_config();
  c.delta1 = 1;
  c.delta2 = 0.5;
  EXPECT_TRUE(check_hypothesis_H1(c).holds);
  EXPECT_FALSE(check_hypothesis_H1(c).p_interval);
  c.delta2 = 1;
  EXPECT_FALSE(check_hypothesis_H1(c).holds);
  c.delta2 = 0;
  EXPECT_FALSE(check_hypothesis_H1(c).holds);
  EXPECT_THROW(check_hypothesis_H1(testing::boundary_config()), ScenarioMismatch);
}

TEST(HypothesisH1, SignInvariant) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d1(0.0, 2.0), d2(-2.0, 2.0);
  WaveConfig c = testing::interior_config();
  for (int i = 0; i < 2000; ++i) {
    c.delta1 = d1(rng);
    c.delta2 = d2(rng);
    const auto a = check_hypothesis_H1(c);
    c.delta2 = -c.delta2;
    const auto b = check_hypothesis_H1(c);
    ASSERT_EQ(a.holds, b.holds);
    ASSERT_EQ(a.failed_clauses, b.failed_clauses);
  }
}

TEST(Validation, AcceptsWellFormedConfig) {
  WaveConfig c = testing::boundary_config(0.25, 0.5);
  c.delta2 = 0.3;
  EXPECT_NO_THROW(validate_config(c));
}

TEST(Validation, AcceptsHypothesisViolatingConfig) {
  WaveConfig c = testing::boundary_config();
  c.delta2 = 5.0;
  EXPECT_NO_THROW(validate_config(c));
}

void expect_error(const WaveConfig& c, const std::string& message) {
  try {
    validate_config(c);
    FAIL() << "expected: " << message;
  } catch (const ValidationError& e) {
    EXPECT_EQ(std::string(e.what()), message);
  }
}

TEST(Validation, NamesFirstViolation) {
  WaveConfig c = testing::boundary_config();
  c.alpha = 0.6;
  c.beta = 0.5;
  expect_error(c, "alpha must be < beta");
  c = testing::boundary_config();
  c.tau = 0;
  expect_error(c, "tau must be > 0");
  c = testing::boundary_config();
  c.kappa2 = -1;
  expect_error(c, "kappa2 must be > 0");
  c = testing::boundary_config();
  c.delta2 = 0;
  expect_error(c, "delta2 must be nonzero");
  c = testing::boundary_config(0.0, 0.5);
  c.scenario = Scenario::InteriorKvBoundaryDelay;
  expect_error(c, "alpha must be > 0 for interior_kv_boundary_delay");
  c = testing::interior_config();
  c.initial.displacement = SineMode{1.5, 1.0};
  expect_error(c, "displacement sine_mode k must be an integer when both ends are fixed");
  c = testing::boundary_config();
  c.initial.velocity = Bump{0.5, 0.4, 1.0};
  expect_error(c, "velocity bump requires 0 <= a < b <= L");
}

TEST(Validation, StructureCheckAllowsConservativeLimit) {
  const WaveConfig c = testing::conservative_config();
  EXPECT_NO_THROW(check_structure(c));
  EXPECT_THROW(validate_config(c), ValidationError);
}

TEST(Validation, InteriorDelayAdmitsEndpoints) {
  WaveConfig c = testing::interior_config(0.0, 1.0);
  EXPECT_NO_THROW(validate_config(c));
}

TEST(ConfigJson, RoundTripAndHash) {
  WaveConfig c = testing::interior_config();
  c.initial.velocity = Bump{0.2, 0.7, 2.0};
  c.initial.history = SineHistory{0.5, 3.0, 2.0};
  const WaveConfig back = config_from_json(nlohmann::json::parse(to_json(c).dump()));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_EQ(config_hash(c).size(), 16u);
  c.delta2 = 0.25;
  EXPECT_NE(config_hash(back), config_hash(c));
}

TEST(ConfigJson, RejectsUnknownAndMissingKeys) {
  nlohmann::json j = to_json(testing::boundary_config());
  j["extra"] = 1;
  EXPECT_THROW(config_from_json(j), ValidationError);
  j = to_json(testing::boundary_config());
  j.erase("tau");
  EXPECT_THROW(config_from_json(j), ValidationError);
  j = to_json(testing::boundary_config());
  j["initial"]["history"] = {{"kind", "ramp"}, {"params", nlohmann::json::object()}};
  EXPECT_THROW(config_from_json(j), ValidationError);
}

TEST(Selectors, Values) {
  EXPECT_NEAR(evaluate(SineMode{1, 2}, 0.5, 1.0), 2.0, 1e-15);
  EXPECT_DOUBLE_EQ(evaluate(Bump{0.2, 0.6, 3}, 0.4, 1.0), 3.0);
  EXPECT_DOUBLE_EQ(evaluate(Bump{0.2, 0.6, 3}, 0.7, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(evaluate(ZeroProfile{}, 0.3, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(evaluate(ConstantHistory{2.5}, 1.0, -0.3, 1.0, false), 2.5);
  EXPECT_DOUBLE_EQ(evaluate(SineHistory{1, 1, 0}, 1.0, -0.5, 1.0, false), std::sin(-0.5));
  EXPECT_NEAR(evaluate(SineHistory{1, 1, 1}, 0.5, -0.5, 1.0, true), std::sin(-0.5), 1e-15);
}

}  // namespace
}  // namespace kvdelay
