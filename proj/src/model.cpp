#include "kvdelay/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>

namespace kvdelay {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

void require(bool ok, const char* field, const std::string& message) {
  if (!ok) throw ValidationError(field, message);
}

bool near_integer(double k) { return std::abs(k - std::round(k)) < 1e-12; }

void check_profile(const SpatialProfile& p, const WaveConfig& cfg, const char* field) {
  if (const auto* s = std::get_if<SineMode>(&p)) {
    require(std::isfinite(s->k) && std::isfinite(s->amplitude), field,
            std::string(field) + " parameters must be finite");
    require(s->k > 0, field, std::string(field) + " sine_mode k must be > 0");
    if (cfg.scenario == Scenario::InteriorKvInteriorDelay)
      require(near_integer(s->k), field,
              std::string(field) + " sine_mode k must be an integer when both ends are fixed");
  } else if (const auto* b = std::get_if<Bump>(&p)) {
    require(std::isfinite(b->a) && std::isfinite(b->b) && std::isfinite(b->amplitude), field,
            std::string(field) + " parameters must be finite");
    require(b->a >= 0 && b->a < b->b && b->b <= cfg.L, field,
            std::string(field) + " bump requires 0 <= a < b <= L");
  }
}

void check_history(const HistoryProfile& h) {
  if (const auto* c = std::get_if<ConstantHistory>(&h)) {
    require(std::isfinite(c->c), "history", "history constant must be finite");
  } else if (const auto* s = std::get_if<SineHistory>(&h)) {
    require(std::isfinite(s->amplitude) && std::isfinite(s->omega) &&
                std::isfinite(s->profile_k),
            "history", "history parameters must be finite");
    require(s->profile_k >= 0, "history", "history profile_k must be >= 0");
  }
}

void check_common(const WaveConfig& c) {
  const std::pair<const char*, double> finite_fields[] = {
      {"L", c.L},           {"alpha", c.alpha},   {"beta", c.beta},     {"kappa1", c.kappa1},
      {"kappa2", c.kappa2}, {"kappa3", c.kappa3}, {"delta1", c.delta1}, {"delta2", c.delta2},
      {"delta3", c.delta3}, {"tau", c.tau}};
  for (const auto& [name, v] : finite_fields)
    require(std::isfinite(v), name, std::string(name) + " must be finite");

  require(c.L > 0, "L", "L must be > 0");
  require(c.alpha >= 0, "alpha", "alpha must be >= 0");
  require(c.alpha < c.beta, "alpha", "alpha must be < beta");
  require(c.beta <= c.L, "beta", "beta must be <= L");
  require(c.kappa1 > 0, "kappa1", "kappa1 must be > 0");
  require(c.kappa2 > 0, "kappa2", "kappa2 must be > 0");
  require(c.kappa3 > 0, "kappa3", "kappa3 must be > 0");
  require(c.tau > 0, "tau", "tau must be > 0");
  require(c.delta1 >= 0, "delta1", "delta1 must be >= 0");
  require(c.delta3 >= 0, "delta3", "delta3 must be >= 0");

  switch (c.scenario) {
    case Scenario::InteriorKvBoundaryDelay:
      require(c.alpha > 0, "alpha", "alpha must be > 0 for interior_kv_boundary_delay");
      require(c.beta < c.L, "beta", "beta must be < L for interior_kv_boundary_delay");
      break;
    case Scenario::BoundaryKvBoundaryDelay:
      require(c.alpha == 0, "alpha", "alpha must be 0 for boundary_kv_boundary_delay");
      require(c.beta < c.L, "beta", "beta must be < L for boundary_kv_boundary_delay");
      break;
    case Scenario::InteriorKvInteriorDelay:
      break;
  }

  check_profile(c.initial.displacement, c, "displacement");
  check_profile(c.initial.velocity, c, "velocity");
  check_history(c.initial.history);
}

// ---- JSON helpers -------------------------------------------------------------

double number_at(const json& params, const char* key, const char* where) {
  if (!params.contains(key) || !params.at(key).is_number())
    throw ValidationError(where, std::string(where) + " params." + key + " must be a number");
  return params.at(key).get<double>();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const char* where) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items())
    if (!ok.contains(key))
      throw ValidationError(where, std::string("unknown key '") + key + "' in " + where);
}

std::pair<std::string, json> selector_parts(const json& j, const char* where) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw ValidationError(where, std::string(where) + " must be an object with a string kind");
  reject_unknown(j, {"kind", "params"}, where);
  json params = j.value("params", json::object());
  if (!params.is_object())
    throw ValidationError(where, std::string(where) + " params must be an object");
  return {j.at("kind").get<std::string>(), params};
}

SpatialProfile spatial_from_json(const json& j, const char* where) {
  auto [kind, params] = selector_parts(j, where);
  if (kind == "zero") {
    reject_unknown(params, {}, where);
    return ZeroProfile{};
  }
  if (kind == "sine_mode") {
    reject_unknown(params, {"k", "amplitude"}, where);
    return SineMode{number_at(params, "k", where), number_at(params, "amplitude", where)};
  }
  if (kind == "bump") {
    reject_unknown(params, {"a", "b", "amplitude"}, where);
    return Bump{number_at(params, "a", where), number_at(params, "b", where),
                number_at(params, "amplitude", where)};
  }
  throw ValidationError(where, std::string(where) + " has unknown kind '" + kind + "'");
}

HistoryProfile history_from_json(const json& j) {
  auto [kind, params] = selector_parts(j, "history");
  if (kind == "zero") {
    reject_unknown(params, {}, "history");
    return ZeroHistory{};
  }
  if (kind == "constant") {
    reject_unknown(params, {"c"}, "history");
    return ConstantHistory{number_at(params, "c", "history")};
  }
  if (kind == "sine") {
    reject_unknown(params, {"amplitude", "omega", "profile_k"}, "history");
    SineHistory s{number_at(params, "amplitude", "history"),
                  number_at(params, "omega", "history"), 0.0};
    if (params.contains("profile_k")) s.profile_k = number_at(params, "profile_k", "history");
    return s;
  }
  throw ValidationError("history", "history has unknown kind '" + kind + "'");
}

json spatial_to_json(const SpatialProfile& p) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ZeroProfile>)
          return {{"kind", "zero"}, {"params", json::object()}};
        else if constexpr (std::is_same_v<T, SineMode>)
          return {{"kind", "sine_mode"}, {"params", {{"k", v.k}, {"amplitude", v.amplitude}}}};
        else
          return {{"kind", "bump"},
                  {"params", {{"a", v.a}, {"b", v.b}, {"amplitude", v.amplitude}}}};
      },
      p);
}

json history_to_json(const HistoryProfile& h) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ZeroHistory>)
          return {{"kind", "zero"}, {"params", json::object()}};
        else if constexpr (std::is_same_v<T, ConstantHistory>)
          return {{"kind", "constant"}, {"params", {{"c", v.c}}}};
        else
          return {{"kind", "sine"},
                  {"params",
                   {{"amplitude", v.amplitude}, {"omega", v.omega}, {"profile_k", v.profile_k}}}};
      },
      h);
}

}  // namespace

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::InteriorKvBoundaryDelay: return "interior_kv_boundary_delay";
    case Scenario::BoundaryKvBoundaryDelay: return "boundary_kv_boundary_delay";
    case Scenario::InteriorKvInteriorDelay: return "interior_kv_interior_delay";
  }
  return "unknown";
}

Scenario scenario_from_string(std::string_view name) {
  for (auto s : {Scenario::InteriorKvBoundaryDelay, Scenario::BoundaryKvBoundaryDelay,
                 Scenario::InteriorKvInteriorDelay})
    if (to_string(s) == name) return s;
  throw ValidationError("scenario", "unknown scenario '" + std::string(name) + "'");
}

bool has_boundary_delay(Scenario s) { return s != Scenario::InteriorKvInteriorDelay; }

double evaluate(const SpatialProfile& p, double x, double L) {
  if (const auto* s = std::get_if<SineMode>(&p)) return s->amplitude * std::sin(s->k * kPi * x / L);
  if (const auto* b = std::get_if<Bump>(&p)) {
    if (x < b->a || x > b->b) return 0.0;
    const double r = std::sin(kPi * (x - b->a) / (b->b - b->a));
    return b->amplitude * r * r;
  }
  return 0.0;
}

double evaluate(const HistoryProfile& h, double x, double t, double L, bool spatial_factor) {
  if (const auto* c = std::get_if<ConstantHistory>(&h)) return c->c;
  if (const auto* s = std::get_if<SineHistory>(&h)) {
    double v = s->amplitude * std::sin(s->omega * t);
    if (spatial_factor && s->profile_k > 0) v *= std::sin(s->profile_k * kPi * x / L);
    return v;
  }
  return 0.0;
}

double WaveConfig::kappa_on(double lo, double hi) const {
  const double mid = 0.5 * (lo + hi);
  if (mid < alpha) return kappa1;
  if (mid < beta) return kappa2;
  return kappa3;
}

double WaveConfig::kappa_min() const {
  double k = kappa2;
  if (alpha > 0) k = std::min(k, kappa1);
  if (beta < L) k = std::min(k, kappa3);
  return k;
}

double WaveConfig::kappa_max() const {
  double k = kappa2;
  if (alpha > 0) k = std::max(k, kappa1);
  if (beta < L) k = std::max(k, kappa3);
  return k;
}

HypothesisReport check_hypothesis_H(const WaveConfig& cfg) {
  if (!has_boundary_delay(cfg.scenario))
    throw ScenarioMismatch("hypothesis H applies to boundary-delay scenarios only");
  const double k3 = cfg.kappa3, d1 = cfg.delta1, d2 = cfg.delta2, d3 = cfg.delta3;
  HypothesisReport r;
  auto clause = [&](bool ok, const char* id) {
    if (!ok) r.failed_clauses.emplace_back(id);
  };
  clause(k3 > 0, "kappa3>0");
  clause(d1 > 0, "delta1>0");
  clause(d3 > 0, "delta3>0");
  clause(d2 != 0, "delta2!=0");
  const bool above_half = k3 > 0 && d3 > 1.0 / (2.0 * k3);
  clause(above_half, "delta3>1/(2*kappa3)");
  clause(above_half && std::abs(d2) < std::sqrt(2.0 * k3 * d3 - 1.0) / k3,
         "|delta2|<sqrt(2*kappa3*delta3-1)/kappa3");
  r.holds = r.failed_clauses.empty();
  if (k3 > 0 && d2 != 0) {
    const double a = k3 * std::abs(d2);
    r.p_interval = std::make_pair(a, (2.0 / a) * (k3 * d3 - 0.5));
  }
  return r;
}

HypothesisReport check_hypothesis_H1(const WaveConfig& cfg) {
  if (cfg.scenario != Scenario::InteriorKvInteriorDelay)
    throw ScenarioMismatch("hypothesis H1 applies to the interior-delay scenario only");
  HypothesisReport r;
  if (!(cfg.delta1 > 0)) r.failed_clauses.emplace_back("delta1>0");
  if (!(cfg.delta2 != 0)) r.failed_clauses.emplace_back("delta2!=0");
  if (!(std::abs(cfg.delta2) < cfg.delta1)) r.failed_clauses.emplace_back("|delta2|<delta1");
  r.holds = r.failed_clauses.empty();
  return r;
}

HypothesisReport check_hypotheses(const WaveConfig& cfg) {
  return has_boundary_delay(cfg.scenario) ? check_hypothesis_H(cfg) : check_hypothesis_H1(cfg);
}

const WaveConfig& check_structure(const WaveConfig& cfg) {
  check_common(cfg);
  return cfg;
}

const WaveConfig& validate_config(const WaveConfig& cfg) {
  check_common(cfg);
  require(cfg.delta1 > 0, "delta1", "delta1 must be > 0");
  require(cfg.delta2 != 0, "delta2", "delta2 must be nonzero");
  return cfg;
}

json to_json(const WaveConfig& c) {
  return {{"L", c.L},
          {"alpha", c.alpha},
          {"beta", c.beta},
          {"kappa1", c.kappa1},
          {"kappa2", c.kappa2},
          {"kappa3", c.kappa3},
          {"delta1", c.delta1},
          {"delta2", c.delta2},
          {"delta3", c.delta3},
          {"tau", c.tau},
          {"scenario", std::string(to_string(c.scenario))},
          {"initial",
           {{"displacement", spatial_to_json(c.initial.displacement)},
            {"velocity", spatial_to_json(c.initial.velocity)},
            {"history", history_to_json(c.initial.history)}}}};
}

WaveConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config", "config must be a JSON object");
  reject_unknown(j, {"L", "alpha", "beta", "kappa1", "kappa2", "kappa3", "delta1", "delta2",
                     "delta3", "tau", "scenario", "initial"},
                 "config");
  WaveConfig c;
  auto num = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_number())
      throw ValidationError(key, std::string(key) + " must be a number");
    return j.at(key).get<double>();
  };
  c.L = num("L");
  c.alpha = num("alpha");
  c.beta = num("beta");
  c.kappa1 = num("kappa1");
  c.kappa2 = num("kappa2");
  c.kappa3 = num("kappa3");
  c.delta1 = num("delta1");
  c.delta2 = num("delta2");
  c.delta3 = num("delta3");
  c.tau = num("tau");
  if (!j.contains("scenario") || !j.at("scenario").is_string())
    throw ValidationError("scenario", "scenario must be a string");
  c.scenario = scenario_from_string(j.at("scenario").get<std::string>());
  if (!j.contains("initial") || !j.at("initial").is_object())
    throw ValidationError("initial", "initial must be an object");
  const json& init = j.at("initial");
  reject_unknown(init, {"displacement", "velocity", "history"}, "initial");
  for (const char* key : {"displacement", "velocity", "history"})
    if (!init.contains(key)) throw ValidationError(key, std::string("initial.") + key + " missing");
  c.initial.displacement = spatial_from_json(init.at("displacement"), "displacement");
  c.initial.velocity = spatial_from_json(init.at("velocity"), "velocity");
  c.initial.history = history_from_json(init.at("history"));
  return c;
}

WaveConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config", std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

json to_json(const HypothesisReport& r) {
  json j = {{"holds", r.holds}, {"failed_clauses", r.failed_clauses}};
  if (r.p_interval)
    j["p_interval"] = {r.p_interval->first, r.p_interval->second};
  else
    j["p_interval"] = nullptr;
  return j;
}

std::string config_hash(const WaveConfig& cfg) {
  const std::string text = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace kvdelay
