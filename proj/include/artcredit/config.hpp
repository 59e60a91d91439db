#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>

#include <nlohmann/json.hpp>

#include "artcredit/sim_engine.hpp"

namespace artcredit {

using Json = nlohmann::json;

// Anything wrong with a config file: unreadable, malformed or invalid.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void only_keys(const Json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, _] : j.items()) {
    bool known = false;
    for (const char* allowed : keys) known = known || k == allowed;
    if (!known) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

inline const Json& field(const Json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  return j.at(key);
}

inline double number(const Json& j, const std::string& where, const char* key) {
  const auto& v = field(j, where, key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return v.get<double>();
}

inline std::int64_t integer(const Json& j, const std::string& where, const char* key) {
  const auto& v = field(j, where, key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
  return v.get<std::int64_t>();
}

inline std::string tag(const Json& j, const std::string& where) {
  const auto& v = field(j, where, "type");
  if (!v.is_string()) throw ConfigError(where + ".type: expected a string");
  return v.get<std::string>();
}

}  // namespace detail

inline ValueDistribution parse_distribution(const Json& j, const std::string& where) {
  const auto type = detail::tag(j, where);
  if (type == "bernoulli") {
    detail::only_keys(j, where, {"type", "q"});
    return Bernoulli{detail::number(j, where, "q")};
  }
  if (type == "uniform01") {
    detail::only_keys(j, where, {"type"});
    return Uniform01{};
  }
  if (type == "constant") {
    detail::only_keys(j, where, {"type", "value"});
    return Constant{detail::number(j, where, "value")};
  }
  if (type == "discrete") {
    detail::only_keys(j, where, {"type", "atoms"});
    const auto& atoms = detail::field(j, where, "atoms");
    if (!atoms.is_array()) throw ConfigError(where + ".atoms: expected a list of [value, probability] pairs");
    std::vector<Atom> out;
    for (const auto& a : atoms) {
      if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
        throw ConfigError(where + ".atoms: each atom must be [value, probability]");
      }
      out.push_back({a[0].get<double>(), a[1].get<double>()});
    }
    try {
      return make_discrete(std::move(out));
    } catch (const std::exception& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  throw ConfigError(where + ": unknown distribution type '" + type + "'");
}

inline Json to_json(const ValueDistribution& dist) {
  return std::visit(
      [](const auto& d) -> Json {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Bernoulli>) {
          return {{"type", "bernoulli"}, {"q", d.q}};
        } else if constexpr (std::is_same_v<T, Uniform01>) {
          return {{"type", "uniform01"}};
        } else if constexpr (std::is_same_v<T, Constant>) {
          return {{"type", "constant"}, {"value", d.value}};
        } else {
          Json atoms = Json::array();
          for (const auto& a : d.atoms) atoms.push_back({a.value, a.probability});
          return {{"type", "discrete"}, {"atoms", atoms}};
        }
      },
      dist);
}

inline Strategy parse_strategy(const Json& j, const std::string& where) {
  const auto type = detail::tag(j, where);
  const auto small_int = [&](const char* key) { return static_cast<int>(detail::integer(j, where, key)); };
  if (type == "aggressive") {
    detail::only_keys(j, where, {"type", "beta"});
    return Aggressive{detail::number(j, where, "beta")};
  }
  if (type == "group_aggressive") {
    detail::only_keys(j, where, {"type", "k", "m"});
    return GroupAggressive{small_int("k"), small_int("m")};
  }
  if (type == "coordinated_k") {
    detail::only_keys(j, where, {"type", "k"});
    return CoordinatedK{small_int("k")};
  }
  if (type == "single_bidder_rotation") {
    detail::only_keys(j, where, {"type"});
    return SingleBidderRotation{};
  }
  if (type == "fixed_rate") {
    detail::only_keys(j, where, {"type", "rho"});
    return FixedRate{detail::number(j, where, "rho")};
  }
  if (type == "threshold_deviation") {
    detail::only_keys(j, where, {"type", "beta"});
    return ThresholdDeviation{detail::number(j, where, "beta")};
  }
  throw ConfigError(where + ": unknown strategy type '" + type + "'");
}

inline Json to_json(const Strategy& s) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Aggressive>) {
          return {{"type", "aggressive"}, {"beta", v.beta}};
        } else if constexpr (std::is_same_v<T, GroupAggressive>) {
          return {{"type", "group_aggressive"}, {"k", v.k}, {"m", v.m}};
        } else if constexpr (std::is_same_v<T, CoordinatedK>) {
          return {{"type", "coordinated_k"}, {"k", v.k}};
        } else if constexpr (std::is_same_v<T, SingleBidderRotation>) {
          return {{"type", "single_bidder_rotation"}};
        } else if constexpr (std::is_same_v<T, FixedRate>) {
          return {{"type", "fixed_rate"}, {"rho", v.rho}};
        } else {
          return {{"type", "threshold_deviation"}, {"beta", v.beta}};
        }
      },
      s);
}

inline const char* mechanism_tag(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::CompetitiveSubsidy:
      return "competitive_subsidy";
    case MechanismKind::BiddingMinimum:
      return "bidding_minimum";
    case MechanismKind::AsymmetricFairShare:
      return "asymmetric_fair_share";
    case MechanismKind::GeneralCost:
      return "general_cost";
  }
  return "unknown";
}

inline MechanismConfig parse_mechanism(const Json& j, const std::string& where) {
  detail::only_keys(j, where, {"type", "horizon", "payment", "underbidding_allowance", "common_denominator"});
  MechanismConfig m;
  const auto type = detail::tag(j, where);
  if (type == "competitive_subsidy") {
    m.kind = MechanismKind::CompetitiveSubsidy;
  } else if (type == "bidding_minimum") {
    m.kind = MechanismKind::BiddingMinimum;
  } else if (type == "asymmetric_fair_share") {
    m.kind = MechanismKind::AsymmetricFairShare;
  } else if (type == "general_cost") {
    m.kind = MechanismKind::GeneralCost;
  } else {
    throw ConfigError(where + ": unknown mechanism type '" + type + "'");
  }
  m.horizon = detail::integer(j, where, "horizon");
  const std::string pw = where + ".payment";
  const auto& pay = detail::field(j, where, "payment");
  const auto ptype = detail::tag(pay, pw);
  if (ptype == "subsidy") {
    detail::only_keys(pay, pw, {"type", "b_bar"});
    m.payment = SubsidySchedule{detail::number(pay, pw, "b_bar")};
  } else if (ptype == "table") {
    detail::only_keys(pay, pw, {"type", "payments"});
    const auto& list = detail::field(pay, pw, "payments");
    if (!list.is_array()) throw ConfigError(pw + ".payments: expected a list of numbers");
    TableSchedule table;
    for (const auto& p : list) {
      if (!p.is_number()) throw ConfigError(pw + ".payments: expected a list of numbers");
      table.payments.push_back(p.get<double>());
    }
    m.payment = table;
  } else {
    throw ConfigError(pw + ": unknown payment type '" + ptype + "'");
  }
  if (j.contains("underbidding_allowance") && !j.at("underbidding_allowance").is_null()) {
    m.underbidding_allowance = detail::number(j, where, "underbidding_allowance");
  }
  if (j.contains("common_denominator")) {
    m.common_denominator = static_cast<int>(detail::integer(j, where, "common_denominator"));
  }
  return m;
}

inline Json to_json(const MechanismConfig& m) {
  Json j;
  j["type"] = mechanism_tag(m.kind);
  j["horizon"] = m.horizon;
  if (const auto* s = std::get_if<SubsidySchedule>(&m.payment)) {
    j["payment"] = {{"type", "subsidy"}, {"b_bar", s->b_bar}};
  } else {
    j["payment"] = {{"type", "table"}, {"payments", std::get<TableSchedule>(m.payment).payments}};
  }
  if (m.underbidding_allowance) j["underbidding_allowance"] = *m.underbidding_allowance;
  if (m.kind == MechanismKind::AsymmetricFairShare) j["common_denominator"] = m.common_denominator;
  return j;
}

// Parses and validates. Every failure surfaces as ConfigError.
inline ExperimentConfig parse_config(const Json& j) {
  detail::only_keys(j, "config", {"mechanism", "agents", "focal_agent", "replications", "base_seed", "threads"});
  ExperimentConfig c;
  c.mechanism = parse_mechanism(detail::field(j, "config", "mechanism"), "mechanism");
  const auto& agents = detail::field(j, "config", "agents");
  if (!agents.is_array() || agents.empty()) throw ConfigError("agents: expected a non-empty list");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string where = "agents[" + std::to_string(i) + "]";
    detail::only_keys(agents[i], where, {"fair_share", "dist", "strategy"});
    AgentSpec a;
    a.fair_share = detail::number(agents[i], where, "fair_share");
    a.dist = parse_distribution(detail::field(agents[i], where, "dist"), where + ".dist");
    a.strategy = parse_strategy(detail::field(agents[i], where, "strategy"), where + ".strategy");
    c.agents.push_back(std::move(a));
  }
  if (j.contains("focal_agent") && !j.at("focal_agent").is_null()) {
    const auto f = detail::integer(j, "config", "focal_agent");
    if (f < 0) throw ConfigError("config.focal_agent: must be >= 0");
    c.focal_agent = static_cast<AgentId>(f);
  }
  if (j.contains("replications")) c.replications = static_cast<int>(detail::integer(j, "config", "replications"));
  if (j.contains("base_seed")) {
    const auto& s = j.at("base_seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
      throw ConfigError("config.base_seed: expected a non-negative integer");
    }
    c.base_seed = s.get<std::uint64_t>();
  }
  if (j.contains("threads")) c.threads = static_cast<int>(detail::integer(j, "config", "threads"));
  try {
    validate(c);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return c;
}

inline Json to_json(const ExperimentConfig& c) {
  Json j;
  j["mechanism"] = to_json(c.mechanism);
  Json agents = Json::array();
  for (const auto& a : c.agents) {
    agents.push_back({{"fair_share", a.fair_share}, {"dist", to_json(a.dist)}, {"strategy", to_json(a.strategy)}});
  }
  j["agents"] = agents;
  if (c.focal_agent) j["focal_agent"] = *c.focal_agent;
  j["replications"] = c.replications;
  j["base_seed"] = c.base_seed;
  j["threads"] = c.threads;
  return j;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config_text(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// FNV-1a 64 of the canonical serialization (keys sorted), so reordering keys
// in the source file does not change it.
inline std::uint64_t config_hash(const ExperimentConfig& c) {
  const std::string text = to_json(c).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

}  // namespace artcredit
