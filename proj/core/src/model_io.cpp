#include <nlohmann/json.hpp>

#include "cspphase/errors.hpp"
#include "cspphase/model.hpp"

namespace cspphase {

using nlohmann::json;

namespace {

json parse_or_throw(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

ConstraintModel model_from_json(const std::string& text) {
  const json j = parse_or_throw(text);
  try {
    const int q = j.at("q").get<int>();
    const int k = j.at("k").get<int>();
    Closure closure = Closure::kExplicit;
    if (j.contains("closure")) {
      const auto c = j.at("closure").get<std::string>();
      if (c == "sign-permutation") {
        closure = Closure::kSignPermutation;
      } else if (c != "explicit") {
        throw ConfigError("unknown closure: " + c);
      }
    }
    std::vector<WeightEntry> weights;
    for (const auto& w : j.at("weights")) {
      weights.push_back({WeightTable(q, k, w.at("table").get<std::vector<double>>()), w.at("prob").get<double>()});
    }
    std::string name = j.value("name", std::string("custom"));
    return ConstraintModel(q, k, std::move(weights), name, closure);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid model JSON: ") + e.what());
  }
}

std::string model_to_json(const ConstraintModel& model) {
  json j;
  j["name"] = model.name();
  j["q"] = model.q();
  j["k"] = model.k();
  if (model.closure() == Closure::kSignPermutation) j["closure"] = "sign-permutation";
  json ws = json::array();
  for (const auto& w : model.base()) {
    ws.push_back({{"prob", w.prob}, {"table", std::vector<double>(w.table.values().begin(), w.table.values().end())}});
  }
  j["weights"] = std::move(ws);
  return j.dump();
}

FactorGraphInstance instance_from_json(const std::string& text) {
  const json j = parse_or_throw(text);
  try {
    FactorGraphInstance inst;
    inst.n = j.at("n").get<int>();
    for (const auto& c : j.at("constraints")) {
      inst.constraints.push_back({c.at("vars").get<std::vector<int>>(), c.at("w").get<std::uint64_t>()});
    }
    if (j.contains("pins")) {
      for (const auto& p : j.at("pins")) inst.pins.push_back({p.at("var").get<int>(), p.at("value").get<int>()});
    }
    return inst;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid instance JSON: ") + e.what());
  }
}

std::string instance_to_json(const FactorGraphInstance& inst) {
  json j;
  j["n"] = inst.n;
  json cs = json::array();
  for (const auto& c : inst.constraints) cs.push_back({{"vars", c.vars}, {"w", c.w}});
  j["constraints"] = std::move(cs);
  if (!inst.pins.empty()) {
    json ps = json::array();
    for (const auto& p : inst.pins) ps.push_back({{"var", p.var}, {"value", p.value}});
    j["pins"] = std::move(ps);
  }
  return j.dump();
}

}  // namespace cspphase
