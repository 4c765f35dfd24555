#pragma once

// Brute-force reference for edge-triggered rule evaluation over boolean
// properties. Deliberately shares no code with the simulation core: it has
// its own condition tree, evaluates every rule over every state up front,
// and runs the pass semantics on bitmasks.

#include "shine/scenario/spec.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace shine::testing {

struct OracleCond {
  enum class Op { var_is, all, any, negate };
  Op op = Op::var_is;
  int var = 0;
  bool value = true;
  std::vector<OracleCond> kids;

  bool eval(std::uint32_t state) const {
    switch (op) {
      case Op::var_is: return (((state >> var) & 1u) != 0) == value;
      case Op::all: return std::all_of(kids.begin(), kids.end(), [&](const OracleCond& k) { return k.eval(state); });
      case Op::any: return std::any_of(kids.begin(), kids.end(), [&](const OracleCond& k) { return k.eval(state); });
      case Op::negate: return !kids.front().eval(state);
    }
    return false;
  }
};

struct OracleRule {
  OracleCond cond;
  std::vector<std::pair<int, bool>> actions;  // var := value
  std::int64_t priority = 0;
};

/// Random boolean rule system: variables are (device, property) pairs laid
/// out device-major.
struct RuleSystem {
  int devices = 1;
  std::vector<int> props_per_device;
  std::vector<OracleRule> rules;
  std::uint32_t initial = 0;

  int vars() const { return std::accumulate(props_per_device.begin(), props_per_device.end(), 0); }
  std::pair<int, int> locate(int var) const {
    for (int d = 0; d < devices; ++d) {
      if (var < props_per_device[d]) return {d, var};
      var -= props_per_device[d];
    }
    return {-1, -1};
  }
  static std::string device_id(int d) { return "d" + std::to_string(d); }
  static std::string prop_name(int p) { return "p" + std::to_string(p); }
};

inline OracleCond random_cond(std::mt19937_64& rng, int vars, int depth) {
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 5 : 1);
  int choice = pick(rng);
  OracleCond c;
  if (choice <= 1) {
    c.op = OracleCond::Op::var_is;
    c.var = std::uniform_int_distribution<int>(0, vars - 1)(rng);
    c.value = std::bernoulli_distribution(0.5)(rng);
  } else if (choice <= 3) {
    c.op = choice == 2 ? OracleCond::Op::all : OracleCond::Op::any;
    int n = std::uniform_int_distribution<int>(2, 3)(rng);
    for (int i = 0; i < n; ++i) c.kids.push_back(random_cond(rng, vars, depth - 1));
  } else if (choice == 4) {
    c.op = OracleCond::Op::negate;
    c.kids.push_back(random_cond(rng, vars, depth - 1));
  } else {
    c.op = OracleCond::Op::var_is;
    c.var = std::uniform_int_distribution<int>(0, vars - 1)(rng);
    c.value = true;
  }
  return c;
}

/// At most 4 devices, 6 rules, boolean properties only.
inline RuleSystem random_rule_system(std::mt19937_64& rng) {
  RuleSystem sys;
  sys.devices = std::uniform_int_distribution<int>(1, 4)(rng);
  for (int d = 0; d < sys.devices; ++d) sys.props_per_device.push_back(std::uniform_int_distribution<int>(1, 2)(rng));
  int vars = sys.vars();
  int rules = std::uniform_int_distribution<int>(1, 6)(rng);
  for (int r = 0; r < rules; ++r) {
    OracleRule rule;
    rule.cond = random_cond(rng, vars, 2);
    int n = std::uniform_int_distribution<int>(1, 2)(rng);
    for (int a = 0; a < n; ++a) {
      rule.actions.emplace_back(std::uniform_int_distribution<int>(0, vars - 1)(rng),
                                std::bernoulli_distribution(0.5)(rng));
    }
    rule.priority = std::uniform_int_distribution<int>(0, 3)(rng);
    sys.rules.push_back(std::move(rule));
  }
  sys.initial = std::uniform_int_distribution<std::uint32_t>(0, (1u << vars) - 1)(rng);
  return sys;
}

inline std::string cond_text(const RuleSystem& sys, const OracleCond& c) {
  switch (c.op) {
    case OracleCond::Op::var_is: {
      auto [d, p] = sys.locate(c.var);
      return "device." + RuleSystem::device_id(d) + "." + RuleSystem::prop_name(p) + " == " +
             (c.value ? "true" : "false");
    }
    case OracleCond::Op::negate: return "NOT (" + cond_text(sys, c.kids.front()) + ")";
    case OracleCond::Op::all:
    case OracleCond::Op::any: {
      std::string out;
      for (std::size_t i = 0; i < c.kids.size(); ++i) {
        if (i) out += c.op == OracleCond::Op::all ? " AND " : " OR ";
        out += "(" + cond_text(sys, c.kids[i]) + ")";
      }
      return out;
    }
  }
  return "";
}

/// Rendering of the system as a scenario; condition text goes through the
/// real parser.
ScenarioSpec to_scenario(const RuleSystem& sys);

struct OracleFiring {
  int rule = 0;
  int depth = 0;
  bool operator==(const OracleFiring&) const = default;
};

struct OracleChange {
  int var = 0;
  bool from = false;
  bool to = false;
  bool operator==(const OracleChange&) const = default;
};

struct OracleResult {
  std::vector<OracleFiring> firings;
  std::vector<OracleChange> changes;
  std::uint32_t final_state = 0;
  bool truncated = false;
};

/// `prior_all_false` models session start, where every true rule is a fresh edge.
inline OracleResult oracle_fixpoint(const RuleSystem& sys, std::uint32_t before, std::uint32_t after,
                                    bool prior_all_false, int depth_limit) {
  const int vars = sys.vars();
  const std::uint32_t states = 1u << vars;
  const int n = static_cast<int>(sys.rules.size());

  // Exhaustive truth table: table[r][s] for every rule and every state.
  std::vector<std::vector<bool>> table(n, std::vector<bool>(states));
  for (int r = 0; r < n; ++r) {
    for (std::uint32_t s = 0; s < states; ++s) table[r][s] = sys.rules[r].cond.eval(s);
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return sys.rules[a].priority < sys.rules[b].priority; });

  OracleResult res;
  std::uint32_t state = after;
  std::vector<bool> prev(n);
  for (int r = 0; r < n; ++r) prev[r] = prior_all_false ? false : table[r][before];
  for (int depth = 1;; ++depth) {
    std::vector<bool> now(n);
    std::vector<int> fire;
    for (int r : order) {
      now[r] = table[r][state];
      if (now[r] && !prev[r]) fire.push_back(r);
    }
    if (fire.empty()) break;
    if (depth > depth_limit) {
      res.truncated = true;
      break;
    }
    for (int r : fire) {
      res.firings.push_back({r, depth});
      for (auto [var, value] : sys.rules[r].actions) {
        bool cur = (state >> var) & 1u;
        if (cur == value) continue;
        res.changes.push_back({var, cur, value});
        state = value ? (state | (1u << var)) : (state & ~(1u << var));
      }
    }
    prev = now;
  }
  res.final_state = state;
  return res;
}

}  // namespace shine::testing
