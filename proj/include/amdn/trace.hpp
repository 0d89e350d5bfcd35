#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "amdn/errors.hpp"
#include "amdn/pddl.hpp"
#include "amdn/sexpr.hpp"

namespace amdn {

// Actions that may run in any order or simultaneously. Order is kept as
// observed; it is data.
using ParallelSet = std::vector<GroundAction>;

struct Step {
  ParallelSet actions;
  std::optional<State> obs;  // observation after the set, if any

  bool operator==(const Step&) const = default;
};

struct PlanTrace {
  ObjectTable objects;
  State init;
  std::vector<Step> steps;
  State goal;

  bool operator==(const PlanTrace&) const = default;

  // Distance between the sets at (0-based) step indices i and j.
  static std::size_t distance(std::size_t i, std::size_t j) { return i > j ? i - j : j - i; }

  std::size_t num_actions() const {
    std::size_t n = 0;
    for (const auto& s : steps) n += s.actions.size();
    return n;
  }

  // Observation immediately before step i: init for the first step,
  // otherwise whatever is attached to step i-1.
  const State* observation_before(std::size_t i) const {
    if (i == 0) return &init;
    return steps[i - 1].obs ? &*steps[i - 1].obs : nullptr;
  }

  // Observation immediately after step i; the goal stands in after the final
  // step when that step carries no observation of its own.
  const State* observation_after(std::size_t i) const {
    if (steps[i].obs) return &*steps[i].obs;
    return i + 1 == steps.size() ? &goal : nullptr;
  }
};

inline void validate_trace(const Domain& d, const PlanTrace& t) {
  for (const auto& [obj, type] : t.objects)
    if (!d.types.contains(type)) throw ValidationError("object '" + obj + "' has undeclared type '" + type + "'");
  if (t.steps.empty()) throw ValidationError("trace has no steps");
  for (const auto& p : t.init) validate_proposition(d, t.objects, p);
  for (const auto& p : t.goal) validate_proposition(d, t.objects, p);
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const Step& s = t.steps[i];
    if (s.actions.empty()) throw ValidationError("step " + std::to_string(i + 1) + " has no actions");
    std::set<GroundAction> seen;
    for (const auto& g : s.actions) {
      validate_action(d, t.objects, g);
      if (!seen.insert(g).second)
        throw ValidationError("duplicate action " + to_string(g) + " in step " + std::to_string(i + 1));
    }
    if (s.obs)
      for (const auto& p : *s.obs) validate_proposition(d, t.objects, p);
  }
}

namespace detail {

inline State parse_state(const sexpr::Node& sec) {
  State s;
  for (std::size_t k = 1; k < sec.items.size(); ++k) s.insert(parse_ground(sec.items[k]));
  return s;
}

inline PlanTrace parse_trace(const sexpr::Node& form) {
  if (!form.has_head("trace")) sexpr::fail_at(form, "expected (trace ...)");
  PlanTrace t;
  bool have_goal = false;
  for (std::size_t i = 1; i < form.items.size(); ++i) {
    const sexpr::Node& sec = sexpr::expect_list(form.items[i], "trace section");
    if (sec.items.empty()) sexpr::fail_at(sec, "empty trace section");
    const std::string& head = sexpr::expect_atom(sec.items[0], "trace keyword");
    if (head == ":objects") {
      for (auto& [obj, type] : typed_list(sec.items, 1)) t.objects[obj] = type;
    } else if (head == ":init") {
      t.init = parse_state(sec);
    } else if (head == ":goal") {
      if (have_goal) sexpr::fail_at(sec, "duplicate :goal");
      have_goal = true;
      t.goal = parse_state(sec);
    } else if (head == ":step") {
      if (have_goal) sexpr::fail_at(sec, ":step after :goal");
      Step step;
      bool have_actions = false;
      for (std::size_t k = 1; k < sec.items.size(); ++k) {
        const sexpr::Node& part = sexpr::expect_list(sec.items[k], "step part");
        if (part.has_head(":actions")) {
          if (have_actions) sexpr::fail_at(part, "duplicate :actions");
          have_actions = true;
          for (std::size_t a = 1; a < part.items.size(); ++a)
            step.actions.push_back(parse_ground_action(part.items[a]));
        } else if (part.has_head(":obs")) {
          if (step.obs) sexpr::fail_at(part, "duplicate :obs");
          step.obs = parse_state(part);
        } else {
          sexpr::fail_at(part, "expected (:actions ...) or (:obs ...)");
        }
      }
      if (!have_actions) sexpr::fail_at(sec, "step without (:actions ...)");
      t.steps.push_back(std::move(step));
    } else {
      sexpr::fail_at(sec, "unknown trace section '" + head + "'");
    }
  }
  if (!have_goal) sexpr::fail_at(form, "trace without (:goal ...)");
  return t;
}

inline void write_state(std::ostringstream& os, const State& s) {
  for (const auto& p : s) os << " " << to_string(p);
}

}  // namespace detail

// Parses every (trace ...) form. When `domain` is given, each trace is
// validated against it.
inline std::vector<PlanTrace> read_traces(std::string_view text, const Domain* domain = nullptr) {
  std::vector<PlanTrace> out;
  for (const auto& form : sexpr::read_all(text)) {
    out.push_back(detail::parse_trace(form));
    if (domain) {
      try {
        validate_trace(*domain, out.back());
      } catch (const ValidationError& e) {
        throw ValidationError("trace " + std::to_string(out.size()) + " (line " + std::to_string(form.line) +
                              "): " + e.what());
      }
    }
  }
  return out;
}

inline std::string write_trace(const PlanTrace& t) {
  std::ostringstream os;
  os << "(trace\n  (:objects";
  for (const auto& [obj, type] : t.objects) os << " " << obj << " - " << type;
  os << ")\n  (:init";
  detail::write_state(os, t.init);
  os << ")";
  for (const auto& s : t.steps) {
    os << "\n  (:step (:actions";
    for (const auto& g : s.actions) os << " " << to_string(g);
    os << ")";
    if (s.obs) {
      os << " (:obs";
      detail::write_state(os, *s.obs);
      os << ")";
    }
    os << ")";
  }
  os << "\n  (:goal";
  detail::write_state(os, t.goal);
  os << "))\n";
  return os.str();
}

inline std::string write_traces(const std::vector<PlanTrace>& traces) {
  std::string out;
  for (const auto& t : traces) out += write_trace(t);
  return out;
}

// ---------------------------------------------------------------------------
// Occurrence tables.

// (schema, candidate literal) key of a lifted count.
struct LiftedKey {
  std::string schema;
  Literal literal;
  auto operator<=>(const LiftedKey&) const = default;
};

// Lifted counts are fixed-point: an occurrence that lifts to k candidate
// literals adds 1/k to each, so evidence is not double counted. The scale is
// divisible by every k up to 16, which keeps counts exact and independent of
// summation order.
inline constexpr std::int64_t kCountScale = 720720;

struct OccurrenceTables {
  std::map<LiftedKey, std::int64_t> after;   // (schema, literal) seen right after the action, scaled
  std::map<LiftedKey, std::int64_t> before;  // (schema, literal) seen right before the action, scaled
  std::map<std::string, std::int64_t> by_predicate;  // count(r), lifted to the predicate
  std::int64_t total = 0;                    // every observed proposition
  std::map<std::string, std::int64_t> actions_after;   // occurrences of a schema followed by an observation
  std::map<std::string, std::int64_t> actions_before;  // occurrences of a schema preceded by an observation

  static double value(std::int64_t scaled) { return static_cast<double>(scaled) / kCountScale; }

  double after_count(const std::string& schema, const Literal& l) const {
    auto it = after.find({schema, l});
    return it == after.end() ? 0.0 : value(it->second);
  }
  double before_count(const std::string& schema, const Literal& l) const {
    auto it = before.find({schema, l});
    return it == before.end() ? 0.0 : value(it->second);
  }
  std::int64_t predicate_count(const std::string& pred) const {
    auto it = by_predicate.find(pred);
    return it == by_predicate.end() ? 0 : it->second;
  }

  // Fraction of the schema's observed occurrences that carried the literal.
  double support_after(const LiftedKey& k) const { return support(after, actions_after, k); }
  double support_before(const LiftedKey& k) const { return support(before, actions_before, k); }

 private:
  static double support(const std::map<LiftedKey, std::int64_t>& table,
                        const std::map<std::string, std::int64_t>& occurrences, const LiftedKey& k) {
    auto o = occurrences.find(k.schema);
    if (o == occurrences.end() || o->second == 0) return 0.0;
    auto it = table.find(k);
    return it == table.end() ? 0.0 : value(it->second) / static_cast<double>(o->second);
  }
};

namespace detail {

inline void tally_liftings(std::map<LiftedKey, std::int64_t>& table, const LiftingIndex& index,
                           const GroundAction& g, const State& obs) {
  for (const auto& p : obs) {
    auto lifts = index.unbind(g, p);
    if (lifts.empty()) continue;
    std::int64_t share = kCountScale / static_cast<std::int64_t>(lifts.size());
    for (auto& l : lifts) table[{g.schema, std::move(l)}] += share;
  }
}

}  // namespace detail

inline OccurrenceTables occurrence_tables(const std::vector<PlanTrace>& traces, const LiftingIndex& index) {
  OccurrenceTables t;
  auto observe = [&t](const State& s) {
    for (const auto& p : s) {
      ++t.by_predicate[p.predicate];
      ++t.total;
    }
  };
  for (const auto& tr : traces) {
    observe(tr.init);
    for (const auto& s : tr.steps)
      if (s.obs) observe(*s.obs);
    observe(tr.goal);
    for (std::size_t i = 0; i < tr.steps.size(); ++i) {
      const State* after = tr.observation_after(i);
      const State* before = tr.observation_before(i);
      for (const auto& g : tr.steps[i].actions) {
        if (after) {
          ++t.actions_after[g.schema];
          detail::tally_liftings(t.after, index, g, *after);
        }
        if (before) {
          ++t.actions_before[g.schema];
          detail::tally_liftings(t.before, index, g, *before);
        }
      }
    }
  }
  return t;
}

}  // namespace amdn
