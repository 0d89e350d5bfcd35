#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "amdn/errors.hpp"
#include "amdn/sexpr.hpp"

namespace amdn {

inline constexpr std::string_view kRootType = "object";

// Single-inheritance type hierarchy rooted at "object".
class TypeTree {
 public:
  TypeTree() = default;

  void add(const std::string& name, const std::string& parent) {
    if (name == kRootType) throw SemanticError("type 'object' cannot be redeclared");
    if (parent != kRootType && !parent_.count(parent))
      throw SemanticError("undeclared parent type '" + parent + "' for type '" + name + "'");
    auto [it, fresh] = parent_.emplace(name, parent);
    if (!fresh && it->second != parent)
      throw SemanticError("type '" + name + "' declared with two parents");
  }

  bool contains(std::string_view name) const {
    return name == kRootType || parent_.count(std::string(name)) > 0;
  }

  // Parent of a non-root type.
  const std::string& parent(const std::string& name) const {
    auto it = parent_.find(name);
    if (it == parent_.end()) throw SemanticError("undeclared type '" + name + "'");
    return it->second;
  }

  // Reflexive-transitive subtype test.
  bool is_subtype(const std::string& sub, const std::string& super) const {
    if (super == kRootType) return contains(sub);
    std::string cur = sub;
    for (std::size_t guard = 0; guard <= parent_.size(); ++guard) {
      if (cur == super) return true;
      if (cur == kRootType) return false;
      auto it = parent_.find(cur);
      if (it == parent_.end()) return false;
      cur = it->second;
    }
    return false;
  }

  // Declared types without the root, sorted.
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : parent_) out.push_back(name);
    return out;
  }

  const std::map<std::string, std::string>& parents() const { return parent_; }

  bool operator==(const TypeTree&) const = default;

 private:
  std::map<std::string, std::string> parent_;
};

struct PredicateSchema {
  std::string name;
  std::vector<std::string> param_types;

  std::size_t arity() const { return param_types.size(); }
  auto operator<=>(const PredicateSchema&) const = default;
};

// A lifted literal: a predicate whose arguments name parameter slots of a
// host action schema. Used both for schema bodies and as the learner's
// candidate literals.
struct Literal {
  std::string predicate;
  std::vector<std::size_t> args;

  auto operator<=>(const Literal&) const = default;
};
using CandidateLiteral = Literal;
using LiteralSet = std::set<Literal>;

struct Parameter {
  std::string name;
  std::string type;
  auto operator<=>(const Parameter&) const = default;
};

enum class Slot { pre = 0, add = 1, del = 2 };
inline constexpr Slot kSlots[] = {Slot::pre, Slot::add, Slot::del};

inline const char* slot_name(Slot s) {
  switch (s) {
    case Slot::pre: return "pre";
    case Slot::add: return "add";
    case Slot::del: return "del";
  }
  return "?";
}

inline Slot parse_slot(std::string_view s) {
  if (s == "pre") return Slot::pre;
  if (s == "add") return Slot::add;
  if (s == "del") return Slot::del;
  throw FormatError("unknown slot '" + std::string(s) + "'");
}

struct ActionSchema {
  std::string name;
  std::vector<Parameter> params;
  LiteralSet pre;
  LiteralSet add;
  LiteralSet del;
  bool has_body = false;

  const LiteralSet& slot(Slot s) const {
    return s == Slot::pre ? pre : s == Slot::add ? add : del;
  }
  LiteralSet& slot(Slot s) { return s == Slot::pre ? pre : s == Slot::add ? add : del; }

  bool operator==(const ActionSchema&) const = default;
};

// A ground atom, e.g. (at t0 dp0).
struct Proposition {
  std::string predicate;
  std::vector<std::string> args;

  auto operator<=>(const Proposition&) const = default;
};
using State = std::set<Proposition>;

struct GroundAction {
  std::string schema;
  std::vector<std::string> args;

  auto operator<=>(const GroundAction&) const = default;
};

inline std::string to_string(const Proposition& p) {
  std::string s = "(" + p.predicate;
  for (const auto& a : p.args) s += " " + a;
  return s + ")";
}

inline std::string to_string(const GroundAction& g) {
  std::string s = "(" + g.schema;
  for (const auto& a : g.args) s += " " + a;
  return s + ")";
}

inline std::string to_string(const Literal& l, const std::vector<Parameter>& params) {
  std::string s = "(" + l.predicate;
  for (auto i : l.args) s += " " + (i < params.size() ? params[i].name : "?#" + std::to_string(i));
  return s + ")";
}

// Parameter-index form, independent of parameter names: (at #0 #1).
inline std::string to_string(const Literal& l) {
  std::string s = "(" + l.predicate;
  for (auto i : l.args) s += " #" + std::to_string(i);
  return s + ")";
}

// Typed objects of a problem or trace; name -> type.
using ObjectTable = std::map<std::string, std::string>;

struct Domain {
  std::string name;
  TypeTree types;
  std::vector<PredicateSchema> predicates;  // sorted by name
  std::vector<ActionSchema> actions;        // sorted by name

  const PredicateSchema* find_predicate(std::string_view n) const {
    auto it = std::lower_bound(predicates.begin(), predicates.end(), n,
                               [](const PredicateSchema& p, std::string_view k) { return p.name < k; });
    return it != predicates.end() && it->name == n ? &*it : nullptr;
  }
  const ActionSchema* find_action(std::string_view n) const {
    auto it = std::lower_bound(actions.begin(), actions.end(), n,
                               [](const ActionSchema& a, std::string_view k) { return a.name < k; });
    return it != actions.end() && it->name == n ? &*it : nullptr;
  }
  ActionSchema* find_action(std::string_view n) {
    return const_cast<ActionSchema*>(std::as_const(*this).find_action(n));
  }
  const ActionSchema& action(std::string_view n) const {
    const ActionSchema* a = find_action(n);
    if (!a) throw SchemaMismatch("unknown action schema '" + std::string(n) + "'");
    return *a;
  }

  // Same signatures with every body cleared.
  Domain skeleton() const {
    Domain d = *this;
    for (auto& a : d.actions) {
      a.pre.clear();
      a.add.clear();
      a.del.clear();
      a.has_body = false;
    }
    return d;
  }

  bool operator==(const Domain&) const = default;
};

struct Problem {
  std::string name;
  std::string domain_name;
  ObjectTable objects;
  State init;
  State goal;
};

// ---------------------------------------------------------------------------
// Candidate literals, bind / unbind.

// Every literal formable by binding each predicate argument to a
// type-compatible parameter of `schema` (repeats allowed, no constants), in
// lexicographic order.
inline std::vector<CandidateLiteral> candidate_literals(const ActionSchema& schema, const Domain& domain) {
  std::vector<CandidateLiteral> out;
  for (const auto& pred : domain.predicates) {
    std::vector<std::vector<std::size_t>> choices(pred.arity());
    bool empty = false;
    for (std::size_t k = 0; k < pred.arity(); ++k) {
      for (std::size_t j = 0; j < schema.params.size(); ++j)
        if (domain.types.is_subtype(schema.params[j].type, pred.param_types[k])) choices[k].push_back(j);
      if (choices[k].empty()) empty = true;
    }
    if (empty) continue;
    std::vector<std::size_t> pick(pred.arity(), 0);
    for (;;) {
      Literal lit{pred.name, {}};
      for (std::size_t k = 0; k < pred.arity(); ++k) lit.args.push_back(choices[k][pick[k]]);
      out.push_back(std::move(lit));
      std::size_t k = pred.arity();
      bool carry = true;
      while (carry && k > 0) {
        --k;
        if (++pick[k] < choices[k].size()) carry = false;
        else pick[k] = 0;
      }
      if (carry) break;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline void check_host(const ActionSchema& schema, const GroundAction& ground) {
  if (ground.schema != schema.name)
    throw SchemaMismatch("ground action " + to_string(ground) + " is not an instance of '" + schema.name + "'");
  if (ground.args.size() != schema.params.size())
    throw SchemaMismatch("ground action " + to_string(ground) + " has " + std::to_string(ground.args.size()) +
                         " arguments, schema '" + schema.name + "' expects " +
                         std::to_string(schema.params.size()));
}

inline Proposition bind(const ActionSchema& schema, const GroundAction& ground, const Literal& lit) {
  check_host(schema, ground);
  Proposition p{lit.predicate, {}};
  for (auto i : lit.args) {
    if (i >= ground.args.size())
      throw SchemaMismatch("literal " + to_string(lit) + " refers past the parameters of '" + schema.name + "'");
    p.args.push_back(ground.args[i]);
  }
  return p;
}

inline State bind_all(const ActionSchema& schema, const GroundAction& ground, const LiteralSet& lits) {
  State out;
  for (const auto& l : lits) out.insert(bind(schema, ground, l));
  return out;
}

// Every candidate literal of the schema that binds to `prop`. `candidates`
// must be the sorted output of candidate_literals for the same schema.
inline std::vector<CandidateLiteral> unbind(const ActionSchema& schema, const GroundAction& ground,
                                            const Proposition& prop,
                                            const std::vector<CandidateLiteral>& candidates) {
  check_host(schema, ground);
  std::vector<std::vector<std::size_t>> choices(prop.args.size());
  for (std::size_t k = 0; k < prop.args.size(); ++k) {
    for (std::size_t j = 0; j < ground.args.size(); ++j)
      if (ground.args[j] == prop.args[k]) choices[k].push_back(j);
    if (choices[k].empty()) return {};
  }
  std::vector<CandidateLiteral> out;
  std::vector<std::size_t> pick(prop.args.size(), 0);
  for (;;) {
    Literal lit{prop.predicate, {}};
    for (std::size_t k = 0; k < pick.size(); ++k) lit.args.push_back(choices[k][pick[k]]);
    if (std::binary_search(candidates.begin(), candidates.end(), lit)) out.push_back(std::move(lit));
    std::size_t k = pick.size();
    bool carry = true;
    while (carry && k > 0) {
      --k;
      if (++pick[k] < choices[k].size()) carry = false;
      else pick[k] = 0;
    }
    if (carry) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<CandidateLiteral> unbind(const ActionSchema& schema, const GroundAction& ground,
                                            const Proposition& prop, const Domain& domain) {
  return unbind(schema, ground, prop, candidate_literals(schema, domain));
}

// Caches candidate literals per schema so repeated lifting stays cheap.
class LiftingIndex {
 public:
  explicit LiftingIndex(const Domain& domain) : domain_(&domain) {
    for (const auto& a : domain.actions) candidates_.emplace(a.name, candidate_literals(a, domain));
  }
  explicit LiftingIndex(Domain&&) = delete;  // keeps a pointer to the domain

  const Domain& domain() const { return *domain_; }

  const std::vector<CandidateLiteral>& candidates(std::string_view schema) const {
    auto it = candidates_.find(std::string(schema));
    if (it == candidates_.end()) throw SchemaMismatch("unknown action schema '" + std::string(schema) + "'");
    return it->second;
  }

  std::vector<CandidateLiteral> unbind(const GroundAction& g, const Proposition& p) const {
    return amdn::unbind(domain_->action(g.schema), g, p, candidates(g.schema));
  }

  Proposition bind(const GroundAction& g, const Literal& l) const {
    return amdn::bind(domain_->action(g.schema), g, l);
  }

 private:
  const Domain* domain_;
  std::map<std::string, std::vector<CandidateLiteral>> candidates_;
};

// ---------------------------------------------------------------------------
// Grounding helpers.

inline bool object_has_type(const Domain& d, const ObjectTable& objects, const std::string& obj,
                            const std::string& type) {
  auto it = objects.find(obj);
  return it != objects.end() && d.types.is_subtype(it->second, type);
}

// Checks arity and object typing of a proposition.
inline void validate_proposition(const Domain& d, const ObjectTable& objects, const Proposition& p) {
  const PredicateSchema* ps = d.find_predicate(p.predicate);
  if (!ps) throw ValidationError("unknown predicate in " + to_string(p));
  if (ps->arity() != p.args.size())
    throw ValidationError("arity mismatch in " + to_string(p) + ": expected " + std::to_string(ps->arity()));
  for (std::size_t k = 0; k < p.args.size(); ++k) {
    if (!objects.count(p.args[k])) throw ValidationError("undeclared object '" + p.args[k] + "' in " + to_string(p));
    if (!object_has_type(d, objects, p.args[k], ps->param_types[k]))
      throw ValidationError("object '" + p.args[k] + "' in " + to_string(p) + " is not of type '" +
                            ps->param_types[k] + "'");
  }
}

inline void validate_action(const Domain& d, const ObjectTable& objects, const GroundAction& g) {
  const ActionSchema* a = d.find_action(g.schema);
  if (!a) throw ValidationError("unknown action " + to_string(g));
  if (a->params.size() != g.args.size())
    throw ValidationError("arity mismatch in " + to_string(g) + ": expected " + std::to_string(a->params.size()));
  for (std::size_t k = 0; k < g.args.size(); ++k) {
    if (!objects.count(g.args[k])) throw ValidationError("undeclared object '" + g.args[k] + "' in " + to_string(g));
    if (!object_has_type(d, objects, g.args[k], a->params[k].type))
      throw ValidationError("object '" + g.args[k] + "' in " + to_string(g) + " is not of type '" +
                            a->params[k].type + "'");
  }
}

// All type-correct tuples over `objects` for the given parameter types.
inline std::vector<std::vector<std::string>> typed_tuples(const Domain& d, const ObjectTable& objects,
                                                          const std::vector<std::string>& types) {
  std::vector<std::vector<std::string>> pools(types.size());
  for (std::size_t k = 0; k < types.size(); ++k) {
    for (const auto& [obj, t] : objects)
      if (d.types.is_subtype(t, types[k])) pools[k].push_back(obj);
    if (pools[k].empty()) return {};
  }
  std::vector<std::vector<std::string>> out;
  std::vector<std::size_t> pick(types.size(), 0);
  for (;;) {
    std::vector<std::string> tuple;
    for (std::size_t k = 0; k < types.size(); ++k) tuple.push_back(pools[k][pick[k]]);
    out.push_back(std::move(tuple));
    std::size_t k = types.size();
    bool carry = true;
    while (carry && k > 0) {
      --k;
      if (++pick[k] < pools[k].size()) carry = false;
      else pick[k] = 0;
    }
    if (carry) break;
  }
  return out;
}

// R_O: every proposition instantiable from the domain's predicates.
inline std::vector<Proposition> ground_propositions(const Domain& d, const ObjectTable& objects) {
  std::vector<Proposition> out;
  for (const auto& p : d.predicates)
    for (auto& tuple : typed_tuples(d, objects, p.param_types)) out.push_back({p.name, std::move(tuple)});
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<GroundAction> ground_actions(const Domain& d, const ObjectTable& objects) {
  std::vector<GroundAction> out;
  for (const auto& a : d.actions) {
    std::vector<std::string> types;
    for (const auto& p : a.params) types.push_back(p.type);
    for (auto& tuple : typed_tuples(d, objects, types)) out.push_back({a.name, std::move(tuple)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parsing.

namespace detail {

using sexpr::Node;

// "a b - t c" -> (a,t) (b,t) (c,object)
inline std::vector<std::pair<std::string, std::string>> typed_list(const std::vector<Node>& items,
                                                                   std::size_t begin) {
  std::vector<std::pair<std::string, std::string>> out;
  std::vector<std::string> pending;
  for (std::size_t i = begin; i < items.size(); ++i) {
    const Node& n = items[i];
    if (n.is_list) {
      if (n.has_head("either")) throw UnsupportedFeature("'either' types are not supported");
      sexpr::fail_at(n, "expected a name in typed list");
    }
    if (n.atom == "-") {
      if (i + 1 >= items.size()) sexpr::fail_at(n, "expected a type after '-'");
      const Node& t = items[i + 1];
      if (t.has_head("either")) throw UnsupportedFeature("'either' types are not supported");
      const std::string& type = sexpr::expect_atom(t, "type name");
      if (pending.empty()) sexpr::fail_at(n, "'-' without preceding names");
      for (auto& p : pending) out.emplace_back(std::move(p), type);
      pending.clear();
      ++i;
    } else {
      pending.push_back(n.atom);
    }
  }
  for (auto& p : pending) out.emplace_back(std::move(p), std::string(kRootType));
  return out;
}

inline void reject_unsupported_head(const Node& n) {
  static const char* const kBad[] = {"not", "or", "forall", "exists", "when", "imply", "=", "increase", "decrease"};
  if (!n.is_list || n.items.empty() || n.items[0].is_list) return;
  for (const char* b : kBad)
    if (n.items[0].atom == b)
      throw UnsupportedFeature("'" + n.items[0].atom + "' at line " + std::to_string(n.line) +
                               " is outside the :strips/:typing subset");
}

inline Literal parse_lifted(const Node& n, const Domain& d, const std::vector<Parameter>& params) {
  sexpr::expect_list(n, "literal");
  if (n.items.empty()) sexpr::fail_at(n, "empty literal");
  reject_unsupported_head(n);
  const std::string& pred = sexpr::expect_atom(n.items[0], "predicate name");
  const PredicateSchema* ps = d.find_predicate(pred);
  if (!ps) throw SemanticError("undeclared predicate '" + pred + "' at line " + std::to_string(n.line));
  if (n.items.size() - 1 != ps->arity())
    throw SemanticError("arity mismatch for '" + pred + "' at line " + std::to_string(n.line) + ": expected " +
                        std::to_string(ps->arity()) + ", found " + std::to_string(n.items.size() - 1));
  Literal lit{pred, {}};
  for (std::size_t k = 1; k < n.items.size(); ++k) {
    const std::string& arg = sexpr::expect_atom(n.items[k], "argument");
    if (arg.empty() || arg[0] != '?')
      throw UnsupportedFeature("constant '" + arg + "' in operator body at line " + std::to_string(n.line));
    auto it = std::find_if(params.begin(), params.end(), [&](const Parameter& p) { return p.name == arg; });
    if (it == params.end())
      throw SemanticError("undeclared parameter '" + arg + "' at line " + std::to_string(n.line));
    std::size_t idx = static_cast<std::size_t>(it - params.begin());
    if (!d.types.is_subtype(it->type, ps->param_types[k - 1]))
      throw SemanticError("parameter '" + arg + "' of type '" + it->type + "' does not fit argument " +
                          std::to_string(k) + " of '" + pred + "' (type '" + ps->param_types[k - 1] + "')");
    lit.args.push_back(idx);
  }
  return lit;
}

// Flattens (and a b c) / a single literal / () into literal nodes.
inline std::vector<const Node*> conjuncts(const Node& n) {
  sexpr::expect_list(n, "formula");
  if (n.items.empty()) return {};
  if (n.has_head("and")) {
    std::vector<const Node*> out;
    for (std::size_t i = 1; i < n.items.size(); ++i) out.push_back(&n.items[i]);
    return out;
  }
  return {&n};
}

inline ActionSchema parse_action(const Node& form, const Domain& d) {
  if (form.items.size() < 2) sexpr::fail_at(form, "expected action name");
  ActionSchema a;
  a.name = sexpr::expect_atom(form.items[1], "action name");
  for (std::size_t i = 2; i < form.items.size(); ++i) {
    const Node& key = form.items[i];
    const std::string& k = sexpr::expect_atom(key, "action keyword");
    if (i + 1 >= form.items.size()) sexpr::fail_at(key, "expected a value after " + k);
    const Node& val = form.items[++i];
    if (k == ":parameters") {
      sexpr::expect_list(val, "parameter list");
      for (auto& [name, type] : typed_list(val.items, 0)) {
        if (name.empty() || name[0] != '?') sexpr::fail_at(val, "parameter '" + name + "' must start with '?'");
        if (!d.types.contains(type)) throw SemanticError("undeclared type '" + type + "' in action '" + a.name + "'");
        for (const auto& p : a.params)
          if (p.name == name) throw SemanticError("duplicate parameter '" + name + "' in action '" + a.name + "'");
        a.params.push_back({name, type});
      }
    } else if (k == ":precondition") {
      a.has_body = true;
      for (const Node* c : conjuncts(val)) a.pre.insert(parse_lifted(*c, d, a.params));
    } else if (k == ":effect") {
      a.has_body = true;
      for (const Node* c : conjuncts(val)) {
        if (c->has_head("not")) {
          if (c->items.size() != 2) sexpr::fail_at(*c, "malformed negative effect");
          a.del.insert(parse_lifted(c->items[1], d, a.params));
        } else {
          a.add.insert(parse_lifted(*c, d, a.params));
        }
      }
    } else {
      throw UnsupportedFeature("action keyword '" + k + "' is not supported");
    }
  }
  return a;
}

inline Proposition parse_ground(const Node& n) {
  sexpr::expect_list(n, "proposition");
  if (n.items.empty()) sexpr::fail_at(n, "empty proposition");
  reject_unsupported_head(n);
  Proposition p{sexpr::expect_atom(n.items[0], "predicate name"), {}};
  for (std::size_t k = 1; k < n.items.size(); ++k) p.args.push_back(sexpr::expect_atom(n.items[k], "object"));
  return p;
}

inline GroundAction parse_ground_action(const Node& n) {
  sexpr::expect_list(n, "action");
  if (n.items.empty()) sexpr::fail_at(n, "empty action");
  GroundAction g{sexpr::expect_atom(n.items[0], "action name"), {}};
  for (std::size_t k = 1; k < n.items.size(); ++k) g.args.push_back(sexpr::expect_atom(n.items[k], "object"));
  return g;
}

inline Node single_form(std::string_view text, const char* what) {
  std::vector<Node> forms = sexpr::read_all(text);
  if (forms.size() != 1)
    throw SyntaxError(std::string("expected exactly one ") + what + " form, found " + std::to_string(forms.size()),
                      1, 1);
  return std::move(forms[0]);
}

}  // namespace detail

inline Domain parse_domain(std::string_view text) {
  using sexpr::Node;
  const Node root = detail::single_form(text, "define");
  if (!root.has_head("define")) sexpr::fail_at(root, "expected (define ...)");
  if (root.items.size() < 2 || !root.items[1].has_head("domain") || root.items[1].items.size() != 2)
    sexpr::fail_at(root, "expected (domain <name>)");
  Domain d;
  d.name = sexpr::expect_atom(root.items[1].items[1], "domain name");

  std::vector<const Node*> action_forms;
  for (std::size_t i = 2; i < root.items.size(); ++i) {
    const Node& sec = sexpr::expect_list(root.items[i], "domain section");
    if (sec.items.empty()) sexpr::fail_at(sec, "empty section");
    const std::string& head = sexpr::expect_atom(sec.items[0], "section keyword");
    if (head == ":requirements") {
      for (std::size_t k = 1; k < sec.items.size(); ++k) {
        const std::string& r = sexpr::expect_atom(sec.items[k], "requirement");
        if (r != ":strips" && r != ":typing") throw UnsupportedFeature("requirement '" + r + "' is not supported");
      }
    } else if (head == ":types") {
      auto decls = detail::typed_list(sec.items, 1);
      // Parents may be declared after their children.
      std::map<std::string, std::string> pending(decls.begin(), decls.end());
      if (pending.size() != decls.size()) throw SemanticError("type declared twice in :types");
      while (!pending.empty()) {
        bool progress = false;
        for (auto it = pending.begin(); it != pending.end();) {
          if (it->second == kRootType || d.types.contains(it->second)) {
            d.types.add(it->first, it->second);
            it = pending.erase(it);
            progress = true;
          } else {
            ++it;
          }
        }
        if (!progress)
          throw SemanticError("undeclared or cyclic parent type '" + pending.begin()->second + "' for type '" +
                              pending.begin()->first + "'");
      }
    } else if (head == ":predicates") {
      for (std::size_t k = 1; k < sec.items.size(); ++k) {
        const Node& pn = sexpr::expect_list(sec.items[k], "predicate declaration");
        if (pn.items.empty()) sexpr::fail_at(pn, "empty predicate declaration");
        PredicateSchema ps{sexpr::expect_atom(pn.items[0], "predicate name"), {}};
        for (auto& [var, type] : detail::typed_list(pn.items, 1)) {
          if (!d.types.contains(type)) throw SemanticError("undeclared type '" + type + "' in predicate '" + ps.name + "'");
          ps.param_types.push_back(type);
        }
        if (d.find_predicate(ps.name)) throw SemanticError("predicate '" + ps.name + "' declared twice");
        d.predicates.insert(std::upper_bound(d.predicates.begin(), d.predicates.end(), ps,
                                             [](const auto& a, const auto& b) { return a.name < b.name; }),
                            std::move(ps));
      }
    } else if (head == ":action") {
      action_forms.push_back(&sec);
    } else if (head == ":constants") {
      throw UnsupportedFeature("domain constants are not supported");
    } else {
      throw UnsupportedFeature("domain section '" + head + "' is not supported");
    }
  }
  for (const Node* f : action_forms) {
    ActionSchema a = detail::parse_action(*f, d);
    if (d.find_action(a.name)) throw SemanticError("action '" + a.name + "' declared twice");
    d.actions.insert(std::upper_bound(d.actions.begin(), d.actions.end(), a,
                                      [](const auto& x, const auto& y) { return x.name < y.name; }),
                     std::move(a));
  }
  return d;
}

inline Problem parse_problem(std::string_view text, const Domain& d) {
  using sexpr::Node;
  const Node root = detail::single_form(text, "define");
  if (!root.has_head("define")) sexpr::fail_at(root, "expected (define ...)");
  if (root.items.size() < 2 || !root.items[1].has_head("problem") || root.items[1].items.size() != 2)
    sexpr::fail_at(root, "expected (problem <name>)");
  Problem p;
  p.name = sexpr::expect_atom(root.items[1].items[1], "problem name");
  for (std::size_t i = 2; i < root.items.size(); ++i) {
    const Node& sec = sexpr::expect_list(root.items[i], "problem section");
    if (sec.items.empty()) sexpr::fail_at(sec, "empty section");
    const std::string& head = sexpr::expect_atom(sec.items[0], "section keyword");
    if (head == ":domain") {
      if (sec.items.size() != 2) sexpr::fail_at(sec, "expected (:domain <name>)");
      p.domain_name = sexpr::expect_atom(sec.items[1], "domain name");
    } else if (head == ":objects") {
      for (auto& [obj, type] : detail::typed_list(sec.items, 1)) {
        if (!d.types.contains(type)) throw SemanticError("undeclared type '" + type + "' for object '" + obj + "'");
        p.objects[obj] = type;
      }
    } else if (head == ":init") {
      for (std::size_t k = 1; k < sec.items.size(); ++k) p.init.insert(detail::parse_ground(sec.items[k]));
    } else if (head == ":goal") {
      if (sec.items.size() != 2) sexpr::fail_at(sec, "expected one goal formula");
      for (const Node* c : detail::conjuncts(sec.items[1])) p.goal.insert(detail::parse_ground(*c));
    } else {
      throw UnsupportedFeature("problem section '" + head + "' is not supported");
    }
  }
  if (!p.domain_name.empty() && p.domain_name != d.name)
    throw SemanticError("problem '" + p.name + "' targets domain '" + p.domain_name + "', not '" + d.name + "'");
  for (const auto& prop : p.init) validate_proposition(d, p.objects, prop);
  for (const auto& prop : p.goal) validate_proposition(d, p.objects, prop);
  return p;
}

// ---------------------------------------------------------------------------
// Emission.

inline void emit_literals(std::ostringstream& os, const ActionSchema& a, const char* key,
                          const LiteralSet& positive, const LiteralSet* negative) {
  os << "    " << key << " (and";
  for (const auto& l : positive) os << "\n      " << to_string(l, a.params);
  if (negative)
    for (const auto& l : *negative) os << "\n      (not " << to_string(l, a.params) << ")";
  os << ")";
}

inline std::string emit_domain(const Domain& d) {
  std::ostringstream os;
  os << "(define (domain " << d.name << ")\n";
  os << "  (:requirements :strips :typing)\n";
  if (!d.types.parents().empty()) {
    std::map<std::string, std::vector<std::string>> by_parent;
    for (const auto& [child, parent] : d.types.parents()) by_parent[parent].push_back(child);
    os << "  (:types";
    for (const auto& [parent, children] : by_parent) {
      os << "\n   ";
      for (const auto& c : children) os << " " << c;
      os << " - " << parent;
    }
    os << ")\n";
  }
  os << "  (:predicates";
  for (const auto& p : d.predicates) {
    os << "\n    (" << p.name;
    for (std::size_t k = 0; k < p.param_types.size(); ++k) os << " ?a" << k << " - " << p.param_types[k];
    os << ")";
  }
  os << ")\n";
  for (const auto& a : d.actions) {
    os << "  (:action " << a.name << "\n    :parameters (";
    for (std::size_t k = 0; k < a.params.size(); ++k)
      os << (k ? " " : "") << a.params[k].name << " - " << a.params[k].type;
    os << ")";
    if (a.has_body) {
      os << "\n";
      emit_literals(os, a, ":precondition", a.pre, nullptr);
      os << "\n";
      emit_literals(os, a, ":effect", a.add, &a.del);
    }
    os << ")\n";
  }
  os << ")\n";
  return os.str();
}

inline std::string emit_problem(const Problem& p) {
  std::ostringstream os;
  os << "(define (problem " << p.name << ")\n  (:domain " << p.domain_name << ")\n  (:objects";
  for (const auto& [o, t] : p.objects) os << "\n    " << o << " - " << t;
  os << ")\n  (:init";
  for (const auto& prop : p.init) os << "\n    " << to_string(prop);
  os << ")\n  (:goal (and";
  for (const auto& prop : p.goal) os << "\n    " << to_string(prop);
  os << ")))\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// STRIPS semantics over ground actions.

struct GroundEffects {
  State pre;
  State add;
  State del;
};

inline GroundEffects ground_effects(const Domain& d, const GroundAction& g) {
  const ActionSchema& a = d.action(g.schema);
  return {bind_all(a, g, a.pre), bind_all(a, g, a.add), bind_all(a, g, a.del)};
}

inline bool applicable(const GroundEffects& e, const State& s) {
  return std::includes(s.begin(), s.end(), e.pre.begin(), e.pre.end());
}

inline State apply(const GroundEffects& e, const State& s) {
  State next;
  std::set_difference(s.begin(), s.end(), e.del.begin(), e.del.end(), std::inserter(next, next.end()));
  next.insert(e.add.begin(), e.add.end());
  return next;
}

// Replays a totally ordered plan; returns every visited state (size n+1) or
// throws InapplicableModel at the first inapplicable action.
inline std::vector<State> execute(const Domain& d, const State& init, const std::vector<GroundAction>& plan) {
  std::vector<State> states{init};
  for (std::size_t i = 0; i < plan.size(); ++i) {
    GroundEffects e = ground_effects(d, plan[i]);
    if (!applicable(e, states.back()))
      throw InapplicableModel("action " + std::to_string(i + 1) + " " + to_string(plan[i]) + " is not applicable");
    states.push_back(amdn::apply(e, states.back()));
  }
  return states;
}

// ADD ∩ PRE = ∅ and DEL ⊆ PRE for every schema with a body.
inline std::optional<std::string> strips_violation(const ActionSchema& a) {
  for (const auto& l : a.add)
    if (a.pre.count(l)) return "'" + a.name + "' adds its own precondition " + to_string(l, a.params);
  for (const auto& l : a.del)
    if (!a.pre.count(l)) return "'" + a.name + "' deletes " + to_string(l, a.params) + " without requiring it";
  return std::nullopt;
}

}  // namespace amdn
