#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace amdn {

// Boolean formula over positive integer variable ids.
struct Formula {
  enum class Kind { constant, atom, negation, conjunction, disjunction };

  Kind kind = Kind::constant;
  bool value = false;  // for constants
  int var = 0;         // for atoms
  std::vector<Formula> kids;

  static Formula constant(bool v) {
    Formula f;
    f.value = v;
    return f;
  }
  static Formula atom(int v) {
    Formula f;
    f.kind = Kind::atom;
    f.var = v;
    return f;
  }
  static Formula negate(Formula g) {
    Formula f;
    f.kind = Kind::negation;
    f.kids.push_back(std::move(g));
    return f;
  }
  static Formula all(std::vector<Formula> ks) {
    Formula f;
    f.kind = Kind::conjunction;
    f.kids = std::move(ks);
    return f;
  }
  static Formula any(std::vector<Formula> ks) {
    Formula f;
    f.kind = Kind::disjunction;
    f.kids = std::move(ks);
    return f;
  }
  // Signed-literal shorthand: +v is v, -v is ¬v.
  static Formula lit(int signed_var) {
    return signed_var > 0 ? atom(signed_var) : negate(atom(-signed_var));
  }

  bool is_literal() const {
    return kind == Kind::atom || (kind == Kind::negation && kids[0].kind == Kind::atom);
  }
  int as_literal() const { return kind == Kind::atom ? var : -kids[0].var; }

  template <class Assignment>  // callable: int var -> bool
  bool evaluate(const Assignment& value_of) const {
    switch (kind) {
      case Kind::constant: return value;
      case Kind::atom: return value_of(var);
      case Kind::negation: return !kids[0].evaluate(value_of);
      case Kind::conjunction:
        for (const auto& k : kids)
          if (!k.evaluate(value_of)) return false;
        return true;
      case Kind::disjunction:
        for (const auto& k : kids)
          if (k.evaluate(value_of)) return true;
        return false;
    }
    return false;
  }

  void collect_vars(std::vector<int>& out) const {
    if (kind == Kind::atom) out.push_back(var);
    for (const auto& k : kids) k.collect_vars(out);
  }

  // Stable textual form; two formulas print the same iff they are the same tree.
  std::string key() const {
    switch (kind) {
      case Kind::constant: return value ? "T" : "F";
      case Kind::atom: return std::to_string(var);
      case Kind::negation: return "-" + kids[0].key();
      case Kind::conjunction:
      case Kind::disjunction: {
        std::string s = kind == Kind::conjunction ? "&(" : "|(";
        for (std::size_t i = 0; i < kids.size(); ++i) s += (i ? "," : "") + kids[i].key();
        return s + ")";
      }
    }
    return {};
  }
};

// Negation normal form with flattening, constant folding, and children
// sorted and deduplicated by key, so equivalent-by-construction formulas
// share one canonical tree.
inline Formula canonical(const Formula& f, bool negated = false) {
  using K = Formula::Kind;
  switch (f.kind) {
    case K::constant: return Formula::constant(f.value != negated);
    case K::atom: return negated ? Formula::negate(Formula::atom(f.var)) : Formula::atom(f.var);
    case K::negation: return canonical(f.kids[0], !negated);
    case K::conjunction:
    case K::disjunction: {
      const bool is_and = (f.kind == K::conjunction) != negated;
      std::vector<std::pair<std::string, Formula>> kids;
      for (const auto& k : f.kids) {
        Formula c = canonical(k, negated);
        if (c.kind == K::constant) {
          if (c.value == is_and) continue;  // neutral element
          return Formula::constant(!is_and);  // absorbing element
        }
        if (c.kind == (is_and ? K::conjunction : K::disjunction)) {
          for (auto& g : c.kids) kids.emplace_back(g.key(), std::move(g));
        } else {
          kids.emplace_back(c.key(), std::move(c));
        }
      }
      std::sort(kids.begin(), kids.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      kids.erase(std::unique(kids.begin(), kids.end(), [](const auto& a, const auto& b) { return a.first == b.first; }),
                 kids.end());
      // x and ¬x together
      for (std::size_t i = 0; i < kids.size(); ++i) {
        if (!kids[i].second.is_literal()) continue;
        std::string neg = kids[i].second.kind == K::atom ? "-" + kids[i].first : kids[i].first.substr(1);
        auto it = std::lower_bound(kids.begin(), kids.end(), neg,
                                   [](const auto& a, const std::string& k) { return a.first < k; });
        if (it != kids.end() && it->first == neg) return Formula::constant(!is_and);
      }
      if (kids.empty()) return Formula::constant(is_and);
      if (kids.size() == 1) return std::move(kids[0].second);
      std::vector<Formula> out;
      out.reserve(kids.size());
      for (auto& [_, g] : kids) out.push_back(std::move(g));
      return is_and ? Formula::all(std::move(out)) : Formula::any(std::move(out));
    }
  }
  return f;
}

// True for a literal or a disjunction of literals (after canonical()).
inline bool is_clause(const Formula& f) {
  if (f.is_literal()) return true;
  if (f.kind != Formula::Kind::disjunction) return false;
  return std::all_of(f.kids.begin(), f.kids.end(), [](const Formula& k) { return k.is_literal(); });
}

inline std::vector<int> clause_literals(const Formula& f) {
  if (f.is_literal()) return {f.as_literal()};
  std::vector<int> out;
  for (const auto& k : f.kids) out.push_back(k.as_literal());
  return out;
}

}  // namespace amdn
