#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "amdn/errors.hpp"

namespace amdn {

using Weight = std::uint64_t;

struct WeightedClause {
  std::vector<int> lits;
  Weight weight = 0;

  bool operator==(const WeightedClause&) const = default;
};

// Weighted partial MAX-SAT instance in DIMACS WCNF terms: clauses whose
// weight reaches `top` are hard.
struct WcnfInstance {
  int num_vars = 0;
  std::vector<WeightedClause> clauses;
  Weight top = 1;
  Weight constant_cost = 0;  // folded empty soft clauses

  bool is_hard(const WeightedClause& c) const { return c.weight >= top; }

  bool operator==(const WcnfInstance&) const = default;

  Weight soft_total() const {
    Weight w = 0;
    for (const auto& c : clauses)
      if (!is_hard(c)) w += c.weight;
    return w;
  }
};

// Values indexed by variable id; index 0 unused.
using Assignment = std::vector<bool>;

inline bool satisfied(const WeightedClause& c, const Assignment& a) {
  for (int l : c.lits)
    if (a[static_cast<std::size_t>(std::abs(l))] == (l > 0)) return true;
  return false;
}

struct Evaluation {
  Weight cost = 0;
  bool hard_ok = true;
};

inline Evaluation evaluate(const WcnfInstance& inst, const Assignment& a) {
  Evaluation e{inst.constant_cost, true};
  for (const auto& c : inst.clauses) {
    if (satisfied(c, a)) continue;
    if (inst.is_hard(c)) e.hard_ok = false;
    else e.cost += c.weight;
  }
  return e;
}

inline std::string write_wcnf(const WcnfInstance& inst) {
  std::ostringstream os;
  std::size_t n = inst.clauses.size() + (inst.constant_cost ? 1 : 0);
  os << "p wcnf " << inst.num_vars << " " << n << " " << inst.top << "\n";
  if (inst.constant_cost) os << inst.constant_cost << " 0\n";
  for (const auto& c : inst.clauses) {
    os << c.weight;
    for (int l : c.lits) os << " " << l;
    os << " 0\n";
  }
  return os.str();
}

// Classic DIMACS WCNF. A clause whose weight is >= top is hard; an empty
// soft clause is folded into the constant cost.
inline WcnfInstance read_wcnf(std::string_view text) {
  WcnfInstance inst;
  bool have_header = false;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  auto fail = [&](const std::string& what) -> void {
    throw FormatError("wcnf line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == 'c') continue;
    std::istringstream ls(line);
    if (line[first] == 'p') {
      if (have_header) fail("duplicate header");
      std::string p, fmt;
      long long vars = -1, clauses = -1;
      unsigned long long top = 0;
      if (!(ls >> p >> fmt >> vars >> clauses >> top) || fmt != "wcnf" || vars < 0 || clauses < 0 || top == 0)
        fail("expected 'p wcnf <vars> <clauses> <top>'");
      std::string extra;
      if (ls >> extra) fail("trailing text after header");
      inst.num_vars = static_cast<int>(vars);
      inst.top = top;
      have_header = true;
      continue;
    }
    if (!have_header) fail("clause before header");
    long long w = 0;
    if (!(ls >> w) || w <= 0) fail("expected a positive clause weight");
    WeightedClause c{{}, static_cast<Weight>(w)};
    long long lit = 0;
    bool closed = false;
    while (ls >> lit) {
      if (lit == 0) {
        closed = true;
        break;
      }
      if (std::llabs(lit) > inst.num_vars) fail("literal " + std::to_string(lit) + " exceeds declared variables");
      c.lits.push_back(static_cast<int>(lit));
    }
    if (!closed) fail("clause not terminated by 0");
    std::string extra;
    if (ls >> extra) fail("trailing text after clause terminator");
    if (c.lits.empty() && c.weight < inst.top) {
      inst.constant_cost += c.weight;
      continue;
    }
    inst.clauses.push_back(std::move(c));
  }
  if (!have_header) throw FormatError("wcnf: missing 'p wcnf' header");
  return inst;
}

// Model import file: one line of space-separated signed literals.
inline Assignment read_model(std::string_view text, int num_vars) {
  Assignment a(static_cast<std::size_t>(num_vars) + 1, false);
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) {
    if (tok == "v") continue;
    char* end = nullptr;
    long long lit = std::strtoll(tok.c_str(), &end, 10);
    if (*end != '\0') throw FormatError("model: '" + tok + "' is not a literal");
    if (lit == 0) continue;
    if (std::llabs(lit) > num_vars) throw UnknownVariable("model literal " + tok + " exceeds " + std::to_string(num_vars) + " variables");
    a[static_cast<std::size_t>(std::llabs(lit))] = lit > 0;
  }
  return a;
}

inline std::string write_model(const Assignment& a) {
  std::string out;
  for (std::size_t v = 1; v < a.size(); ++v) {
    if (v > 1) out += ' ';
    out += (a[v] ? "" : "-") + std::to_string(v);
  }
  return out + "\n";
}

}  // namespace amdn
