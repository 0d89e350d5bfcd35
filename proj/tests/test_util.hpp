#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "amdn/amdn.hpp"

namespace amdn::test {

inline std::string read_data(const std::string& name) {
  std::ifstream in(std::string(AMDN_DATA_DIR) + "/" + name);
  if (!in) throw std::runtime_error("missing test data " + name);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline Domain data_domain(const std::string& name) { return parse_domain(read_data(name + ".pddl")); }

// Brute-force optimum over all 2^n assignments; nullopt when the hard
// clauses are unsatisfiable.
inline std::optional<Weight> brute_force_optimum(const WcnfInstance& inst) {
  const int n = inst.num_vars;
  std::optional<Weight> best;
  Assignment a(static_cast<std::size_t>(n) + 1, false);
  for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << n); ++mask) {
    for (int v = 1; v <= n; ++v) a[static_cast<std::size_t>(v)] = (mask >> (v - 1)) & 1;
    Weight cost = inst.constant_cost;
    bool ok = true;
    for (const auto& c : inst.clauses) {
      bool sat = false;
      for (int l : c.lits) sat = sat || (a[static_cast<std::size_t>(std::abs(l))] == (l > 0));
      if (sat) continue;
      if (c.weight >= inst.top) {
        ok = false;
        break;
      }
      cost += c.weight;
    }
    if (ok && (!best || cost < *best)) best = cost;
  }
  return best;
}

// Independent cost of an assignment.
inline std::optional<Weight> cost_of(const WcnfInstance& inst, const Assignment& a) {
  Weight cost = inst.constant_cost;
  for (const auto& c : inst.clauses) {
    bool sat = false;
    for (int l : c.lits) sat = sat || (a.at(static_cast<std::size_t>(std::abs(l))) == (l > 0));
    if (sat) continue;
    if (c.weight >= inst.top) return std::nullopt;
    cost += c.weight;
  }
  return cost;
}

struct RandomWcnfShape {
  int max_vars = 15;
  int max_clauses = 40;
  int max_len = 3;
  double hard_fraction = 0.2;
  Weight max_weight = 20;
};

inline WcnfInstance random_wcnf(std::mt19937_64& gen, const RandomWcnfShape& s) {
  std::uniform_int_distribution<int> nv(1, s.max_vars);
  WcnfInstance inst;
  inst.num_vars = nv(gen);
  std::uniform_int_distribution<int> nc(1, s.max_clauses);
  std::uniform_int_distribution<int> len(1, s.max_len);
  std::uniform_int_distribution<int> var(1, inst.num_vars);
  std::uniform_int_distribution<Weight> w(1, s.max_weight);
  std::bernoulli_distribution hard(s.hard_fraction), sign(0.5);
  const int m = nc(gen);
  std::vector<bool> is_hard;
  Weight soft = 0;
  for (int i = 0; i < m; ++i) {
    WeightedClause c;
    const int k = len(gen);
    for (int j = 0; j < k; ++j) c.lits.push_back(sign(gen) ? var(gen) : -var(gen));
    is_hard.push_back(hard(gen));
    if (!is_hard.back()) {
      c.weight = w(gen);
      soft += c.weight;
    }
    inst.clauses.push_back(std::move(c));
  }
  inst.top = soft + 1;
  for (std::size_t i = 0; i < inst.clauses.size(); ++i)
    if (is_hard[i]) inst.clauses[i].weight = inst.top;
  return inst;
}

// Random formula over variables 1..n with bounded depth.
inline Formula random_formula(std::mt19937_64& gen, int n, int depth) {
  std::uniform_int_distribution<int> var(1, n);
  std::uniform_int_distribution<int> kind(0, depth <= 0 ? 1 : 4);
  std::uniform_int_distribution<int> width(2, 3);
  switch (kind(gen)) {
    case 0: return Formula::atom(var(gen));
    case 1: return Formula::negate(Formula::atom(var(gen)));
    case 2: return Formula::negate(random_formula(gen, n, depth - 1));
    case 3: {
      std::vector<Formula> ks;
      for (int i = width(gen); i > 0; --i) ks.push_back(random_formula(gen, n, depth - 1));
      return Formula::all(std::move(ks));
    }
    default: {
      std::vector<Formula> ks;
      for (int i = width(gen); i > 0; --i) ks.push_back(random_formula(gen, n, depth - 1));
      return Formula::any(std::move(ks));
    }
  }
}

// Brute-force optimum of weighted formulas, evaluated directly.
inline std::optional<Weight> brute_force_theory(const std::vector<WeightedFormula>& fs, int n) {
  std::optional<Weight> best;
  for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << n); ++mask) {
    auto value_of = [mask](int v) { return ((mask >> (v - 1)) & 1) != 0; };
    Weight cost = 0;
    bool ok = true;
    for (const auto& wf : fs) {
      if (wf.formula.evaluate(value_of)) continue;
      if (wf.hard) {
        ok = false;
        break;
      }
      cost += wf.weight;
    }
    if (ok && (!best || cost < *best)) best = cost;
  }
  return best;
}

inline Literal lit(const std::string& pred, std::vector<std::size_t> args) { return Literal{pred, std::move(args)}; }
inline GroundAction act(const std::string& schema, std::vector<std::string> args) {
  return GroundAction{schema, std::move(args)};
}
inline Proposition prop(const std::string& pred, std::vector<std::string> args) {
  return Proposition{pred, std::move(args)};
}

// Forged corpus on the bundled toy domain.
inline Corpus toy_corpus(std::size_t traces, double disorder, double noise, std::uint64_t seed) {
  Domain truth = data_domain("blocks3");
  Problem templ = parse_problem(read_data("blocks3-template.pddl"), truth);
  CorpusConfig cfg;
  cfg.traces = traces;
  cfg.corruption.disorder = disorder;
  cfg.corruption.noise = noise;
  cfg.corruption.seed = seed;
  return forge_corpus(truth, templ, {}, cfg);
}

}  // namespace amdn::test
