#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "amdn/compiler.hpp"
#include "amdn/errors.hpp"
#include "amdn/maxsat.hpp"
#include "amdn/pddl.hpp"
#include "amdn/trace.hpp"
#include "amdn/wcnf.hpp"

namespace amdn {

// Reads learned bodies off the catalog variables of an assignment. Auxiliary
// variables (ids past the catalog) are ignored.
inline Domain decode(const Assignment& values, const VariableCatalog& cat, const Domain& skeleton) {
  if (values.size() < static_cast<std::size_t>(cat.size()) + 1)
    throw UnknownVariable("assignment covers " + std::to_string(values.empty() ? 0 : values.size() - 1) +
                          " variables but the catalog has " + std::to_string(cat.size()));
  Domain out = skeleton.skeleton();
  for (const auto& v : cat.variables()) {
    ActionSchema* a = out.find_action(v.schema);
    if (!a) throw UnknownVariable("variable " + std::to_string(v.id) + " names unknown schema '" + v.schema + "'");
    if (values[static_cast<std::size_t>(v.id)]) a->slot(v.slot).insert(v.literal);
  }
  for (auto& a : out.actions) {
    a.has_body = true;
    if (auto why = strips_violation(a)) throw HardViolation("decoded schema '" + a.name + "': " + *why);
  }
  return out;
}

// Inverse of decode on catalog variables: the assignment that encodes the
// bodies of `model`.
inline Assignment encode(const Domain& model, const VariableCatalog& cat) {
  Assignment a(static_cast<std::size_t>(cat.size()) + 1, false);
  for (const auto& s : model.actions)
    for (Slot slot : kSlots)
      for (const auto& l : s.slot(slot)) a[static_cast<std::size_t>(cat.id(s.name, l, slot))] = true;
  return a;
}

// ---------------------------------------------------------------------------
// End-to-end learning.

enum class SolverKind { sls, exact };

struct LearnConfig {
  CompileConfig compile;
  SolverKind solver = SolverKind::sls;
  SlsOptions sls;
  ExactOptions exact;
  std::uint64_t seed = 1;
};

struct FamilyReport {
  std::size_t generated = 0;  // formulas before merging
  std::size_t formulas = 0;   // after merging
  Weight satisfied_weight = 0;
  Weight violated_weight = 0;
  std::size_t violated = 0;
};

struct LearnReport {
  int catalog_vars = 0;
  int total_vars = 0;  // including auxiliaries
  std::size_t hard_clauses = 0;
  std::size_t soft_clauses = 0;
  Weight top = 0;
  Weight cost = 0;
  bool optimal = false;
  std::size_t skipped_dc = 0;
  std::size_t skipped_nc2 = 0;
  std::map<Family, FamilyReport> families;
};

struct LearnResult {
  Domain learned;
  LearnReport report;
  Theory theory;
  LoweredTheory lowered;
  Solution solution;
};

// Per-family weight bookkeeping on the original formulas.
inline void tally_families(LearnReport& rep, const Theory& th, const Assignment& values) {
  for (Family f : kFamilies) rep.families[f];
  for (const auto& [fam, n] : th.stats.generated) rep.families[fam].generated = n;
  auto value_of = [&](int v) { return values[static_cast<std::size_t>(v)]; };
  for (const auto& wf : th.formulas) {
    FamilyReport& fr = rep.families[wf.provenance.family];
    ++fr.formulas;
    bool ok = wf.formula.evaluate(value_of);
    if (!ok) ++fr.violated;
    if (wf.hard) continue;
    (ok ? fr.satisfied_weight : fr.violated_weight) += wf.weight;
  }
}

inline WcnfInstance compile_wcnf(const std::vector<PlanTrace>& traces, const LiftingIndex& index,
                                 const VariableCatalog& cat, const CompileConfig& cfg, Theory* theory_out = nullptr) {
  Theory th = compile_theory(traces, index, cat, cfg);
  LoweredTheory low = lower_to_wcnf(th.formulas, cat.size());
  if (theory_out) *theory_out = std::move(th);
  return std::move(low.wcnf);
}

inline Solution solve(const WcnfInstance& inst, const LearnConfig& cfg) {
  return cfg.solver == SolverKind::exact ? solve_exact(inst, cfg.exact) : solve_sls(inst, cfg.seed, cfg.sls);
}

// Decodes a solution and fills the report. Used both after solving and when
// a model is imported from an external solver.
inline LearnResult finish_learning(const Domain& skeleton, const VariableCatalog& cat, Theory th, LoweredTheory low,
                                   Solution sol) {
  Evaluation e = evaluate(low.wcnf, sol.values);
  if (!e.hard_ok) throw HardViolation("solution violates hard clauses");
  sol.cost = e.cost;
  sol.hard_ok = true;
  LearnResult r;
  r.learned = decode(sol.values, cat, skeleton);
  LearnReport& rep = r.report;
  rep.catalog_vars = cat.size();
  rep.total_vars = low.wcnf.num_vars;
  for (const auto& c : low.wcnf.clauses) (low.wcnf.is_hard(c) ? rep.hard_clauses : rep.soft_clauses)++;
  rep.top = low.wcnf.top;
  rep.cost = sol.cost;
  rep.optimal = sol.optimal;
  rep.skipped_dc = th.stats.skipped_dc;
  rep.skipped_nc2 = th.stats.skipped_nc2;
  tally_families(rep, th, sol.values);
  r.theory = std::move(th);
  r.lowered = std::move(low);
  r.solution = std::move(sol);
  return r;
}

// Variables, constraints, lowering, solving, decoding.
inline LearnResult learn_pipeline(const Domain& skeleton, const std::vector<PlanTrace>& traces,
                                  const LearnConfig& cfg) {
  Domain sk = skeleton.skeleton();
  for (const auto& t : traces) validate_trace(sk, t);
  LiftingIndex index(sk);
  VariableCatalog cat(index);
  Theory th = compile_theory(traces, index, cat, cfg.compile);
  LoweredTheory low = lower_to_wcnf(th.formulas, cat.size());
  Solution sol = solve(low.wcnf, cfg);
  return finish_learning(sk, cat, std::move(th), std::move(low), std::move(sol));
}

}  // namespace amdn
