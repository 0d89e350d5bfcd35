#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "test_util.hpp"

using namespace amdn;
using namespace amdn::test;

namespace {

std::set<int> atoms(const Formula& f) {
  std::vector<int> v;
  f.collect_vars(v);
  return {v.begin(), v.end()};
}

bool holds(const Formula& f, const std::set<int>& on) {
  return f.evaluate([&](int v) { return on.count(v) > 0; });
}

PlanTrace two_steps(ParallelSet a, ParallelSet b) {
  PlanTrace t;
  t.steps.push_back({std::move(a), {}});
  t.steps.push_back({std::move(b), {}});
  return t;
}

struct Lifted {
  Domain d;
  LiftingIndex index;
  VariableCatalog cat;
  explicit Lifted(Domain dom) : d(std::move(dom)), index(d), cat(index) {}
};

}  // namespace

TEST(Catalog, OneSchemaTwoCandidatesSixVariables) {
  Domain d = parse_domain(R"((define (domain t) (:requirements :strips :typing) (:types truck place)
    (:predicates (at ?x - truck ?y - place))
    (:action drive :parameters (?t - truck ?a - place ?b - place))))");
  LiftingIndex index(d);
  VariableCatalog cat = build_variables(index);
  EXPECT_EQ(cat.size(), 6);
  for (int id = 1; id <= cat.size(); ++id) {
    const auto& v = cat.at(id);
    EXPECT_EQ(cat.id(v.schema, v.literal, v.slot), id);
  }
  EXPECT_THROW(cat.at(7), UnknownVariable);
}

TEST(Catalog, DepotsCountIsThreeTimesCandidates) {
  Domain d = data_domain("depots");
  LiftingIndex index(d);
  std::size_t sum = 0;
  for (const auto& a : d.actions) sum += candidate_literals(a, d).size();
  EXPECT_EQ(static_cast<std::size_t>(VariableCatalog(index).size()), 3 * sum);
}

TEST(Catalog, EmptyCandidateSetGivesNoVariables) {
  Domain d = parse_domain(R"((define (domain t) (:requirements :strips :typing) (:types obj)
    (:predicates (p ?x - obj)) (:action a :parameters ())))");
  LiftingIndex index(d);
  EXPECT_EQ(VariableCatalog(index).size(), 0);
}

TEST(Prior, FeatureIdenticalPairsAreUniform) {
  std::vector<GroundAction> acts{act("a", {"o1"}), act("b", {"o2"}), act("c", {"o3"})};
  std::set<ActionPair> scope;
  for (const auto& x : acts)
    for (const auto& y : acts)
      if (x != y) scope.insert({x, y});
  ASSERT_EQ(scope.size(), 6u);
  for (const auto& [x, y] : scope) EXPECT_NEAR(disorder_probability(x, y, scope), 1.0 / 6.0, 1e-12);
}

TEST(Prior, SoftmaxMatchesDirectExponentials) {
  GroundAction a1 = act("a1", {"x", "y"}), a2 = act("a2", {"y", "z"}), a3 = act("a3", {"u", "v"});
  std::set<ActionPair> scope;
  for (const auto& x : {a1, a2, a3})
    for (const auto& y : {a1, a2, a3})
      if (x != y) scope.insert({x, y});
  // theta = 1/2 each; f1 = shared objects, f2 = equal arity (always 1 here)
  const double z12 = 0.5 * (1 + 1), z13 = 0.5 * (0 + 1);
  const double denom = 2 * std::exp(z12) + 4 * std::exp(z13);
  EXPECT_NEAR(disorder_probability(a1, a2, scope), std::exp(z12) / denom, 1e-12);
  EXPECT_NEAR(disorder_probability(a1, a3, scope), std::exp(z13) / denom, 1e-12);
  EXPECT_NEAR(disorder_probability(a2, a1, scope), disorder_probability(a1, a2, scope), 1e-15);
  DisorderPrior prior(default_features(), scope);
  double sum = 0;
  for (const auto& [pr, p] : prior.table()) sum += p;
  EXPECT_NEAR(sum, 1.0, 1e-9);
  EXPECT_THROW(disorder_probability(a1, a1, scope), PairOutOfScope);
  EXPECT_THROW(disorder_probability(a1, act("zz", {}), scope), PairOutOfScope);
}

TEST(Dc, DriveThenLoadIncludesAlignedInteraction) {
  Lifted s(data_domain("depots"));
  GroundAction x = act("drive", {"t0", "dp1", "dp0"}), y = act("load", {"h0", "c0", "t0", "dp0"});
  std::vector<PlanTrace> traces{two_steps({x}, {y})};
  DisorderPrior prior(default_features(), disorder_scope(traces));
  CompileConfig cfg;
  std::vector<DualPair> pairs;
  CompileStats st;
  auto out = build_dc(traces, s.index, s.cat, prior, cfg, pairs, st);
  ASSERT_EQ(pairs.size(), 1u);
  const WeightedFormula* dc1 = nullptr;
  for (const auto& wf : out)
    if (wf.provenance.family == Family::DC1) dc1 = &wf;
  ASSERT_NE(dc1, nullptr);
  const int pre_x = s.cat.id("drive", lit("at", {0, 2}), Slot::pre);
  const int del_x = s.cat.id("drive", lit("at", {0, 2}), Slot::del);
  const int del_y = s.cat.id("load", lit("at", {2, 3}), Slot::del);
  EXPECT_TRUE(holds(dc1->formula, {pre_x, del_y}));
  EXPECT_FALSE(holds(dc1->formula, {pre_x, del_x, del_y}));
  EXPECT_FALSE(holds(dc1->formula, {}));
  // the shared objects t0 and dp0 are the only ones the expansion may use
  for (int v : atoms(dc1->formula)) {
    const auto& sv = s.cat.at(v);
    Proposition p = sv.schema == "drive" ? s.index.bind(x, sv.literal) : s.index.bind(y, sv.literal);
    for (const auto& o : p.args) EXPECT_TRUE(o == "t0" || o == "dp0") << to_string(p);
  }
}

TEST(Dc, DisjointActionsEmitNothing) {
  Lifted s(data_domain("depots"));
  std::vector<PlanTrace> traces{two_steps({act("drive", {"t0", "dp1", "dp0"})}, {act("lift", {"h1", "c1", "p1", "dp2"})})};
  DisorderPrior prior(default_features(), disorder_scope(traces));
  std::vector<DualPair> pairs;
  CompileStats st;
  EXPECT_TRUE(build_dc(traces, s.index, s.cat, prior, CompileConfig{}, pairs, st).empty());
  EXPECT_EQ(st.skipped_dc, 1u);
}

TEST(Dc, ZeroProbabilityDropsSwappedVersion) {
  Lifted s(data_domain("depots"));
  std::vector<PlanTrace> traces{two_steps({act("drive", {"t0", "dp1", "dp0"})}, {act("load", {"h0", "c0", "t0", "dp0"})})};
  DisorderPrior prior(default_features(), disorder_scope(traces));
  CompileConfig cfg;
  cfg.prior_scale = 0;
  std::vector<DualPair> pairs;
  CompileStats st;
  auto out = build_dc(traces, s.index, s.cat, prior, cfg, pairs, st);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].provenance.family, Family::DC1);
  EXPECT_EQ(out[0].weight, cfg.w_max);
}

TEST(Hard, StripsConsistencyIsForced) {
  Lifted s(data_domain("blocks3"));
  CompileStats st;
  auto hard = build_hard(s.cat, st);
  for (const auto& wf : hard) EXPECT_TRUE(wf.hard);
  const Literal l = lit("clear", {0});
  const int pre = s.cat.id("move-b-to-t", l, Slot::pre), add = s.cat.id("move-b-to-t", l, Slot::add),
            del = s.cat.id("move-b-to-t", l, Slot::del);
  for (int mask = 0; mask < 8; ++mask) {
    const bool p = mask & 1, a = mask & 2, d = mask & 4;
    std::set<int> on;
    if (p) on.insert(pre);
    if (a) on.insert(add);
    if (d) on.insert(del);
    bool ok = true;
    for (const auto& wf : hard) {
      auto vs = atoms(wf.formula);
      if (std::any_of(vs.begin(), vs.end(), [&](int v) { return v != pre && v != add && v != del; })) continue;
      ok = ok && holds(wf.formula, on);
    }
    const bool want = !(a && p) && (!d || p);
    EXPECT_EQ(ok, want) << mask;
  }
}

TEST(Pc, ParallelLiftsSharingHoistConflict) {
  Lifted s(data_domain("depots"));
  PlanTrace t;
  t.steps.push_back({{act("lift", {"h0", "c0", "p0", "dp0"}), act("lift", {"h0", "c1", "p1", "dp0"})}, {}});
  std::vector<PlanTrace> traces{t};
  DisorderPrior prior(default_features(), disorder_scope(traces));
  std::vector<DualPair> pairs;
  CompileStats st;
  auto out = build_pc(traces, s.index, s.cat, prior, CompileConfig{}, pairs, st);
  ASSERT_FALSE(out.empty());
  const int add_avail = s.cat.id("lift", lit("available", {0}), Slot::add);
  const int del_avail = s.cat.id("lift", lit("available", {0}), Slot::del);
  bool found = false;
  for (const auto& wf : out) {
    auto vs = atoms(wf.formula);
    if (!vs.count(add_avail) || !vs.count(del_avail)) continue;
    found = true;
    // one lift adding available(h0) while the other deletes it is a conflict
    EXPECT_FALSE(holds(wf.formula, {add_avail, del_avail}));
    EXPECT_TRUE(holds(wf.formula, {}));
  }
  EXPECT_TRUE(found);
}

TEST(Nc, FrequencyWeight) {
  OccurrenceTables t;
  t.by_predicate["at"] = 3;
  t.total = 12;
  EXPECT_EQ(detail::nc_weight(t, "at", 10000), 2500u);
  EXPECT_EQ(detail::nc_weight(t, "on", 10000), 0u);
}

TEST(Nc, AdderDisjunctionMatchesPrecedingActions) {
  Lifted s(data_domain("depots"));
  auto traces = read_traces(read_data("depots-example.sexp"), &s.d);
  std::vector<PlanTrace> first{traces[0]};
  for (std::size_t lookahead : {0u, 1u}) {
    CompileConfig cfg = CompileConfig::literal();
    cfg.nc2_lookahead = lookahead;
    LiftingIndex& index = s.index;
    OccurrenceTables tables = occurrence_tables(first, index);
    CompileStats st;
    auto out = build_nc(first, index, s.cat, tables, cfg, st);
    // oracle: add slots of every candidate that binds to (at t0 dp0), over
    // the actions of steps 1..3 (plus step 4 with one set of lookahead)
    const Proposition r = prop("at", {"t0", "dp0"});
    std::set<int> want;
    for (std::size_t k = 0; k < 3 + lookahead; ++k)
      for (const auto& g : first[0].steps[k].actions) {
        const ActionSchema& a = s.d.action(g.schema);
        for (const auto& l : candidate_literals(a, s.d))
          if (bind(a, g, l) == r) want.insert(s.cat.id(g.schema, l, Slot::add));
      }
    ASSERT_FALSE(want.empty());
    bool seen = false;
    for (const auto& wf : out)
      if (wf.provenance.family == Family::NC2 && wf.provenance.steps == std::vector<std::size_t>{3}) {
        EXPECT_EQ(atoms(wf.formula), want);
        seen = true;
      }
    EXPECT_TRUE(seen) << lookahead;
  }
}

TEST(Nc, UnobservedPredicateGetsNoConstraint) {
  Lifted s(data_domain("blocks3"));
  auto traces = toy_corpus(20, 0, 0, 1).plan_traces();
  for (auto& t : traces)
    for (auto& st : t.steps) {
      State keep;
      if (!st.obs) continue;
      for (const auto& p : *st.obs)
        if (p.predicate != "ontable") keep.insert(p);
      st.obs = keep;
    }
  for (auto& t : traces) {
    State g;
    for (const auto& p : t.goal)
      if (p.predicate != "ontable") g.insert(p);
    t.goal = g;
    State i;
    for (const auto& p : t.init)
      if (p.predicate != "ontable") i.insert(p);
    t.init = i;
  }
  OccurrenceTables tables = occurrence_tables(traces, s.index);
  CompileStats st;
  for (const auto& wf : build_nc(traces, s.index, s.cat, tables, CompileConfig{}, st))
    for (int v : atoms(wf.formula)) EXPECT_NE(s.cat.at(v).literal.predicate, "ontable");
}

TEST(Nc, SupportFilterAndThreshold) {
  Lifted s(data_domain("depots"));
  auto traces = read_traces(read_data("depots-example.sexp"), &s.d);
  OccurrenceTables tables = occurrence_tables(traces, s.index);
  CompileConfig cfg = CompileConfig::literal();
  cfg.delta = 1000;
  CompileStats st;
  for (const auto& wf : build_nc(traces, s.index, s.cat, tables, cfg, st))
    EXPECT_EQ(wf.provenance.family, Family::NC2);
}

TEST(Compile, WeightDualityAndCatalogAtoms) {
  Lifted s(data_domain("blocks3"));
  auto traces = toy_corpus(30, 0.1, 0.1, 9).plan_traces();
  Theory th = compile_theory(traces, s.index, s.cat, CompileConfig{});
  ASSERT_FALSE(th.pairs.empty());
  for (const auto& p : th.pairs) EXPECT_EQ(p.ordered_weight + p.swapped_weight, th.w_max);
  for (const auto& wf : th.formulas)
    for (int v : atoms(wf.formula)) {
      EXPECT_GE(v, 1);
      EXPECT_LE(v, s.cat.size());
    }
}

TEST(Compile, Deterministic) {
  Lifted s(data_domain("blocks3"));
  auto traces = toy_corpus(20, 0.1, 0.1, 10).plan_traces();
  auto a = lower_to_wcnf(compile_theory(traces, s.index, s.cat, CompileConfig{}).formulas, s.cat.size());
  auto b = lower_to_wcnf(compile_theory(traces, s.index, s.cat, CompileConfig{}).formulas, s.cat.size());
  EXPECT_EQ(write_wcnf(a.wcnf), write_wcnf(b.wcnf));
}

TEST(Compile, EmptyCorpusLeavesOnlyHardConsistency) {
  Lifted s(data_domain("blocks3"));
  CompileConfig cfg = CompileConfig::literal();
  cfg.sparsity_weight = 0;
  Theory th = compile_theory({}, s.index, s.cat, cfg);
  ASSERT_FALSE(th.formulas.empty());
  for (const auto& wf : th.formulas) {
    EXPECT_TRUE(wf.hard);
    EXPECT_TRUE(wf.provenance.family == Family::P1 || wf.provenance.family == Family::P2);
  }
}

TEST(Compile, RejectsBadConfig) {
  Lifted s(data_domain("blocks3"));
  CompileConfig cfg;
  cfg.min_support = 1.5;
  EXPECT_THROW(compile_theory({}, s.index, s.cat, cfg), ConfigError);
  cfg = CompileConfig{};
  cfg.evidence_weight = cfg.w_max;
  EXPECT_THROW(compile_theory({}, s.index, s.cat, cfg), ConfigError);
  cfg = CompileConfig{};
  cfg.w_max = 1;
  EXPECT_THROW(compile_theory({}, s.index, s.cat, cfg), ConfigError);
}

TEST(Merge, DuplicatesSumAndCap) {
  std::vector<WeightedFormula> fs{
      {Formula::any({Formula::atom(1), Formula::atom(2)}), 4, false, {}, 1},
      {Formula::any({Formula::atom(2), Formula::atom(1)}), 5, false, {}, 1},
      {Formula::any({Formula::atom(1), Formula::negate(Formula::atom(1))}), 9, false, {}, 1},
      {Formula::atom(3), 0, true, {}, 1},
      {Formula::atom(3), 0, true, {}, 1},
  };
  auto merged = merge_formulas(fs);
  ASSERT_EQ(merged.size(), 2u);
  EXPECT_EQ(merged[0].weight, 9u);
  EXPECT_EQ(merged[0].merged, 2u);
  EXPECT_TRUE(merged[1].hard);
  EXPECT_EQ(merge_formulas(fs, Weight(6))[0].weight, 6u);
}

TEST(Lower, SoftUnitPassesThrough) {
  auto low = lower_to_wcnf({{Formula::negate(Formula::atom(2)), 7, false, {}, 1}}, 2);
  ASSERT_EQ(low.wcnf.clauses.size(), 1u);
  EXPECT_EQ(low.wcnf.clauses[0].lits, std::vector<int>{-2});
  EXPECT_EQ(low.wcnf.clauses[0].weight, 7u);
  EXPECT_EQ(low.wcnf.top, 8u);
  EXPECT_EQ(low.wcnf.num_vars, 2);
}

TEST(Lower, NonClausalSoftFormulaKeepsOptimum) {
  // (x ∧ ¬y) ∨ z with weight 7, plus pressure against each variable
  Formula f = Formula::any({Formula::all({Formula::atom(1), Formula::negate(Formula::atom(2))}), Formula::atom(3)});
  std::vector<WeightedFormula> fs{{f, 7, false, {}, 1},
                                  {Formula::negate(Formula::atom(1)), 2, false, {}, 1},
                                  {Formula::negate(Formula::atom(3)), 3, false, {}, 1},
                                  {Formula::atom(2), 1, false, {}, 1}};
  auto low = lower_to_wcnf(fs, 3);
  EXPECT_GT(low.wcnf.num_vars, 3);
  EXPECT_EQ(brute_force_optimum(low.wcnf), brute_force_theory(fs, 3));
  EXPECT_EQ(*brute_force_theory(fs, 3), 3u);
}

TEST(Lower, AllHardTheoryIsSat) {
  std::vector<WeightedFormula> fs{{Formula::any({Formula::atom(1), Formula::atom(2)}), 0, true, {}, 1},
                                  {Formula::negate(Formula::atom(1)), 0, true, {}, 1}};
  auto low = lower_to_wcnf(fs, 2);
  EXPECT_EQ(low.wcnf.top, 1u);
  for (const auto& c : low.wcnf.clauses) EXPECT_TRUE(low.wcnf.is_hard(c));
  EXPECT_EQ(brute_force_optimum(low.wcnf), std::optional<Weight>(0));
}

TEST(Lower, RandomTheoriesKeepOptimum) {
  std::mt19937_64 gen(404);
  std::uniform_int_distribution<int> nf(1, 6);
  std::uniform_int_distribution<Weight> w(1, 9);
  std::bernoulli_distribution hard(0.15);
  for (int i = 0; i < 40; ++i) {
    const int n = 6;
    std::vector<WeightedFormula> fs;
    for (int k = nf(gen); k > 0; --k) {
      bool h = hard(gen);
      fs.push_back({random_formula(gen, n, 2), h ? 0 : w(gen), h, {}, 1});
    }
    auto low = lower_to_wcnf(fs, n);
    auto want = brute_force_theory(fs, n);
    if (low.wcnf.num_vars <= 20) EXPECT_EQ(brute_force_optimum(low.wcnf), want) << i;
    if (want)
      EXPECT_EQ(solve_exact(low.wcnf).cost, *want) << i;
    else
      EXPECT_THROW(solve_exact(low.wcnf), HardUnsat);
  }
}
