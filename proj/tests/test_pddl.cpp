#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "test_util.hpp"

using namespace amdn;
using namespace amdn::test;

namespace {

const char* kMinimal = R"(
(define (domain tiny)
  (:requirements :strips :typing)
  (:types obj loc)
  (:predicates (at ?x - obj ?y - loc))
  (:action go :parameters (?x - obj ?y - loc)))
)";

// Every tuple of schema parameters, kept when each position's parameter type
// lies under the predicate's argument type by walking the parent chain.
std::set<Literal> enumerate_candidates(const ActionSchema& a, const Domain& d) {
  auto under = [&d](std::string t, const std::string& super) {
    for (;;) {
      if (t == super) return true;
      if (t == "object") return false;
      t = d.types.parent(t);
    }
  };
  std::set<Literal> out;
  for (const auto& p : d.predicates) {
    const std::size_t n = a.params.size(), k = p.arity();
    if (k > 0 && n == 0) continue;
    std::size_t total = 1;
    for (std::size_t i = 0; i < k; ++i) total *= n;
    for (std::size_t code = 0; code < total; ++code) {
      Literal l{p.name, {}};
      std::size_t c = code;
      bool ok = true;
      for (std::size_t i = 0; i < k; ++i) {
        l.args.push_back(c % n);
        ok = ok && under(a.params[c % n].type, p.param_types[i]);
        c /= n;
      }
      if (ok) out.insert(l);
    }
  }
  return out;
}

}  // namespace

TEST(Pddl, MinimalDomainHasOnePredicateAndOneSchema) {
  Domain d = parse_domain(kMinimal);
  EXPECT_EQ(d.predicates.size(), 1u);
  ASSERT_EQ(d.actions.size(), 1u);
  EXPECT_FALSE(d.actions[0].has_body);
  EXPECT_EQ(d.actions[0].params.size(), 2u);
}

TEST(Pddl, DriveSchemaParsesToQuadruple) {
  Domain d = data_domain("depots");
  const ActionSchema& drive = d.action("drive");
  ASSERT_EQ(drive.params.size(), 3u);
  EXPECT_EQ(drive.params[0].type, "truck");
  EXPECT_EQ(drive.pre, (LiteralSet{lit("at", {0, 1})}));
  EXPECT_EQ(drive.add, (LiteralSet{lit("at", {0, 2})}));
  EXPECT_EQ(drive.del, (LiteralSet{lit("at", {0, 1})}));
}

TEST(Pddl, ArityMismatchIsSemanticError) {
  const char* text = R"((define (domain t) (:requirements :strips :typing) (:types obj loc)
    (:predicates (at ?x - obj ?y - loc))
    (:action go :parameters (?x - obj ?y - loc) :precondition (at ?x) :effect (and))))";
  EXPECT_THROW(parse_domain(text), SemanticError);
}

TEST(Pddl, UndeclaredPredicateAndTypeAreSemanticErrors) {
  EXPECT_THROW(parse_domain(R"((define (domain t) (:requirements :strips :typing) (:types obj)
    (:predicates (p ?x - obj))
    (:action go :parameters (?x - obj) :precondition (q ?x) :effect (and))))"),
               SemanticError);
  EXPECT_THROW(parse_domain(R"((define (domain t) (:requirements :strips :typing) (:types obj)
    (:predicates (p ?x - thing))))"),
               SemanticError);
}

TEST(Pddl, UnsupportedRequirementRejected) {
  EXPECT_THROW(parse_domain("(define (domain t) (:requirements :adl))"), UnsupportedFeature);
}

TEST(Pddl, SyntaxErrorCarriesPosition) {
  try {
    parse_domain("(define (domain t)\n  (:predicates (p ?x)\n");
    FAIL() << "expected SyntaxError";
  } catch (const SyntaxError& e) {
    EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
  }
}

TEST(Pddl, SymbolsAreCaseInsensitive) {
  Domain a = parse_domain(kMinimal);
  std::string upper = kMinimal;
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  EXPECT_EQ(parse_domain(upper), a);
}

TEST(Pddl, CandidateLiteralsFollowTyping) {
  const char* text = R"((define (domain t) (:requirements :strips :typing) (:types truck place)
    (:predicates (at ?x - truck ?y - place) (flag))
    (:action drive :parameters (?t - truck ?a - place ?b - place))
    (:action idle :parameters ())))";
  Domain d = parse_domain(text);
  auto drive = candidate_literals(d.action("drive"), d);
  // the nullary predicate binds without parameters
  EXPECT_EQ(std::set<Literal>(drive.begin(), drive.end()),
            (std::set<Literal>{lit("at", {0, 1}), lit("at", {0, 2}), lit("flag", {})}));
  auto idle = candidate_literals(d.action("idle"), d);
  EXPECT_EQ(idle, (std::vector<Literal>{lit("flag", {})}));
}

TEST(Pddl, ZeroParameterSchemaUnaryPredicateIsEmpty) {
  Domain d = parse_domain(R"((define (domain t) (:requirements :strips :typing) (:types obj)
    (:predicates (p ?x - obj)) (:action a :parameters ())))");
  EXPECT_TRUE(candidate_literals(d.action("a"), d).empty());
}

TEST(Pddl, CandidateLiteralsMatchEnumerationOracle) {
  for (const char* name : {"depots", "driverlog", "blocks", "blocks3"}) {
    Domain d = data_domain(name);
    for (const auto& a : d.actions) {
      auto got = candidate_literals(a, d);
      EXPECT_TRUE(std::is_sorted(got.begin(), got.end()));
      EXPECT_EQ(std::set<Literal>(got.begin(), got.end()), enumerate_candidates(a, d)) << name << " " << a.name;
    }
  }
  Domain d = data_domain("depots");
  // (at ?x ?y): only the truck fits ?x, and ?y is y or z. Nothing else fits.
  EXPECT_EQ(candidate_literals(d.action("drive"), d).size(), 2u);
  Domain b3 = data_domain("blocks3");
  EXPECT_EQ(candidate_literals(b3.action("move-b-to-b"), b3).size(), 15u);
  EXPECT_EQ(candidate_literals(b3.action("move-b-to-t"), b3).size(), 8u);
  EXPECT_EQ(candidate_literals(b3.action("move-t-to-b"), b3).size(), 8u);
}

TEST(Pddl, CandidateLiteralsMonotoneInParameters) {
  Domain d = data_domain("depots");
  ActionSchema s = d.action("lift");
  auto base = candidate_literals(s, d);
  s.params.push_back({"extra", "crate"});
  auto more = candidate_literals(s, d);
  for (const auto& l : base) EXPECT_TRUE(std::find(more.begin(), more.end(), l) != more.end());
}

TEST(Pddl, BindAndUnbind) {
  Domain d = data_domain("depots");
  const ActionSchema& drive = d.action("drive");
  EXPECT_EQ(bind(drive, act("drive", {"t0", "dp0", "dp1"}), lit("at", {0, 1})), prop("at", {"t0", "dp0"}));
  auto both = unbind(drive, act("drive", {"t0", "dp0", "dp0"}), prop("at", {"t0", "dp0"}), d);
  EXPECT_EQ(std::set<Literal>(both.begin(), both.end()), (std::set<Literal>{lit("at", {0, 1}), lit("at", {0, 2})}));
  EXPECT_TRUE(unbind(drive, act("drive", {"t0", "dp0", "dp1"}), prop("on", {"c0", "p0"}), d).empty());
  EXPECT_THROW(bind(drive, act("lift", {"h0", "c0", "p0", "dp0"}), lit("at", {0, 1})), SchemaMismatch);
}

TEST(Pddl, UnbindResultsAreCandidatesThatBindBack) {
  Domain d = data_domain("blocks3");
  Corpus c = toy_corpus(10, 0.1, 0.1, 3);
  LiftingIndex index(d);
  for (const auto& t : c.traces)
    for (const auto& step : t.trace.steps)
      for (const auto& g : step.actions) {
        const auto& cands = index.candidates(g.schema);
        std::vector<const State*> seen{&t.trace.init, &t.trace.goal};
        if (step.obs) seen.push_back(&*step.obs);
        for (const State* s : seen)
          for (const auto& p : *s)
            for (const auto& l : index.unbind(g, p)) {
              EXPECT_TRUE(std::find(cands.begin(), cands.end(), l) != cands.end());
              EXPECT_EQ(index.bind(g, l), p);
            }
      }
}

TEST(Pddl, EmitParseRoundTrip) {
  for (const char* name : {"blocks", "blocks3", "driverlog", "depots"}) {
    Domain d = data_domain(name);
    std::string text = emit_domain(d);
    EXPECT_EQ(parse_domain(text), d) << name;
    EXPECT_EQ(emit_domain(parse_domain(text)), text) << name;
  }
}

TEST(Pddl, TypeCompatibilityIsAPartialOrder) {
  Domain d = data_domain("depots");
  auto names = d.types.names();
  for (const auto& a : names) {
    EXPECT_TRUE(d.types.is_subtype(a, a));
    for (const auto& b : names)
      for (const auto& c : names)
        if (d.types.is_subtype(a, b) && d.types.is_subtype(b, c)) EXPECT_TRUE(d.types.is_subtype(a, c));
  }
  EXPECT_TRUE(d.types.is_subtype("crate", "surface"));
  EXPECT_TRUE(d.types.is_subtype("depot", "place"));
  EXPECT_FALSE(d.types.is_subtype("place", "depot"));
}

TEST(Pddl, StripsViolationDetected) {
  ActionSchema a{"a", {{"x", "obj"}}, {}, {}, {}, true};
  EXPECT_FALSE(strips_violation(a));
  a.add.insert(lit("p", {0}));
  a.pre.insert(lit("p", {0}));
  EXPECT_TRUE(strips_violation(a));
  ActionSchema b{"b", {{"x", "obj"}}, {}, {}, {lit("p", {0})}, true};
  EXPECT_TRUE(strips_violation(b));
}

TEST(Pddl, ExecutorAppliesEffects) {
  Domain d = data_domain("blocks3");
  Problem p = parse_problem(read_data("blocks3-template.pddl"), d);
  auto states = execute(d, p.init, {act("move-t-to-b", {"b1", "b2"})});
  ASSERT_EQ(states.size(), 2u);
  EXPECT_TRUE(states[1].count(prop("on", {"b1", "b2"})));
  EXPECT_FALSE(states[1].count(prop("ontable", {"b1"})));
  EXPECT_FALSE(states[1].count(prop("clear", {"b2"})));
  EXPECT_THROW(execute(d, p.init, {act("move-b-to-t", {"b1", "b2"})}), InapplicableModel);
}
