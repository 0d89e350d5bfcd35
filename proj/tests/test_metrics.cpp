#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace amdn;
using namespace amdn::test;

namespace {

// One schema over ten unary predicates, so ten candidate literals.
Domain ten_candidate_domain() {
  std::string preds;
  for (int i = 1; i <= 10; ++i) preds += "(p" + std::to_string(i) + " ?x - obj) ";
  return parse_domain("(define (domain ten) (:requirements :strips :typing) (:types obj) (:predicates " + preds +
                      ") (:action a :parameters (?x - obj) :precondition (and (p1 ?x) (p2 ?x) (p3 ?x))"
                      " :effect (and (p4 ?x) (not (p1 ?x)))))");
}

}  // namespace

TEST(Metrics, OneMissingPreconditionOutOfTen) {
  Domain truth = ten_candidate_domain();
  ASSERT_EQ(candidate_literals(truth.actions[0], truth).size(), 10u);
  Domain learned = truth;
  learned.actions[0].pre.erase(lit("p3", {0}));
  ModelDiff md = err_rates(learned, truth);
  ASSERT_EQ(md.schemas.size(), 1u);
  EXPECT_DOUBLE_EQ(md.schemas[0].rate(Slot::pre), 0.1);
  EXPECT_DOUBLE_EQ(md.schemas[0].rate(Slot::add), 0.0);
  EXPECT_DOUBLE_EQ(md.schemas[0].rate(Slot::del), 0.0);
  EXPECT_NEAR(md.err, 0.1 / 3, 1e-12);
  EXPECT_NEAR(md.acc, 1 - 0.1 / 3, 1e-12);
}

TEST(Metrics, IdenticalModelsScoreOne) {
  Domain d = data_domain("depots");
  ModelDiff md = err_rates(d, d);
  EXPECT_DOUBLE_EQ(md.acc, 1.0);
  EXPECT_DOUBLE_EQ(md.err, 0.0);
}

TEST(Metrics, ComplementModelScoresZero) {
  Domain truth = data_domain("depots");
  Domain learned = truth;
  for (auto& a : learned.actions) {
    auto cands = candidate_literals(a, truth);
    for (Slot s : kSlots) {
      LiteralSet flipped;
      for (const auto& l : cands)
        if (!a.slot(s).count(l)) flipped.insert(l);
      a.slot(s) = flipped;
    }
  }
  EXPECT_NEAR(err_rates(learned, truth).acc, 0.0, 1e-12);
}

TEST(Metrics, SymmetricInArguments) {
  Domain truth = data_domain("blocks3");
  Domain learned = truth;
  learned.actions[0].add.clear();
  learned.actions[1].pre.insert(candidate_literals(learned.actions[1], truth).front());
  EXPECT_DOUBLE_EQ(err_rates(learned, truth).err, err_rates(truth, learned).err);
}

TEST(Metrics, SignatureMismatchRejected) {
  Domain truth = data_domain("depots");
  Domain other = data_domain("blocks3");
  EXPECT_THROW(err_rates(other, truth), SchemaMismatch);
  Domain renamed = truth;
  renamed.actions[0].params[0].type = "crate";
  EXPECT_THROW(err_rates(renamed, truth), SchemaMismatch);
  Domain names = truth;
  names.actions[0].params[0].name = "renamed";
  EXPECT_NO_THROW(err_rates(names, truth));
}

TEST(Metrics, EmptyCandidateSetContributesZero) {
  Domain d = parse_domain(R"((define (domain t) (:requirements :strips :typing) (:types obj)
    (:predicates (p ?x - obj))
    (:action a :parameters ())
    (:action b :parameters (?x - obj) :precondition (p ?x) :effect (and))))");
  Domain learned = d;
  learned.actions[1].pre.clear();
  ModelDiff md = err_rates(learned, d);
  EXPECT_EQ(md.empty_candidate_sets, std::vector<std::string>{"a"});
  // a: 0 error; b: pre 1/1 -> mean 1/3
  EXPECT_NEAR(md.err, (0.0 + 1.0 / 3) / 2, 1e-12);
}

TEST(Trend, GroupsBySingleVaryingParameter) {
  std::vector<RunRecord> runs;
  for (int t : {40, 20})
    for (double acc : {0.8, 0.9, 1.0}) runs.push_back({{{"traces", std::to_string(t)}, {"noise", "0"}}, acc + t / 1000.0});
  TrendTable tt = trend_report(runs);
  EXPECT_EQ(tt.parameter, "traces");
  ASSERT_EQ(tt.rows.size(), 2u);
  EXPECT_EQ(tt.rows[0].value, "20");
  EXPECT_EQ(tt.rows[0].runs, 3u);
  EXPECT_NEAR(tt.rows[0].mean, 0.92, 1e-12);
  EXPECT_NEAR(tt.rows[0].stddev, 0.1, 1e-12);
  EXPECT_NEAR(tt.rows[1].mean, 0.94, 1e-12);
}

TEST(Trend, SingleRunAndNoVariation) {
  TrendTable one = trend_report({{{{"traces", "20"}}, 0.7}});
  EXPECT_TRUE(one.parameter.empty());
  ASSERT_EQ(one.rows.size(), 1u);
  EXPECT_DOUBLE_EQ(one.rows[0].stddev, 0.0);
  EXPECT_DOUBLE_EQ(one.rows[0].mean, 0.7);
}

TEST(Trend, RejectsEmptyAndMixedVariation) {
  EXPECT_THROW(trend_report({}), EmptyInput);
  std::vector<RunRecord> runs{{{{"traces", "20"}, {"noise", "0"}}, 1.0}, {{{"traces", "40"}, {"noise", "0.1"}}, 1.0}};
  EXPECT_THROW(trend_report(runs), MixedVariation);
}
