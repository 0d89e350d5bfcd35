#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "test_util.hpp"

using namespace amdn;

namespace {

FlatConfig shipped_defaults() {
  std::ifstream in(std::string(AMDN_CONFIG_DIR) + "/defaults.conf");
  std::ostringstream os;
  os << in.rdbuf();
  return FlatConfig::parse(os.str());
}

}  // namespace

TEST(Config, ParsesKeysValuesAndComments) {
  FlatConfig c = FlatConfig::parse("# header\nalpha = 1\n\n  beta=two words  # tail\nlist = 1, 2 ,3\n");
  EXPECT_EQ(c.get("alpha"), "1");
  EXPECT_EQ(c.get("beta"), "two words");
  EXPECT_EQ(c.get_list("list"), (std::vector<std::string>{"1", "2", "3"}));
  EXPECT_EQ(FlatConfig::parse(c.text()).values(), c.values());
}

TEST(Config, SyntaxErrorsNameTheLine) {
  for (const char* bad : {"a = 1\nnovalue\n", "a = 1\nBad = 2\n", "a = 1\na = 2\n"}) {
    try {
      FlatConfig::parse(bad);
      ADD_FAILURE() << bad;
    } catch (const FormatError& e) {
      EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
  }
}

TEST(Config, TypedGettersRejectBadValues) {
  FlatConfig c = FlatConfig::parse("n = -3\nx = 0.5\nb = maybe\nbig = 18446744073709551615\n");
  EXPECT_EQ(c.get_int("n"), -3);
  EXPECT_THROW(c.get_uint("n"), ConfigError);
  EXPECT_THROW(c.get_int("x"), ConfigError);
  EXPECT_DOUBLE_EQ(c.get_double("x"), 0.5);
  EXPECT_THROW(c.get_bool("b"), ConfigError);
  EXPECT_EQ(c.get_uint("big"), UINT64_MAX);
  EXPECT_THROW(c.get("missing"), ConfigError);
}

TEST(Config, MergeOverrides) {
  FlatConfig a = FlatConfig::parse("x = 1\ny = 2\n");
  a.merge(FlatConfig::parse("y = 3\nz = 4\n"));
  EXPECT_EQ(a.get("x"), "1");
  EXPECT_EQ(a.get("y"), "3");
  EXPECT_EQ(a.get("z"), "4");
}

TEST(Config, ShippedDefaultsMatchLibraryDefaults) {
  FlatConfig c = shipped_defaults();
  CompileConfig k = compile_config(c);
  CompileConfig want;
  EXPECT_EQ(k.w_max, want.w_max);
  EXPECT_EQ(k.delta, want.delta);
  EXPECT_EQ(k.prior_scale, want.prior_scale);
  EXPECT_EQ(k.aggregation, want.aggregation);
  EXPECT_EQ(k.sparsity_weight, want.sparsity_weight);
  EXPECT_EQ(k.min_support, want.min_support);
  EXPECT_EQ(k.count_weighted, want.count_weighted);
  EXPECT_EQ(k.cap_merged, want.cap_merged);
  EXPECT_EQ(k.evidence_weight, want.evidence_weight);
  EXPECT_EQ(k.deletion_contrast, want.deletion_contrast);
  EXPECT_EQ(k.nc2_lookahead, want.nc2_lookahead);
  LearnConfig l = learn_config(c);
  EXPECT_EQ(l.solver, SolverKind::sls);
  EXPECT_EQ(l.sls.max_flips, SlsOptions{}.max_flips);
  CorpusConfig cc = corpus_config(c);
  EXPECT_EQ(cc.traces, 50u);
  EXPECT_EQ(cc.corruption.disorder, 0.0);
}

TEST(Config, SettingsRejectBadValues) {
  FlatConfig c = shipped_defaults();
  FlatConfig bad = c;
  bad.set("aggregation", "median");
  EXPECT_THROW(compile_config(bad), ConfigError);
  bad = c;
  bad.set("wmax", "-5");
  EXPECT_THROW(compile_config(bad), ConfigError);
  bad = c;
  bad.set("sls_noise", "2");
  EXPECT_THROW(learn_config(bad), ConfigError);
  bad = c;
  bad.set("workers", "0");
  EXPECT_THROW(learn_config(bad), ConfigError);
  bad = c;
  bad.set("noise", "1.5");
  EXPECT_THROW(corpus_config(bad), ConfigError);
}
