#pragma once

#include <chrono>
#include <cstdint>
#include <string>

#include "amdn/config.hpp"
#include "amdn/decoder.hpp"
#include "amdn/forge.hpp"

namespace amdn {

// Typed views of a merged FlatConfig.

inline CorpusConfig corpus_config(const FlatConfig& c) {
  CorpusConfig k;
  k.corruption.disorder = c.get_double("disorder");
  k.corruption.noise = c.get_double("noise");
  k.corruption.observation_rate = c.get_double("obs_rate");
  k.corruption.seed = c.get_uint("seed");
  k.corruption.horizon = c.get_uint("horizon");
  k.corruption.validate();
  k.traces = c.get_uint("traces");
  k.walk_length = c.get_uint("walk_length");
  k.goal_size = c.get_uint("goal_size");
  k.budget = c.get_uint("plan_budget");
  return k;
}

inline CompileConfig compile_config(const FlatConfig& c) {
  CompileConfig k;
  auto weight = [&c](const char* key) {
    const std::int64_t w = c.get_int(key);
    if (w < 0) throw ConfigError(std::string("config key '") + key + "' must be nonnegative");
    return static_cast<Weight>(w);
  };
  k.w_max = weight("wmax");
  k.delta = c.get_double("delta");
  k.prior_scale = c.get_double("prior_scale");
  const std::string& agg = c.get("aggregation");
  if (agg == "max")
    k.aggregation = Aggregation::max;
  else if (agg == "mean")
    k.aggregation = Aggregation::mean;
  else
    throw ConfigError("aggregation must be max or mean, not '" + agg + "'");
  k.sparsity_weight = weight("sparsity_weight");
  k.min_support = c.get_double("min_support");
  k.count_weighted = c.get_bool("count_weighted");
  k.cap_merged = c.get_bool("cap_merged");
  k.evidence_weight = weight("evidence_weight");
  k.deletion_contrast = c.get_bool("deletion_contrast");
  k.nc2_lookahead = c.get_uint("nc2_lookahead");
  return k;
}

inline LearnConfig learn_config(const FlatConfig& c) {
  LearnConfig k;
  k.compile = compile_config(c);
  const std::string& solver = c.get("solver");
  if (solver == "sls")
    k.solver = SolverKind::sls;
  else if (solver == "exact")
    k.solver = SolverKind::exact;
  else
    throw ConfigError("solver must be sls or exact, not '" + solver + "'");
  k.sls.max_flips = c.get_uint("max_flips");
  k.sls.restarts = c.get_uint("restarts");
  k.sls.noise = c.get_double("sls_noise");
  k.sls.workers = c.get_uint("workers");
  if (k.sls.noise < 0 || k.sls.noise > 1) throw ConfigError("sls_noise must lie in [0,1]");
  if (k.sls.workers == 0) throw ConfigError("workers must be at least 1");
  const double budget = c.get_double("time_budget");
  if (budget <= 0) throw ConfigError("time_budget must be positive");
  k.exact.time_budget = std::chrono::milliseconds(static_cast<long long>(budget * 1000.0));
  k.seed = c.get_uint("seed");
  return k;
}

}  // namespace amdn
