#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "amdn/errors.hpp"
#include "amdn/pddl.hpp"

namespace amdn {

struct SchemaDiff {
  std::string schema;
  std::size_t candidates = 0;
  std::array<std::size_t, 3> missing{};  // in truth, not learned; indexed by Slot
  std::array<std::size_t, 3> extra{};    // learned, not in truth
  std::array<double, 3> err{};

  std::size_t errors(Slot s) const { return missing[static_cast<int>(s)] + extra[static_cast<int>(s)]; }
  double rate(Slot s) const { return err[static_cast<int>(s)]; }
};

struct ModelDiff {
  std::vector<SchemaDiff> schemas;  // sorted by name
  std::vector<std::string> empty_candidate_sets;
  double err = 0.0;  // mean of per-schema slot error rates
  double acc = 1.0;
};

namespace detail {

inline void require_same_signatures(const Domain& learned, const Domain& truth) {
  if (learned.predicates != truth.predicates) throw SchemaMismatch("domains declare different predicates");
  if (learned.actions.size() != truth.actions.size()) throw SchemaMismatch("domains declare different action sets");
  for (std::size_t i = 0; i < truth.actions.size(); ++i) {
    const auto& a = learned.actions[i];
    const auto& b = truth.actions[i];
    if (a.name != b.name) throw SchemaMismatch("action '" + b.name + "' missing from learned domain");
    // Parameters are compared by position and type; their names are irrelevant.
    bool same = a.params.size() == b.params.size();
    for (std::size_t k = 0; same && k < a.params.size(); ++k) same = a.params[k].type == b.params[k].type;
    if (!same) throw SchemaMismatch("action '" + b.name + "' has different parameter types");
  }
}

}  // namespace detail

// Slot-wise symmetric difference over the candidate set of each schema.
// A schema without candidates contributes zero error and is listed.
inline ModelDiff err_rates(const Domain& learned, const Domain& truth) {
  detail::require_same_signatures(learned, truth);
  ModelDiff md;
  double total = 0.0;
  for (std::size_t i = 0; i < truth.actions.size(); ++i) {
    const auto& l = learned.actions[i];
    const auto& t = truth.actions[i];
    SchemaDiff sd;
    sd.schema = t.name;
    sd.candidates = candidate_literals(t, truth).size();
    if (sd.candidates == 0) md.empty_candidate_sets.push_back(t.name);
    double mean = 0.0;
    for (Slot s : kSlots) {
      const int k = static_cast<int>(s);
      for (const auto& lit : t.slot(s)) sd.missing[k] += l.slot(s).count(lit) ? 0 : 1;
      for (const auto& lit : l.slot(s)) sd.extra[k] += t.slot(s).count(lit) ? 0 : 1;
      sd.err[k] = sd.candidates ? static_cast<double>(sd.errors(s)) / static_cast<double>(sd.candidates) : 0.0;
      mean += sd.err[k] / 3.0;
    }
    total += mean;
    md.schemas.push_back(std::move(sd));
  }
  md.err = truth.actions.empty() ? 0.0 : total / static_cast<double>(truth.actions.size());
  md.acc = 1.0 - md.err;
  return md;
}

// ---------------------------------------------------------------------------

struct RunRecord {
  std::map<std::string, std::string> config;  // parameters of the run, excluding seeds
  double acc = 0.0;
};

struct TrendRow {
  std::string value;
  std::size_t runs = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single run
};

struct TrendTable {
  std::string parameter;  // empty when nothing varies
  std::vector<TrendRow> rows;
};

inline double sample_stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

// Groups runs by the single parameter whose value varies across them.
inline TrendTable trend_report(const std::vector<RunRecord>& runs) {
  if (runs.empty()) throw EmptyInput("trend report needs at least one run");
  std::set<std::string> keys;
  for (const auto& r : runs)
    for (const auto& [k, _] : r.config) keys.insert(k);
  std::vector<std::string> varied;
  for (const auto& k : keys) {
    std::set<std::string> values;
    for (const auto& r : runs) {
      auto it = r.config.find(k);
      values.insert(it == r.config.end() ? std::string() : it->second);
    }
    if (values.size() > 1) varied.push_back(k);
  }
  if (varied.size() > 1) {
    std::string names;
    for (const auto& k : varied) names += (names.empty() ? "" : ", ") + k;
    throw MixedVariation("more than one parameter varies: " + names);
  }
  TrendTable table;
  if (!varied.empty()) table.parameter = varied[0];
  std::map<std::string, std::vector<double>> groups;
  std::vector<std::string> order;
  for (const auto& r : runs) {
    std::string v;
    if (!table.parameter.empty()) {
      auto it = r.config.find(table.parameter);
      if (it != r.config.end()) v = it->second;
    }
    auto [it, fresh] = groups.try_emplace(v);
    if (fresh) order.push_back(v);
    it->second.push_back(r.acc);
  }
  // Numeric values sort numerically, anything else keeps first-seen order.
  auto numeric = [](const std::string& s, double& out) {
    try {
      std::size_t used = 0;
      out = std::stod(s, &used);
      return used == s.size();
    } catch (...) {
      return false;
    }
  };
  bool all_numeric = true;
  double tmp = 0.0;
  for (const auto& v : order) all_numeric = all_numeric && numeric(v, tmp);
  if (all_numeric)
    std::stable_sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
      double x = 0, y = 0;
      numeric(a, x);
      numeric(b, y);
      return x < y;
    });
  for (const auto& v : order) {
    const auto& xs = groups[v];
    TrendRow row;
    row.value = v;
    row.runs = xs.size();
    for (double x : xs) row.mean += x;
    row.mean /= static_cast<double>(xs.size());
    row.stddev = sample_stddev(xs);
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace amdn
