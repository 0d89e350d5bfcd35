#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "amdn/errors.hpp"
#include "amdn/formula.hpp"
#include "amdn/pddl.hpp"
#include "amdn/trace.hpp"
#include "amdn/wcnf.hpp"

namespace amdn {

// ---------------------------------------------------------------------------
// Variable catalog.

// Boolean decision "literal occupies slot of schema".
struct SchemaVariable {
  std::string schema;
  Literal literal;
  Slot slot = Slot::pre;
  int id = 0;
};

class VariableCatalog {
 public:
  VariableCatalog() = default;

  // One variable per (schema, candidate literal, slot), ids contiguous from 1
  // in (schema, literal, slot) order.
  explicit VariableCatalog(const LiftingIndex& index) {
    for (const auto& a : index.domain().actions)
      for (const auto& lit : index.candidates(a.name))
        for (Slot s : kSlots) {
          int id = static_cast<int>(vars_.size()) + 1;
          vars_.push_back({a.name, lit, s, id});
          ids_.emplace(std::make_tuple(a.name, lit, s), id);
        }
  }

  int size() const { return static_cast<int>(vars_.size()); }
  const std::vector<SchemaVariable>& variables() const { return vars_; }

  const SchemaVariable& at(int id) const {
    if (id < 1 || id > size()) throw UnknownVariable("variable id " + std::to_string(id) + " is not cataloged");
    return vars_[static_cast<std::size_t>(id - 1)];
  }

  std::optional<int> find(const std::string& schema, const Literal& lit, Slot s) const {
    auto it = ids_.find(std::make_tuple(schema, lit, s));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  int id(const std::string& schema, const Literal& lit, Slot s) const {
    if (auto v = find(schema, lit, s)) return *v;
    throw UnknownVariable("no variable for " + std::string(slot_name(s)) + "(" + schema + ", " + to_string(lit) + ")");
  }

 private:
  std::vector<SchemaVariable> vars_;
  std::map<std::tuple<std::string, Literal, Slot>, int> ids_;
};

inline VariableCatalog build_variables(const LiftingIndex& index) { return VariableCatalog(index); }

// ---------------------------------------------------------------------------
// Disorder prior: softmax of weighted features over the ordered action pairs in scope.

using ActionPair = std::pair<GroundAction, GroundAction>;
using PairFeature = std::function<double(const GroundAction&, const GroundAction&)>;

struct NamedFeature {
  std::string name;
  PairFeature fn;
};

// f1: number of objects shared by both actions.
inline double shared_objects(const GroundAction& x, const GroundAction& y) {
  std::set<std::string> a(x.args.begin(), x.args.end());
  std::set<std::string> b(y.args.begin(), y.args.end());
  std::size_t n = 0;
  for (const auto& o : a) n += b.count(o);
  return static_cast<double>(n);
}

// f2: 1 iff both actions have the same number of parameters.
inline double same_arity(const GroundAction& x, const GroundAction& y) {
  return x.args.size() == y.args.size() ? 1.0 : 0.0;
}

inline std::vector<NamedFeature> default_features() {
  return {{"shared_objects", shared_objects}, {"same_arity", same_arity}};
}

// Ordered pairs (both orientations) of distinct actions drawn from adjacent
// parallel sets anywhere in the corpus.
inline std::set<ActionPair> disorder_scope(const std::vector<PlanTrace>& traces) {
  std::set<ActionPair> scope;
  for (const auto& t : traces)
    for (std::size_t i = 0; i + 1 < t.steps.size(); ++i)
      for (const auto& x : t.steps[i].actions)
        for (const auto& y : t.steps[i + 1].actions)
          if (x != y) {
            scope.emplace(x, y);
            scope.emplace(y, x);
          }
  return scope;
}

class DisorderPrior {
 public:
  DisorderPrior() = default;

  // Each of k features weighs 1/k.
  DisorderPrior(std::vector<NamedFeature> features, const std::set<ActionPair>& scope)
      : features_(std::move(features)) {
    if (scope.empty()) return;
    const double theta = features_.empty() ? 0.0 : 1.0 / static_cast<double>(features_.size());
    std::vector<double> logits;
    logits.reserve(scope.size());
    for (const auto& [x, y] : scope) {
      double z = 0.0;
      for (const auto& f : features_) z += theta * f.fn(x, y);
      logits.push_back(z);
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double z : logits) denom += std::exp(z - top);
    std::size_t k = 0;
    for (const auto& pr : scope) p_.emplace(pr, std::exp(logits[k++] - top) / denom);
  }

  double probability(const GroundAction& x, const GroundAction& y) const {
    auto it = p_.find({x, y});
    if (it == p_.end()) throw PairOutOfScope("pair " + to_string(x) + ", " + to_string(y) + " is outside the prior's scope");
    return it->second;
  }

  std::size_t scope_size() const { return p_.size(); }
  const std::map<ActionPair, double>& table() const { return p_; }
  const std::vector<NamedFeature>& features() const { return features_; }

 private:
  std::vector<NamedFeature> features_;
  std::map<ActionPair, double> p_;
};

inline double disorder_probability(const GroundAction& x, const GroundAction& y, const std::set<ActionPair>& scope) {
  if (x == y) throw PairOutOfScope("disorder probability needs two distinct actions");
  return DisorderPrior(default_features(), scope).probability(x, y);
}

// ---------------------------------------------------------------------------
// Weighted formulas.

// NC4 (deletion contrast) and PRIOR (sparsity) extend the noise and
// disorder families; both can be switched off in CompileConfig.
enum class Family { DC1, DC2, P1, P2, PC1, PC2, NC1, NC2, NC3, NC4, PRIOR };
inline constexpr Family kFamilies[] = {Family::DC1, Family::DC2, Family::P1,  Family::P2,  Family::PC1, Family::PC2,
                                       Family::NC1, Family::NC2, Family::NC3, Family::NC4, Family::PRIOR};

inline const char* family_name(Family f) {
  switch (f) {
    case Family::DC1: return "DC1";
    case Family::DC2: return "DC2";
    case Family::P1: return "P1";
    case Family::P2: return "P2";
    case Family::PC1: return "PC1";
    case Family::PC2: return "PC2";
    case Family::NC1: return "NC1";
    case Family::NC2: return "NC2";
    case Family::NC3: return "NC3";
    case Family::NC4: return "NC4";
    case Family::PRIOR: return "PRIOR";
  }
  return "?";
}

inline constexpr std::size_t kNoTrace = SIZE_MAX;

struct Provenance {
  Family family = Family::PRIOR;
  std::size_t trace = kNoTrace;
  std::vector<std::size_t> steps;  // 1-based
};

struct WeightedFormula {
  Formula formula;
  Weight weight = 0;
  bool hard = false;
  Provenance provenance;
  std::size_t merged = 1;  // how many generated formulas collapsed into this one
};

// A soft ordered/swapped pair generated from one (a_x, a_y); the two weights
// always sum to w_max.
struct DualPair {
  Family ordered = Family::DC1;
  Weight ordered_weight = 0;
  Weight swapped_weight = 0;
  double probability = 0.0;
};

enum class Aggregation { max, mean };

// Defaults extend the plain constraint families with evidence accumulation
// (see README); CompileConfig::literal() switches every extension off.
struct CompileConfig {
  Weight w_max = 10000;
  double delta = 2.0;              // NC occurrence threshold (lifted counts)
  double prior_scale = 1.0;        // multiplier on disorder probabilities, clamped to 1
  Aggregation aggregation = Aggregation::max;
  Weight sparsity_weight = 1;      // soft ¬v per variable; 0 disables
  double min_support = 0.8;        // NC1/NC3/NC4 also need this fraction of the schema's observed occurrences
  bool count_weighted = true;      // NC1/NC3/NC4 weight times the lifted occurrence count
  bool cap_merged = false;         // cap summed duplicate weights at w_max - 1
  Weight evidence_weight = 1000;   // soft ¬v per observed occurrence lacking the literal; 0 disables
  bool deletion_contrast = true;   // NC4: seen before a, less than half as often after a => del
  std::size_t nc2_lookahead = 1;   // NC2 also admits adders from this many later parallel sets

  static CompileConfig literal() {
    CompileConfig c;
    c.min_support = 0.0;
    c.count_weighted = false;
    c.cap_merged = true;
    c.evidence_weight = 0;
    c.deletion_contrast = false;
    c.nc2_lookahead = 0;
    return c;
  }
};

struct CompileStats {
  std::map<Family, std::size_t> generated;  // before merging
  std::size_t skipped_dc = 0;               // a_y with no shared literal in the previous set
  std::size_t skipped_nc2 = 0;              // observations lifting onto no preceding action
};

struct Theory {
  int num_vars = 0;  // catalog size
  Weight w_max = 0;
  std::vector<WeightedFormula> formulas;  // merged
  std::vector<DualPair> pairs;
  CompileStats stats;
};

namespace detail {

inline Formula var_atom(const VariableCatalog& cat, const std::string& schema, const Literal& l, Slot s) {
  return Formula::atom(cat.id(schema, l, s));
}

// Aligned literal pairs (Lx, Ly) with bind(x, Lx) == bind(y, Ly).
inline std::vector<std::pair<Literal, Literal>> shared_alignments(const LiftingIndex& index, const GroundAction& x,
                                                                  const GroundAction& y) {
  std::vector<std::pair<Literal, Literal>> out;
  for (const auto& lx : index.candidates(x.schema)) {
    Proposition r = index.bind(x, lx);
    for (auto& ly : index.unbind(y, r)) out.emplace_back(lx, std::move(ly));
  }
  return out;
}

inline Weight scaled_weight(double p, Weight w_max) {
  return static_cast<Weight>(std::llround(std::clamp(p, 0.0, 1.0) * static_cast<double>(w_max)));
}

// The four interaction patterns of "first" followed by "second" on one
// aligned proposition.
inline Formula interaction(const VariableCatalog& cat, const std::string& first, const Literal& lf,
                           const std::string& second, const Literal& ls) {
  auto v = [&](const std::string& s, const Literal& l, Slot slot) { return var_atom(cat, s, l, slot); };
  return Formula::any({
      Formula::all({v(first, lf, Slot::pre), Formula::negate(v(first, lf, Slot::del)), v(second, ls, Slot::del)}),
      Formula::all({v(first, lf, Slot::add), v(second, ls, Slot::pre)}),
      Formula::all({v(first, lf, Slot::add), v(second, ls, Slot::del)}),
      Formula::all({v(first, lf, Slot::del), v(second, ls, Slot::add)}),
  });
}

// Pairwise add/del conflicts between two parallel actions on every shared
// proposition.
inline std::optional<Formula> slot_conflicts(const LiftingIndex& index, const VariableCatalog& cat,
                                             const GroundAction& a, const GroundAction& b) {
  std::vector<Formula> clauses;
  for (const auto& [la, lb] : shared_alignments(index, a, b))
    for (Slot sa : {Slot::add, Slot::del})
      for (Slot sb : {Slot::add, Slot::del})
        clauses.push_back(Formula::any({Formula::negate(var_atom(cat, a.schema, la, sa)),
                                        Formula::negate(var_atom(cat, b.schema, lb, sb))}));
  if (clauses.empty()) return std::nullopt;
  return Formula::all(std::move(clauses));
}

inline void emit(std::vector<WeightedFormula>& out, CompileStats& stats, Formula f, Weight w, Family fam,
                 std::size_t trace, std::vector<std::size_t> steps) {
  ++stats.generated[fam];
  if (w == 0) return;
  out.push_back({std::move(f), w, false, {fam, trace, std::move(steps)}, 1});
}

// (count(r) / total) · w_max, optionally multiplied by a scaled lifted
// occurrence count.
inline Weight nc_weight(const OccurrenceTables& tables, const std::string& predicate, Weight w_max,
                        std::int64_t scaled_count = 0) {
  if (tables.total == 0) return 0;
  Weight w = scaled_weight(static_cast<double>(tables.predicate_count(predicate)) / static_cast<double>(tables.total),
                           w_max);
  if (scaled_count <= 0) return w;
  return static_cast<Weight>(std::llround(static_cast<double>(w) * OccurrenceTables::value(scaled_count)));
}

}  // namespace detail

// Hard STRIPS consistency: add ⇒ ¬pre (P1) and del ⇒ pre (P2) for every
// cataloged literal.
inline std::vector<WeightedFormula> build_hard(const VariableCatalog& cat, CompileStats& stats) {
  std::vector<WeightedFormula> out;
  for (const auto& v : cat.variables()) {
    if (v.slot != Slot::pre) continue;
    int pre = v.id;
    int add = cat.id(v.schema, v.literal, Slot::add);
    int del = cat.id(v.schema, v.literal, Slot::del);
    out.push_back({Formula::any({Formula::lit(-add), Formula::lit(-pre)}), 0, true, {Family::P1, kNoTrace, {}}, 1});
    out.push_back({Formula::any({Formula::lit(-del), Formula::lit(pre)}), 0, true, {Family::P2, kNoTrace, {}}, 1});
    stats.generated[Family::P1]++;
    stats.generated[Family::P2]++;
  }
  return out;
}

// Disorder constraints over each pair of adjacent parallel sets.
inline std::vector<WeightedFormula> build_dc(const std::vector<PlanTrace>& traces, const LiftingIndex& index,
                                             const VariableCatalog& cat, const DisorderPrior& prior,
                                             const CompileConfig& cfg, std::vector<DualPair>& pairs,
                                             CompileStats& stats) {
  std::vector<WeightedFormula> out;
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const auto& steps = traces[t].steps;
    for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
      for (const auto& y : steps[i + 1].actions) {
        std::vector<Formula> ordered, swapped;
        std::vector<double> ps;
        for (const auto& x : steps[i].actions) {
          if (x == y) continue;
          auto aligned = detail::shared_alignments(index, x, y);
          if (aligned.empty()) continue;
          ps.push_back(std::min(1.0, cfg.prior_scale * prior.probability(x, y)));
          for (const auto& [lx, ly] : aligned) {
            ordered.push_back(detail::interaction(cat, x.schema, lx, y.schema, ly));
            swapped.push_back(detail::interaction(cat, y.schema, ly, x.schema, lx));
          }
        }
        if (ps.empty()) {
          ++stats.skipped_dc;
          continue;
        }
        double pbar = cfg.aggregation == Aggregation::max
                          ? *std::max_element(ps.begin(), ps.end())
                          : std::accumulate(ps.begin(), ps.end(), 0.0) / static_cast<double>(ps.size());
        Weight w_swapped = detail::scaled_weight(pbar, cfg.w_max);
        Weight w_ordered = cfg.w_max - w_swapped;
        pairs.push_back({Family::DC1, w_ordered, w_swapped, pbar});
        detail::emit(out, stats, Formula::any(std::move(ordered)), w_ordered, Family::DC1, t, {i + 1, i + 2});
        detail::emit(out, stats, Formula::any(std::move(swapped)), w_swapped, Family::DC2, t, {i + 1, i + 2});
      }
    }
  }
  return out;
}

// Parallel constraints between members of the same set (soft part; the hard
// part is build_hard).
inline std::vector<WeightedFormula> build_pc(const std::vector<PlanTrace>& traces, const LiftingIndex& index,
                                             const VariableCatalog& cat, const DisorderPrior& prior,
                                             const CompileConfig& cfg, std::vector<DualPair>& pairs,
                                             CompileStats& stats) {
  std::vector<WeightedFormula> out;
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const auto& steps = traces[t].steps;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const auto& set = steps[i].actions;
      for (const auto& xp : set) {
        for (const auto& x : set) {
          if (xp == x) continue;
          auto ordered = detail::slot_conflicts(index, cat, xp, x);
          if (i + 1 == steps.size()) {
            if (ordered) detail::emit(out, stats, std::move(*ordered), cfg.w_max, Family::PC1, t, {i + 1});
            continue;
          }
          for (const auto& y : steps[i + 1].actions) {
            if (y == x || y == xp) continue;
            auto swapped = detail::slot_conflicts(index, cat, xp, y);
            if (!ordered && !swapped) continue;
            double p = std::min(1.0, cfg.prior_scale * prior.probability(x, y));
            Weight w_swapped = detail::scaled_weight(p, cfg.w_max);
            Weight w_ordered = cfg.w_max - w_swapped;
            pairs.push_back({Family::PC1, w_ordered, w_swapped, p});
            if (ordered) detail::emit(out, stats, *ordered, w_ordered, Family::PC1, t, {i + 1, i + 2});
            if (swapped) detail::emit(out, stats, std::move(*swapped), w_swapped, Family::PC2, t, {i + 1, i + 2});
          }
        }
      }
    }
  }
  return out;
}

// Noise constraints from lifted occurrence statistics.
inline std::vector<WeightedFormula> build_nc(const std::vector<PlanTrace>& traces, const LiftingIndex& index,
                                             const VariableCatalog& cat, const OccurrenceTables& tables,
                                             const CompileConfig& cfg, CompileStats& stats) {
  std::vector<WeightedFormula> out;
  const auto threshold = static_cast<std::int64_t>(std::llround(cfg.delta * static_cast<double>(kCountScale)));
  // NC1: frequently observed after a => not deleted by a.
  for (const auto& [key, count] : tables.after) {
    if (count <= threshold || tables.support_after(key) < cfg.min_support) continue;
    detail::emit(out, stats, Formula::negate(detail::var_atom(cat, key.schema, key.literal, Slot::del)),
                 detail::nc_weight(tables, key.literal.predicate, cfg.w_max, cfg.count_weighted ? count : 0), Family::NC1, kNoTrace, {});
  }
  // NC2: a proposition observed later but absent from the initial state is added by some
  // preceding action.
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const auto& tr = traces[t];
    auto require_adders = [&](const State& obs, std::size_t upto) {
      for (const auto& r : obs) {
        if (tr.init.count(r)) continue;
        std::vector<Formula> adders;
        const std::size_t end = std::min(tr.steps.size(), upto + cfg.nc2_lookahead);
        for (std::size_t k = 0; k < end; ++k)
          for (const auto& g : tr.steps[k].actions)
            for (const auto& l : index.unbind(g, r)) adders.push_back(detail::var_atom(cat, g.schema, l, Slot::add));
        if (adders.empty()) {
          ++stats.skipped_nc2;
          continue;
        }
        detail::emit(out, stats, Formula::any(std::move(adders)), detail::nc_weight(tables, r.predicate, cfg.w_max),
                     Family::NC2, t, {upto});
      }
    };
    for (std::size_t k = 0; k < tr.steps.size(); ++k)
      if (tr.steps[k].obs) require_adders(*tr.steps[k].obs, k + 1);
    require_adders(tr.goal, tr.steps.size());
  }
  // NC3: frequently observed before a => precondition of a.
  for (const auto& [key, count] : tables.before) {
    if (count <= threshold || tables.support_before(key) < cfg.min_support) continue;
    detail::emit(out, stats, detail::var_atom(cat, key.schema, key.literal, Slot::pre),
                 detail::nc_weight(tables, key.literal.predicate, cfg.w_max, cfg.count_weighted ? count : 0), Family::NC3, kNoTrace, {});
  }
  // NC4: frequently observed before a but less than half as often after it
  // => deleted by a.
  if (cfg.deletion_contrast)
    for (const auto& [key, count] : tables.before) {
      const double before = tables.support_before(key);
      if (count <= threshold || before < cfg.min_support) continue;
      if (tables.support_after(key) >= before / 2) continue;
      detail::emit(out, stats, detail::var_atom(cat, key.schema, key.literal, Slot::del),
                   detail::nc_weight(tables, key.literal.predicate, cfg.w_max, cfg.count_weighted ? count : 0), Family::NC4, kNoTrace, {});
    }
  return out;
}

// Soft ¬v for every variable: the sparsity weight, plus the evidence weight
// for each observed occurrence of the schema whose state lacked the literal
// (the state before it for pre and del, after it for add).
inline std::vector<WeightedFormula> build_sparsity(const VariableCatalog& cat, const OccurrenceTables& tables,
                                                   const CompileConfig& cfg, CompileStats& stats) {
  std::vector<WeightedFormula> out;
  for (const auto& v : cat.variables()) {
    const LiftedKey key{v.schema, v.literal};
    const bool add = v.slot == Slot::add;
    const auto& occurrences = add ? tables.actions_after : tables.actions_before;
    auto occ = occurrences.find(v.schema);
    const double n = occ == occurrences.end() ? 0.0 : static_cast<double>(occ->second);
    const double absent = std::max(0.0, n - (add ? tables.after_count(v.schema, v.literal)
                                                 : tables.before_count(v.schema, v.literal)));
    Weight w = cfg.sparsity_weight +
               static_cast<Weight>(std::llround(absent * static_cast<double>(cfg.evidence_weight)));
    detail::emit(out, stats, Formula::lit(-v.id), w, Family::PRIOR, kNoTrace, {});
  }
  return out;
}

// Canonicalizes and merges identical formulas. Hard duplicates collapse;
// soft duplicates sum their weights, optionally capped. Soft formulas that
// are constantly true are dropped. Order of first occurrence is kept.
inline std::vector<WeightedFormula> merge_formulas(std::vector<WeightedFormula> in, std::optional<Weight> cap = std::nullopt) {
  std::vector<WeightedFormula> out;
  std::unordered_map<std::string, std::size_t> seen;
  for (auto& f : in) {
    f.formula = canonical(f.formula);
    if (f.formula.kind == Formula::Kind::constant && f.formula.value) continue;
    std::string key = (f.hard ? "H" : "S") + f.formula.key();
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(std::move(key), out.size());
      out.push_back(std::move(f));
      continue;
    }
    WeightedFormula& m = out[it->second];
    ++m.merged;
    if (!m.hard) m.weight = cap ? std::min(m.weight + f.weight, *cap) : m.weight + f.weight;
  }
  return out;
}

// Full compilation: variables, DC, PC (hard + soft), NC, sparsity prior,
// then merging.
inline Theory compile_theory(const std::vector<PlanTrace>& traces, const LiftingIndex& index,
                             const VariableCatalog& cat, const CompileConfig& cfg,
                             std::vector<NamedFeature> features = default_features()) {
  if (cfg.w_max < 2) throw ConfigError("w_max must be at least 2");
  if (cfg.delta < 0) throw ConfigError("delta must be nonnegative");
  if (cfg.min_support < 0 || cfg.min_support > 1) throw ConfigError("min support must lie in [0,1]");
  if (cfg.evidence_weight >= cfg.w_max) throw ConfigError("evidence weight must stay below w_max");
  if (cfg.prior_scale < 0) throw ConfigError("prior scale must be nonnegative");
  Theory th;
  th.num_vars = cat.size();
  th.w_max = cfg.w_max;
  DisorderPrior prior(std::move(features), disorder_scope(traces));
  OccurrenceTables tables = occurrence_tables(traces, index);

  std::vector<WeightedFormula> all = build_hard(cat, th.stats);
  auto append = [&all](std::vector<WeightedFormula> more) {
    for (auto& f : more) all.push_back(std::move(f));
  };
  append(build_dc(traces, index, cat, prior, cfg, th.pairs, th.stats));
  append(build_pc(traces, index, cat, prior, cfg, th.pairs, th.stats));
  append(build_nc(traces, index, cat, tables, cfg, th.stats));
  append(build_sparsity(cat, tables, cfg, th.stats));
  th.formulas = merge_formulas(std::move(all), cfg.cap_merged ? std::optional<Weight>(cfg.w_max - 1) : std::nullopt);
  return th;
}

// ---------------------------------------------------------------------------
// Clausal lowering.

struct LoweredTheory {
  WcnfInstance wcnf;
  int original_vars = 0;  // ids 1..original_vars are catalog variables
};

namespace detail {

// Polarity-aware Tseitin encoding: an auxiliary b only needs b → F because
// every formula occurs positively (asserted hard, or rewarded softly via a
// unit on its auxiliary).
class Lowerer {
 public:
  explicit Lowerer(int original_vars) : next_(original_vars) {}

  void assert_hard(const Formula& f) {
    using K = Formula::Kind;
    if (f.kind == K::constant) {
      if (!f.value) add({}, true);
    } else if (f.is_literal()) {
      add({f.as_literal()}, true);
    } else if (f.kind == K::conjunction) {
      for (const auto& k : f.kids) assert_hard(k);
    } else {
      std::vector<int> c;
      for (const auto& k : f.kids) c.push_back(implied(k));
      add(std::move(c), true);
    }
  }

  void assert_soft(const Formula& f, Weight w) {
    if (f.kind == Formula::Kind::constant) {
      if (!f.value) constant_ += w;
      return;
    }
    if (is_clause(f)) {
      add(clause_literals(f), false, w);
      return;
    }
    add({implied(f)}, false, w);
  }

  WcnfInstance finish() {
    WcnfInstance inst;
    inst.num_vars = next_;
    inst.constant_cost = constant_;
    Weight soft = 0;
    for (std::size_t i = 0; i < clauses_.size(); ++i)
      if (!hard_[i]) soft += clauses_[i].weight;
    inst.top = soft + constant_ + 1;
    for (std::size_t i = 0; i < clauses_.size(); ++i)
      if (hard_[i]) clauses_[i].weight = inst.top;
    inst.clauses = std::move(clauses_);
    return inst;
  }

 private:
  int next_;
  Weight constant_ = 0;
  std::vector<WeightedClause> clauses_;
  std::vector<bool> hard_;
  std::unordered_map<std::string, int> memo_;

  void add(std::vector<int> lits, bool hard, Weight w = 0) {
    clauses_.push_back({std::move(lits), w});
    hard_.push_back(hard);
  }

  // A literal whose truth implies f.
  int implied(const Formula& f) {
    if (f.is_literal()) return f.as_literal();
    std::string key = f.key();
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    int b = ++next_;
    memo_.emplace(std::move(key), b);
    encode_implication(b, f);
    return b;
  }

  void encode_implication(int b, const Formula& f) {
    using K = Formula::Kind;
    if (f.kind == K::constant) {
      if (!f.value) add({-b}, true);
    } else if (f.is_literal()) {
      add({-b, f.as_literal()}, true);
    } else if (f.kind == K::conjunction) {
      for (const auto& k : f.kids) encode_implication(b, k);
    } else {
      std::vector<int> c{-b};
      for (const auto& k : f.kids) c.push_back(implied(k));
      add(std::move(c), true);
    }
  }
};

}  // namespace detail

// Lowers formulas over variables 1..original_vars to WCNF. Hard formulas
// become hard clauses; a non-clausal soft formula F of weight w becomes
// hard definition clauses for an auxiliary b (b → F) plus the soft unit b.
// top is the soft total plus one.
inline LoweredTheory lower_to_wcnf(const std::vector<WeightedFormula>& formulas, int original_vars) {
  detail::Lowerer low(original_vars);
  for (const auto& wf : formulas) {
    Formula f = canonical(wf.formula);
    if (wf.hard) low.assert_hard(f);
    else low.assert_soft(f, wf.weight);
  }
  return {low.finish(), original_vars};
}

}  // namespace amdn
