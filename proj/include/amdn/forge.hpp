#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "amdn/errors.hpp"
#include "amdn/pddl.hpp"
#include "amdn/random.hpp"
#include "amdn/trace.hpp"

namespace amdn {

struct CorruptionConfig {
  double disorder = 0.0;          // p; pairs at distance d swap with probability p/d
  double noise = 0.0;             // xi
  double observation_rate = 1.0;  // fraction of propositions that stay observable
  std::uint64_t seed = 1;
  std::size_t horizon = 0;        // max swap distance; 0 = unbounded

  void validate() const {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(disorder) || !in_unit(noise) || !in_unit(observation_rate))
      throw ConfigError("disorder, noise and observation rate must lie in [0,1]");
  }
};

struct SynthesizedPlan {
  std::vector<GroundAction> actions;
  std::vector<State> states;  // states[0] = init, states[i] after action i
};

namespace detail {

// Bitset-encoded STRIPS task used by the embedded planner.
class DenseTask {
 public:
  using Bits = std::vector<std::uint64_t>;

  DenseTask(const Domain& d, const ObjectTable& objects) {
    props_ = ground_propositions(d, objects);
    for (std::size_t i = 0; i < props_.size(); ++i) index_.emplace(props_[i], i);
    words_ = (props_.size() + 63) / 64;
    // Injective grounding: distinct parameters take distinct objects.
    for (auto& g : ground_actions(d, objects)) {
      std::set<std::string> distinct(g.args.begin(), g.args.end());
      if (distinct.size() != g.args.size()) continue;
      GroundEffects e = ground_effects(d, g);
      Op op{g, encode(e.pre), encode(e.add), encode(e.del)};
      ops_.push_back(std::move(op));
    }
  }

  Bits encode(const State& s) const {
    Bits b(words_, 0);
    for (const auto& p : s) {
      auto it = index_.find(p);
      if (it == index_.end()) throw ValidationError("proposition " + to_string(p) + " is not over the problem objects");
      b[it->second / 64] |= std::uint64_t{1} << (it->second % 64);
    }
    return b;
  }

  State decode(const Bits& b) const {
    State s;
    for (std::size_t i = 0; i < props_.size(); ++i)
      if (b[i / 64] >> (i % 64) & 1) s.insert(props_[i]);
    return s;
  }

  static bool subset(const Bits& a, const Bits& b) {
    for (std::size_t w = 0; w < a.size(); ++w)
      if (a[w] & ~b[w]) return false;
    return true;
  }

  static std::size_t missing(const Bits& goal, const Bits& s) {
    std::size_t n = 0;
    for (std::size_t w = 0; w < goal.size(); ++w) n += static_cast<std::size_t>(__builtin_popcountll(goal[w] & ~s[w]));
    return n;
  }

  struct Op {
    GroundAction action;
    Bits pre, add, del;
  };

  const std::vector<Op>& ops() const { return ops_; }
  const std::vector<Proposition>& propositions() const { return props_; }

  Bits apply(const Op& op, const Bits& s) const {
    Bits out(s);
    for (std::size_t w = 0; w < words_; ++w) out[w] = (out[w] & ~op.del[w]) | op.add[w];
    return out;
  }

 private:
  std::vector<Proposition> props_;
  std::map<Proposition, std::size_t> index_;
  std::size_t words_ = 0;
  std::vector<Op> ops_;
};

struct BitsHash {
  std::size_t operator()(const DenseTask::Bits& b) const {
    std::uint64_t h = 0x84222325cbf29ce4ULL;
    for (auto w : b) h = mix_seed(h ^ w);
    return static_cast<std::size_t>(h);
  }
};

inline void require_strips_consistent(const Domain& d) {
  for (const auto& a : d.actions) {
    if (!a.has_body) throw InapplicableModel("action '" + a.name + "' has no ground-truth body");
    if (auto why = strips_violation(a)) throw InapplicableModel(*why);
  }
}

}  // namespace detail

// Greedy best-first search on the goal-count heuristic with random
// tie-breaking. The expansion budget is split over a few restarts, each with
// fresh tie-breaking.
inline SynthesizedPlan synthesize_plan(const Domain& truth, const Problem& problem, std::size_t budget,
                                       std::uint64_t seed) {
  detail::require_strips_consistent(truth);
  detail::DenseTask task(truth, problem.objects);
  using Bits = detail::DenseTask::Bits;
  const Bits init = task.encode(problem.init);
  const Bits goal = task.encode(problem.goal);
  Rng rng(seed);

  constexpr std::size_t kRestarts = 4;
  const std::size_t per_attempt = std::max<std::size_t>(1, budget / kRestarts);
  std::size_t spent = 0;
  for (std::size_t attempt = 0; attempt < kRestarts && spent < budget; ++attempt) {
    struct Node {
      Bits state;
      std::size_t parent;
      std::size_t op;
    };
    std::vector<Node> nodes{{init, SIZE_MAX, SIZE_MAX}};
    std::unordered_set<Bits, detail::BitsHash> seen{init};
    using Entry = std::tuple<std::size_t, std::uint64_t, std::size_t>;  // h, tie, node
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    open.emplace(detail::DenseTask::missing(goal, init), rng.next(), 0);
    std::optional<std::size_t> found;
    std::size_t expansions = 0;
    while (!open.empty() && expansions < per_attempt && spent < budget) {
      auto [h, tie, id] = open.top();
      open.pop();
      if (h == 0) {
        found = id;
        break;
      }
      ++expansions;
      ++spent;
      for (std::size_t k = 0; k < task.ops().size(); ++k) {
        const auto& op = task.ops()[k];
        if (!detail::DenseTask::subset(op.pre, nodes[id].state)) continue;
        Bits next = task.apply(op, nodes[id].state);
        if (!seen.insert(next).second) continue;
        std::size_t nh = detail::DenseTask::missing(goal, next);
        nodes.push_back({std::move(next), id, k});
        open.emplace(nh, rng.next(), nodes.size() - 1);
      }
    }
    if (found) {
      std::vector<GroundAction> plan;
      for (std::size_t id = *found; nodes[id].parent != SIZE_MAX; id = nodes[id].parent)
        plan.push_back(task.ops()[nodes[id].op].action);
      std::reverse(plan.begin(), plan.end());
      SynthesizedPlan out{plan, execute(truth, problem.init, plan)};
      if (!std::includes(out.states.back().begin(), out.states.back().end(), problem.goal.begin(),
                         problem.goal.end()))
        throw InapplicableModel("synthesized plan does not reach the goal");
      return out;
    }
    if (open.empty()) throw NoPlanWithinBudget("problem '" + problem.name + "' is unsolvable");
  }
  throw NoPlanWithinBudget("no plan for problem '" + problem.name + "' within " + std::to_string(budget) +
                           " expansions");
}

// Greedy left-to-right grouping: an action joins the current set iff its
// grounded PRE ∪ ADD ∪ DEL is disjoint from that of every member. Each step
// carries the full state reached after its set.
inline PlanTrace group_parallel(const Domain& truth, const Problem& problem, const SynthesizedPlan& plan) {
  PlanTrace t;
  t.objects = problem.objects;
  t.init = plan.states.front();
  t.goal = problem.goal;
  std::vector<State> touched;  // per member of the current set
  for (std::size_t i = 0; i < plan.actions.size(); ++i) {
    GroundEffects e = ground_effects(truth, plan.actions[i]);
    State mine = e.pre;
    mine.insert(e.add.begin(), e.add.end());
    mine.insert(e.del.begin(), e.del.end());
    bool joins = !t.steps.empty();
    for (const auto& other : touched) {
      if (!joins) break;
      for (const auto& p : mine)
        if (other.count(p)) {
          joins = false;
          break;
        }
    }
    if (!joins) {
      t.steps.push_back({});
      touched.clear();
    }
    t.steps.back().actions.push_back(plan.actions[i]);
    t.steps.back().obs = plan.states[i + 1];
    touched.push_back(std::move(mine));
  }
  return t;
}

struct SwapRecord {
  std::size_t trace = 0;
  std::size_t i = 0;  // 1-based step of a before the swap
  std::size_t j = 0;  // 1-based step of b before the swap
  GroundAction a;
  GroundAction b;
};

// For every pair of sets i < j with d = j - i within the horizon, each cross
// pair (a in set i, b in set j) is exchanged with probability p/d. Pairs are
// visited in canonical order and later draws see earlier swaps. A swap that
// would put a duplicate action into a set is skipped, though its draw is
// still consumed.
inline std::vector<SwapRecord> inject_disorder(PlanTrace& trace, const CorruptionConfig& config, Rng& rng,
                                               std::size_t trace_index = 0) {
  config.validate();
  std::vector<SwapRecord> log;
  if (config.disorder <= 0.0) return log;
  auto& steps = trace.steps;
  const std::size_t n = steps.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::size_t d = j - i;
      if (config.horizon && d > config.horizon) break;
      const double prob = config.disorder / static_cast<double>(d);
      for (std::size_t x = 0; x < steps[i].actions.size(); ++x) {
        for (std::size_t y = 0; y < steps[j].actions.size(); ++y) {
          if (!rng.bernoulli(prob)) continue;
          GroundAction& a = steps[i].actions[x];
          GroundAction& b = steps[j].actions[y];
          if (a == b) continue;
          auto contains = [](const ParallelSet& s, const GroundAction& g) {
            return std::find(s.begin(), s.end(), g) != s.end();
          };
          if (contains(steps[i].actions, b) || contains(steps[j].actions, a)) continue;
          log.push_back({trace_index, i + 1, j + 1, a, b});
          std::swap(a, b);
        }
      }
    }
  }
  return log;
}

struct CorruptionStats {
  std::size_t seen = 0;      // propositions in the full states
  std::size_t kept = 0;      // passed the observation-rate filter
  std::size_t removed = 0;   // kept, then removed as noise
  std::size_t survived = 0;  // kept and not removed
  std::size_t replaced = 0;  // survivors swapped for another proposition

  CorruptionStats& operator+=(const CorruptionStats& o) {
    seen += o.seen;
    kept += o.kept;
    removed += o.removed;
    survived += o.survived;
    replaced += o.replaced;
    return *this;
  }
};

// Makes every step observation partial and noisy; init and goal stay as they
// are. Per proposition: keep with the observation rate; of those kept,
// remove with probability xi; of the survivors, replace with probability xi
// by a uniformly drawn proposition of R_O absent from the state and from the
// observation built so far.
inline CorruptionStats corrupt_states(PlanTrace& trace, const CorruptionConfig& config, Rng& rng,
                                      const std::vector<Proposition>& universe) {
  config.validate();
  CorruptionStats stats;
  for (auto& step : trace.steps) {
    if (!step.obs) continue;
    const State& full = *step.obs;
    State out;
    for (const auto& p : full) {
      ++stats.seen;
      if (!rng.bernoulli(config.observation_rate)) continue;
      ++stats.kept;
      if (rng.bernoulli(config.noise)) {
        ++stats.removed;
        continue;
      }
      ++stats.survived;
      if (!rng.bernoulli(config.noise)) {
        out.insert(p);
        continue;
      }
      ++stats.replaced;
      auto excluded = [&](const Proposition& q) { return full.count(q) || out.count(q); };
      std::optional<Proposition> pick;
      for (int tries = 0; tries < 64 && !pick; ++tries) {
        const Proposition& q = universe[rng.below(universe.size())];
        if (!excluded(q)) pick = q;
      }
      if (!pick) {
        std::vector<const Proposition*> free;
        for (const auto& q : universe)
          if (!excluded(q)) free.push_back(&q);
        if (!free.empty()) pick = *free[rng.below(free.size())];
      }
      if (pick) out.insert(*pick);
    }
    step.obs = std::move(out);
  }
  return stats;
}

// Random solvable problem: a random walk from the template's initial state
// gives the new initial state, a second walk picks goal propositions.
inline Problem random_problem(const Domain& truth, const Problem& templ, Rng& rng, std::size_t walk_length,
                              std::size_t goal_size, const std::string& name) {
  detail::require_strips_consistent(truth);
  detail::DenseTask task(truth, templ.objects);
  auto walk = [&](detail::DenseTask::Bits s) {
    for (std::size_t k = 0; k < walk_length; ++k) {
      std::vector<std::size_t> app;
      for (std::size_t o = 0; o < task.ops().size(); ++o)
        if (detail::DenseTask::subset(task.ops()[o].pre, s)) app.push_back(o);
      if (app.empty()) break;
      s = task.apply(task.ops()[app[rng.below(app.size())]], s);
    }
    return s;
  };
  Problem p;
  p.name = name;
  p.domain_name = truth.name;
  p.objects = templ.objects;
  p.init = task.decode(walk(task.encode(templ.init)));
  State end = task.decode(walk(task.encode(p.init)));
  std::vector<Proposition> fresh;
  for (const auto& q : end)
    if (!p.init.count(q)) fresh.push_back(q);
  if (fresh.empty()) fresh.assign(end.begin(), end.end());
  for (std::size_t k = 0; k < goal_size && !fresh.empty(); ++k) {
    std::size_t at = rng.below(fresh.size());
    p.goal.insert(fresh[at]);
    fresh.erase(fresh.begin() + static_cast<std::ptrdiff_t>(at));
  }
  return p;
}

struct ForgedTrace {
  PlanTrace trace;
  std::vector<GroundAction> plan;  // the correct total order
  std::vector<SwapRecord> swaps;
  CorruptionStats corruption;
};

// Full protocol for one trace: plan, group, disorder, corrupt. Every stage
// draws from its own stream derived from (seed, trace index).
inline ForgedTrace forge_trace(const Domain& truth, const Problem& problem, const CorruptionConfig& config,
                               std::size_t trace_index, std::size_t budget) {
  config.validate();
  ForgedTrace out;
  SynthesizedPlan plan = synthesize_plan(truth, problem, budget, derive_seed(config.seed, trace_index, 1));
  if (plan.actions.empty()) throw NoPlanWithinBudget("problem '" + problem.name + "' is already solved by its init");
  out.plan = plan.actions;
  out.trace = group_parallel(truth, problem, plan);
  Rng disorder_rng(derive_seed(config.seed, trace_index, 2));
  out.swaps = inject_disorder(out.trace, config, disorder_rng, trace_index);
  Rng noise_rng(derive_seed(config.seed, trace_index, 3));
  out.corruption = corrupt_states(out.trace, config, noise_rng, ground_propositions(truth, problem.objects));
  return out;
}

struct CorpusConfig {
  CorruptionConfig corruption;
  std::size_t traces = 50;
  std::size_t walk_length = 40;  // random problems only
  std::size_t goal_size = 6;
  std::size_t budget = 200000;   // planner expansions per attempt
  std::size_t attempts = 50;     // problems tried per trace before giving up
};

struct Corpus {
  std::vector<Problem> problems;  // the problem behind each trace
  std::vector<ForgedTrace> traces;

  std::vector<PlanTrace> plan_traces() const {
    std::vector<PlanTrace> out;
    for (const auto& t : traces) out.push_back(t.trace);
    return out;
  }
  double mean_plan_length() const {
    if (traces.empty()) return 0.0;
    std::size_t n = 0;
    for (const auto& t : traces) n += t.plan.size();
    return static_cast<double>(n) / static_cast<double>(traces.size());
  }
};

// Trace i comes from problems[i mod |problems|] when problems are given,
// otherwise from random problems drawn off the template with a stream
// derived from (seed, i). Trivial or unsolved random problems are redrawn.
inline Corpus forge_corpus(const Domain& truth, const Problem& templ, const std::vector<Problem>& problems,
                           const CorpusConfig& cfg) {
  cfg.corruption.validate();
  Corpus out;
  for (std::size_t i = 0; i < cfg.traces; ++i) {
    if (!problems.empty()) {
      const Problem& pr = problems[i % problems.size()];
      out.traces.push_back(forge_trace(truth, pr, cfg.corruption, i, cfg.budget));
      out.problems.push_back(pr);
      continue;
    }
    Rng rng(derive_seed(cfg.corruption.seed, i, 0));
    bool done = false;
    for (std::size_t attempt = 0; attempt < cfg.attempts && !done; ++attempt) {
      Problem pr = random_problem(truth, templ, rng, cfg.walk_length, cfg.goal_size,
                                  templ.name + "-" + std::to_string(i));
      try {
        out.traces.push_back(forge_trace(truth, pr, cfg.corruption, i, cfg.budget));
        out.problems.push_back(std::move(pr));
        done = true;
      } catch (const NoPlanWithinBudget&) {
      }
    }
    if (!done) throw NoPlanWithinBudget("no solvable random problem for trace " + std::to_string(i));
  }
  return out;
}

}  // namespace amdn
