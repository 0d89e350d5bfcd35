#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "amdn/errors.hpp"
#include "amdn/random.hpp"
#include "amdn/wcnf.hpp"

namespace amdn {

inline constexpr Weight kInfiniteCost = std::numeric_limits<Weight>::max();

struct Solution {
  Assignment values;  // index 0 unused
  Weight cost = kInfiniteCost;
  bool hard_ok = false;
  bool optimal = false;
  std::uint64_t seed = 0;
};

// Raised when the exact search runs out of budget; carries what it has.
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(const std::string& what, std::optional<Solution> incumbent, Weight lower_bound)
      : Error(what), incumbent_(std::move(incumbent)), lower_bound_(lower_bound) {}
  const char* category() const noexcept override { return "BudgetExceeded"; }
  const std::optional<Solution>& incumbent() const { return incumbent_; }
  Weight lower_bound() const { return lower_bound_; }

 private:
  std::optional<Solution> incumbent_;
  Weight lower_bound_;
};

inline void validate_instance(const WcnfInstance& inst) {
  if (inst.top == 0) throw FormatError("wcnf: top must be positive");
  for (std::size_t i = 0; i < inst.clauses.size(); ++i) {
    const auto& c = inst.clauses[i];
    if (c.weight == 0) throw FormatError("wcnf: clause " + std::to_string(i + 1) + " has weight 0");
    for (int l : c.lits)
      if (l == 0 || std::abs(l) > inst.num_vars)
        throw FormatError("wcnf: clause " + std::to_string(i + 1) + " has invalid literal " + std::to_string(l));
  }
}

// Recomputes cost and hard feasibility from the assignment; used to
// self-check every emitted solution.
inline Solution checked(const WcnfInstance& inst, Solution s) {
  Evaluation e = evaluate(inst, s.values);
  if (s.hard_ok && (!e.hard_ok || e.cost != s.cost))
    throw Error("internal: reported solution cost " + std::to_string(s.cost) + " disagrees with recomputed " +
                std::to_string(e.cost));
  s.cost = e.cost;
  s.hard_ok = e.hard_ok;
  return s;
}

// ---------------------------------------------------------------------------
// Exact branch and bound.

struct ExactOptions {
  std::chrono::milliseconds time_budget{std::chrono::seconds(60)};
};

namespace detail {

class BranchAndBound {
 public:
  BranchAndBound(const WcnfInstance& inst, const ExactOptions& opts)
      : inst_(inst), opts_(opts), n_(static_cast<std::size_t>(inst.num_vars)) {
    const std::size_t m = inst.clauses.size();
    pos_.resize(n_ + 1);
    neg_.resize(n_ + 1);
    n_true_.assign(m, 0);
    n_false_.assign(m, 0);
    val_.assign(n_ + 1, -1);
    std::vector<long double> activity(n_ + 1, 0.0L);
    for (std::size_t c = 0; c < m; ++c) {
      for (int l : inst.clauses[c].lits) {
        auto v = static_cast<std::size_t>(std::abs(l));
        (l > 0 ? pos_ : neg_)[v].push_back(c);
        activity[v] += static_cast<long double>(std::min(inst.clauses[c].weight, inst.top));
      }
    }
    for (std::size_t v = 1; v <= n_; ++v) order_.push_back(v);
    // Weighted occurrence, ties by lowest id.
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return activity[a] > activity[b]; });
    polarity_.assign(n_ + 1, false);
    for (std::size_t v = 1; v <= n_; ++v) {
      long double p = 0, q = 0;
      for (auto c : pos_[v]) p += static_cast<long double>(std::min(inst.clauses[c].weight, inst.top));
      for (auto c : neg_[v]) q += static_cast<long double>(std::min(inst.clauses[c].weight, inst.top));
      polarity_[v] = p > q;
    }
    unit_weight_.assign(2 * (n_ + 1), 0);
  }

  Solution run() {
    start_ = std::chrono::steady_clock::now();
    cost_ = inst_.constant_cost;
    bool ok = true;
    for (std::size_t c = 0; c < inst_.clauses.size() && ok; ++c) {
      if (!inst_.clauses[c].lits.empty()) continue;
      if (inst_.is_hard(inst_.clauses[c])) ok = false;
      else cost_ += inst_.clauses[c].weight;
    }
    if (ok) {
      // Hard units before branching.
      for (std::size_t c = 0; c < inst_.clauses.size() && ok; ++c)
        if (inst_.is_hard(inst_.clauses[c]) && inst_.clauses[c].lits.size() == 1) {
          int l = inst_.clauses[c].lits[0];
          auto v = static_cast<std::size_t>(std::abs(l));
          if (val_[v] == -1) ok = assign_and_propagate(v, l > 0);
          else if ((val_[v] == 1) != (l > 0)) ok = false;
        }
      if (ok) search();
    }
    if (!best_) throw HardUnsat("hard clauses are unsatisfiable");
    best_->optimal = true;
    return *best_;
  }

 private:
  const WcnfInstance& inst_;
  ExactOptions opts_;
  std::size_t n_;
  std::vector<std::vector<std::size_t>> pos_, neg_;
  std::vector<int> n_true_, n_false_;
  std::vector<int> val_;
  std::vector<std::size_t> order_;
  std::vector<bool> polarity_;
  std::vector<std::size_t> trail_;
  std::vector<Weight> unit_weight_;
  Weight cost_ = 0;
  std::optional<Solution> best_;
  std::chrono::steady_clock::time_point start_;
  std::uint64_t nodes_ = 0;

  bool hard(std::size_t c) const { return inst_.is_hard(inst_.clauses[c]); }
  std::size_t size(std::size_t c) const { return inst_.clauses[c].lits.size(); }

  // Assigns v and updates clause counters; returns false on a falsified hard clause.
  bool set(std::size_t v, bool value, std::vector<std::size_t>& units) {
    val_[v] = value ? 1 : 0;
    trail_.push_back(v);
    for (auto c : value ? pos_[v] : neg_[v]) ++n_true_[c];
    bool ok = true;
    for (auto c : value ? neg_[v] : pos_[v]) {
      ++n_false_[c];
      if (n_true_[c] > 0) continue;
      auto left = size(c) - static_cast<std::size_t>(n_false_[c]);
      if (left == 0) {
        if (hard(c)) ok = false;
        else cost_ += inst_.clauses[c].weight;
      } else if (left == 1 && hard(c)) {
        units.push_back(c);
      }
    }
    return ok;
  }

  void undo(std::size_t mark) {
    while (trail_.size() > mark) {
      std::size_t v = trail_.back();
      trail_.pop_back();
      bool value = val_[v] == 1;
      for (auto c : value ? pos_[v] : neg_[v]) --n_true_[c];
      for (auto c : value ? neg_[v] : pos_[v]) {
        if (n_true_[c] == 0 && static_cast<std::size_t>(n_false_[c]) == size(c) && !hard(c))
          cost_ -= inst_.clauses[c].weight;
        --n_false_[c];
      }
      val_[v] = -1;
    }
  }

  bool assign_and_propagate(std::size_t v, bool value) {
    std::vector<std::size_t> units;
    if (!set(v, value, units)) return false;
    while (!units.empty()) {
      std::size_t c = units.back();
      units.pop_back();
      if (n_true_[c] > 0) continue;
      int free = 0;
      for (int l : inst_.clauses[c].lits)
        if (val_[static_cast<std::size_t>(std::abs(l))] == -1) {
          free = l;
          break;
        }
      if (free == 0) return false;
      if (!set(static_cast<std::size_t>(std::abs(free)), free > 0, units)) return false;
    }
    return true;
  }

  // Falsified soft weight plus, for every variable, the lighter side of
  // opposing soft clauses reduced to a unit on it (disjoint cores).
  Weight lower_bound() {
    std::fill(unit_weight_.begin(), unit_weight_.end(), 0);
    for (std::size_t c = 0; c < inst_.clauses.size(); ++c) {
      if (hard(c) || n_true_[c] > 0) continue;
      if (size(c) - static_cast<std::size_t>(n_false_[c]) != 1) continue;
      for (int l : inst_.clauses[c].lits) {
        auto v = static_cast<std::size_t>(std::abs(l));
        if (val_[v] == -1) {
          unit_weight_[2 * v + (l > 0 ? 1 : 0)] += inst_.clauses[c].weight;
          break;
        }
      }
    }
    Weight lb = cost_;
    for (std::size_t v = 1; v <= n_; ++v) lb += std::min(unit_weight_[2 * v], unit_weight_[2 * v + 1]);
    return lb;
  }

  void check_budget() {
    if ((++nodes_ & 1023) != 0) return;
    if (std::chrono::steady_clock::now() - start_ > opts_.time_budget) {
      std::optional<Solution> inc = best_;
      Weight lb = lower_bound();
      throw BudgetExceeded("exact search exceeded its time budget", inc, lb);
    }
  }

  void search() {
    check_budget();
    if (best_ && lower_bound() >= best_->cost) return;
    std::size_t var = 0;
    for (auto v : order_)
      if (val_[v] == -1) {
        var = v;
        break;
      }
    if (var == 0) {
      Solution s;
      s.values.assign(n_ + 1, false);
      for (std::size_t v = 1; v <= n_; ++v) s.values[v] = val_[v] == 1;
      s.cost = cost_;
      s.hard_ok = true;
      best_ = std::move(s);
      return;
    }
    for (bool value : {bool(polarity_[var]), !polarity_[var]}) {
      std::size_t mark = trail_.size();
      if (assign_and_propagate(var, value)) search();
      undo(mark);
    }
  }
};

}  // namespace detail

// Optimal solution by branch and bound. Throws HardUnsat when the hard part
// is infeasible and BudgetExceeded when the time budget runs out.
inline Solution solve_exact(const WcnfInstance& inst, const ExactOptions& opts = {}) {
  validate_instance(inst);
  return checked(inst, detail::BranchAndBound(inst, opts).run());
}

// ---------------------------------------------------------------------------
// Stochastic local search.

struct SlsOptions {
  std::uint64_t max_flips = 100000;  // per restart
  std::uint64_t restarts = 10;
  double noise = 0.3;
  std::size_t workers = 1;
};

namespace detail {

// Weighted WalkSAT with incrementally maintained make/break scores. Hard
// clauses dominate: a step first targets an unsatisfied hard clause, and
// candidate flips compare hard score before soft score.
class WalkSat {
 public:
  WalkSat(const WcnfInstance& inst, std::uint64_t seed) : inst_(inst), rng_(seed), seed_(seed) {
    const std::size_t m = inst.clauses.size();
    n_ = static_cast<std::size_t>(inst.num_vars);
    occ_.resize(n_ + 1);
    for (std::size_t c = 0; c < m; ++c)
      for (int l : inst.clauses[c].lits) occ_[static_cast<std::size_t>(std::abs(l))].push_back({c, l > 0});
    n_true_.assign(m, 0);
    true_xor_.assign(m, 0);
    hscore_.assign(n_ + 1, 0);
    sscore_.assign(n_ + 1, 0);
    hard_pos_.assign(m, kAbsent);
    fenwick_.assign(m + 1, 0);
    val_.assign(n_ + 1, false);
  }

  Solution run(const SlsOptions& opts) {
    Solution best;
    best.seed = seed_;
    for (std::uint64_t r = 0; r < std::max<std::uint64_t>(1, opts.restarts); ++r) {
      for (std::size_t v = 1; v <= n_; ++v) val_[v] = (rng_.next() >> 63) != 0;
      rebuild();
      consider(best);
      for (std::uint64_t f = 0; f < opts.max_flips; ++f) {
        if (hard_unsat_.empty() && soft_cost_ == 0) break;
        std::size_t c = pick_clause();
        std::size_t v = pick_variable(c, opts.noise);
        if (v == 0) break;
        flip(v);
        consider(best);
      }
      if (best.hard_ok && best.cost == inst_.constant_cost) break;
    }
    return best;
  }

 private:
  struct Occ {
    std::size_t clause;
    bool positive;
  };
  static constexpr std::size_t kAbsent = SIZE_MAX;

  const WcnfInstance& inst_;
  Rng rng_;
  std::uint64_t seed_;
  std::size_t n_ = 0;
  std::vector<std::vector<Occ>> occ_;
  std::vector<bool> val_;
  std::vector<int> n_true_;
  std::vector<std::size_t> true_xor_;  // xor of the ids of true-literal variables
  std::vector<long long> hscore_;      // hard clauses fixed minus broken by flipping
  std::vector<long long> sscore_;      // soft weight fixed minus broken by flipping
  std::vector<std::size_t> hard_unsat_;
  std::vector<std::size_t> hard_pos_;
  std::vector<Weight> fenwick_;        // soft weights of unsatisfied clauses
  Weight soft_cost_ = 0;

  bool hard(std::size_t c) const { return inst_.is_hard(inst_.clauses[c]); }
  bool lit_true(int l) const { return val_[static_cast<std::size_t>(std::abs(l))] == (l > 0); }

  void fenwick_add(std::size_t c, long long delta) {
    for (std::size_t i = c + 1; i < fenwick_.size(); i += i & (~i + 1))
      fenwick_[i] = static_cast<Weight>(static_cast<long long>(fenwick_[i]) + delta);
  }

  // Smallest clause index whose prefix sum of unsatisfied soft weight exceeds target.
  std::size_t fenwick_find(Weight target) const {
    std::size_t pos = 0;
    std::size_t step = 1;
    while (step * 2 < fenwick_.size()) step *= 2;
    for (; step > 0; step /= 2)
      if (pos + step < fenwick_.size() && fenwick_[pos + step] <= target) {
        pos += step;
        target -= fenwick_[pos];
      }
    return pos;
  }

  void bump(std::size_t c, std::size_t v, long long delta) {
    if (hard(c)) hscore_[v] += delta;
    else sscore_[v] += delta * static_cast<long long>(inst_.clauses[c].weight);
  }

  void mark_unsat(std::size_t c) {
    if (hard(c)) {
      hard_pos_[c] = hard_unsat_.size();
      hard_unsat_.push_back(c);
    } else {
      soft_cost_ += inst_.clauses[c].weight;
      fenwick_add(c, static_cast<long long>(inst_.clauses[c].weight));
    }
  }

  void mark_sat(std::size_t c) {
    if (hard(c)) {
      std::size_t at = hard_pos_[c];
      std::size_t last = hard_unsat_.back();
      hard_unsat_[at] = last;
      hard_pos_[last] = at;
      hard_unsat_.pop_back();
      hard_pos_[c] = kAbsent;
    } else {
      soft_cost_ -= inst_.clauses[c].weight;
      fenwick_add(c, -static_cast<long long>(inst_.clauses[c].weight));
    }
  }

  void rebuild() {
    std::fill(hscore_.begin(), hscore_.end(), 0);
    std::fill(sscore_.begin(), sscore_.end(), 0);
    std::fill(fenwick_.begin(), fenwick_.end(), 0);
    std::fill(hard_pos_.begin(), hard_pos_.end(), kAbsent);
    hard_unsat_.clear();
    soft_cost_ = 0;
    for (std::size_t c = 0; c < inst_.clauses.size(); ++c) {
      n_true_[c] = 0;
      true_xor_[c] = 0;
      for (int l : inst_.clauses[c].lits)
        if (lit_true(l)) {
          ++n_true_[c];
          true_xor_[c] ^= static_cast<std::size_t>(std::abs(l));
        }
      if (n_true_[c] == 0) {
        mark_unsat(c);
        for (int l : inst_.clauses[c].lits) bump(c, static_cast<std::size_t>(std::abs(l)), +1);
      } else if (n_true_[c] == 1) {
        bump(c, true_xor_[c], -1);
      }
    }
  }

  void flip(std::size_t v) {
    val_[v] = !val_[v];
    for (const auto& o : occ_[v]) {
      const std::size_t c = o.clause;
      const auto& lits = inst_.clauses[c].lits;
      if (o.positive == val_[v]) {  // literal became true
        ++n_true_[c];
        true_xor_[c] ^= v;
        if (n_true_[c] == 1) {
          mark_sat(c);
          for (int l : lits) bump(c, static_cast<std::size_t>(std::abs(l)), -1);
          bump(c, v, -1);
        } else if (n_true_[c] == 2) {
          bump(c, true_xor_[c] ^ v, +1);
        }
      } else {  // literal became false
        --n_true_[c];
        true_xor_[c] ^= v;
        if (n_true_[c] == 0) {
          mark_unsat(c);
          for (int l : lits) bump(c, static_cast<std::size_t>(std::abs(l)), +1);
          bump(c, v, +1);
        } else if (n_true_[c] == 1) {
          bump(c, true_xor_[c], -1);
        }
      }
    }
  }

  std::size_t pick_clause() {
    if (!hard_unsat_.empty()) return hard_unsat_[rng_.below(hard_unsat_.size())];
    Weight target = static_cast<Weight>(rng_.uniform() * static_cast<double>(soft_cost_));
    if (target >= soft_cost_) target = soft_cost_ - 1;
    return fenwick_find(target);
  }

  std::size_t pick_variable(std::size_t c, double noise) {
    const auto& lits = inst_.clauses[c].lits;
    if (lits.empty()) return 0;
    if (rng_.bernoulli(noise)) return static_cast<std::size_t>(std::abs(lits[rng_.below(lits.size())]));
    std::size_t best = 0;
    for (int l : lits) {
      auto v = static_cast<std::size_t>(std::abs(l));
      if (best == 0 || hscore_[v] > hscore_[best] ||
          (hscore_[v] == hscore_[best] && (sscore_[v] > sscore_[best] || (sscore_[v] == sscore_[best] && v < best))))
        best = v;
    }
    return best;
  }

  void consider(Solution& best) {
    if (!hard_unsat_.empty()) return;
    Weight cost = soft_cost_ + inst_.constant_cost;
    if (best.hard_ok && cost >= best.cost) return;
    best.values.assign(val_.begin(), val_.end());
    best.cost = cost;
    best.hard_ok = true;
  }
};

}  // namespace detail

// Best solution found by seeded weighted WalkSAT. With several workers, each
// runs on its own derived seed and the best (cost, worker) wins, so the
// result does not depend on scheduling.
inline Solution solve_sls(const WcnfInstance& inst, std::uint64_t seed, const SlsOptions& opts = {}) {
  validate_instance(inst);
  if (opts.noise < 0.0 || opts.noise > 1.0) throw ConfigError("SLS noise must lie in [0,1]");
  const std::size_t workers = std::max<std::size_t>(1, opts.workers);
  std::vector<Solution> results(workers);
  auto work = [&](std::size_t k) {
    std::uint64_t s = workers == 1 ? seed : derive_seed(seed, k);
    results[k] = detail::WalkSat(inst, s).run(opts);
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < workers; ++k) pool.emplace_back(work, k);
    for (auto& t : pool) t.join();
  }
  const Solution* best = nullptr;
  for (const auto& r : results)
    if (r.hard_ok && (!best || r.cost < best->cost)) best = &r;
  if (!best) throw NoFeasibleFound("no assignment satisfying every hard clause was found");
  return checked(inst, *best);
}

}  // namespace amdn
