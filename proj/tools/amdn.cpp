// amdn command-line driver: gen, compile, export-wcnf, solve, learn, eval,
// experiment. Every subcommand writes its artifacts atomically and records
// them in <run-dir>/manifest.json.

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "amdn/amdn.hpp"
#include "amdn_defaults.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace amdn;

namespace {

constexpr const char* kVersion = "1.0.0";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "IoError"; }
};

class StageFailure : public std::runtime_error {
 public:
  StageFailure(const std::string& stage, const std::string& category, const std::string& what)
      : std::runtime_error("stage " + stage + ": " + category + ": " + what) {}
};

// ---------------------------------------------------------------------------
// Files.

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_atomic(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, p);
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr)) throw IoError("sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Parameter keys. Values live in the defaults file; this table only says
// which subcommands accept them.

enum Group : unsigned { kForge = 1, kCompile = 2, kSolve = 4, kExperiment = 8 };

struct KeySpec {
  const char* key;
  unsigned groups;
  const char* doc;
};

constexpr KeySpec kKeys[] = {
    {"traces", kForge, "number of traces to generate"},
    {"disorder", kForge, "disorder p: pairs at set distance d swap with probability p/d"},
    {"noise", kForge, "noise rate xi for observed propositions"},
    {"obs_rate", kForge, "fraction of propositions kept per observation"},
    {"seed", kForge | kSolve, "base seed"},
    {"horizon", kForge, "max swap distance (0 = unbounded)"},
    {"num_problems", kForge, "random problems to cycle through (0 = one per trace)"},
    {"walk_length", kForge, "random-walk length for random problems"},
    {"goal_size", kForge, "goal propositions per random problem"},
    {"plan_budget", kForge, "planner expansion budget per attempt"},
    {"wmax", kCompile, "maximum constraint weight"},
    {"delta", kCompile, "occurrence threshold for frequency constraints"},
    {"prior_scale", kCompile, "multiplier on disorder probabilities"},
    {"aggregation", kCompile, "max | mean over swap partners"},
    {"sparsity_weight", kCompile, "base weight of the per-variable false preference"},
    {"min_support", kCompile, "minimum support for frequency constraints"},
    {"count_weighted", kCompile, "scale frequency weights by occurrence counts"},
    {"cap_merged", kCompile, "cap merged duplicate weights at wmax-1"},
    {"evidence_weight", kCompile, "weight per occurrence contradicting a literal"},
    {"deletion_contrast", kCompile, "enable before/after deletion evidence"},
    {"nc2_lookahead", kCompile, "extra parallel sets searched for adders"},
    {"solver", kSolve, "sls | exact"},
    {"max_flips", kSolve, "SLS flips per restart"},
    {"restarts", kSolve, "SLS restarts"},
    {"sls_noise", kSolve, "SLS random-walk probability"},
    {"workers", kSolve, "SLS workers"},
    {"time_budget", kSolve, "exact solver budget in seconds"},
    {"vary", kExperiment, "parameter swept by experiment"},
    {"repetitions", kExperiment, "repetitions per cell"},
    {"jobs", kExperiment, "concurrent experiment runs"},
    {"sweep_traces", kExperiment, "values for a traces sweep"},
    {"sweep_obs_rate", kExperiment, "values for an obs_rate sweep"},
    {"sweep_disorder", kExperiment, "values for a disorder sweep"},
    {"sweep_noise", kExperiment, "values for a noise sweep"},
};

const KeySpec* find_key(const std::string& k) {
  for (const auto& s : kKeys)
    if (k == s.key) return &s;
  return nullptr;
}

std::string flag_name(const std::string& key) {
  std::string f = "--" + key;
  std::replace(f.begin(), f.end(), '_', '-');
  return f;
}

FlatConfig defaults() {
  static const FlatConfig d = [] {
    FlatConfig c = FlatConfig::parse(kDefaultsText);
    for (const auto& [k, _] : c.values())
      if (k != "version" && !find_key(k)) throw std::logic_error("defaults key '" + k + "' has no flag");
    for (const auto& s : kKeys)
      if (!c.has(s.key)) throw std::logic_error("flag key '" + std::string(s.key) + "' has no default");
    return c;
  }();
  return d;
}

// Options shared by every subcommand.
struct Common {
  std::string config_file;
  std::string manifest_file;
  std::string run_dir;
  std::map<std::string, std::string> values;  // stable addresses for CLI11
  std::map<std::string, CLI::Option*> options;
};

void add_common(CLI::App* sub, Common& c, unsigned groups) {
  sub->add_option("--config", c.config_file, "flat key = value file mirroring the parameter flags")
      ->check(CLI::ExistingFile);
  sub->add_option("--manifest", c.manifest_file, "take parameters from a previous run's manifest.json")
      ->check(CLI::ExistingFile);
  sub->add_option("--run-dir", c.run_dir, "directory for manifest.json (default: directory of --out)");
  for (const auto& s : kKeys) {
    if (!(s.groups & groups)) continue;
    c.options[s.key] = sub->add_option(flag_name(s.key), c.values[s.key], s.doc)->group("Parameters");
  }
}

// defaults < manifest < config file < flags
FlatConfig merged_config(const Common& c) {
  FlatConfig cfg = defaults();
  auto overlay = [&cfg](const FlatConfig& over, const std::string& where) {
    for (const auto& [k, v] : over.values()) {
      if (k == "version") continue;
      if (!find_key(k)) throw ConfigError(where + ": unknown key '" + k + "'");
      cfg.set(k, v);
    }
  };
  if (!c.manifest_file.empty()) {
    json m = json::parse(read_file(c.manifest_file), nullptr, false);
    if (m.is_discarded() || !m.contains("config") || !m["config"].is_object())
      throw ConfigError(c.manifest_file + ": not a manifest");
    FlatConfig from;
    for (auto it = m["config"].begin(); it != m["config"].end(); ++it) from.set(it.key(), it.value().get<std::string>());
    overlay(from, c.manifest_file);
  }
  if (!c.config_file.empty()) {
    try {
      overlay(FlatConfig::parse(read_file(c.config_file)), c.config_file);
    } catch (const FormatError& e) {
      throw ConfigError(c.config_file + ": " + e.what());
    }
  }
  for (const auto& [k, opt] : c.options)
    if (opt->count()) cfg.set(k, c.values.at(k));
  return cfg;
}

// ---------------------------------------------------------------------------
// Run bookkeeping.

class Run {
 public:
  Run(std::string command, FlatConfig config, const std::string& run_dir, const std::string& primary_out)
      : command_(std::move(command)), config_(std::move(config)) {
    if (!run_dir.empty())
      dir_ = run_dir;
    else if (fs::path(primary_out).has_parent_path())
      dir_ = fs::path(primary_out).parent_path();
    else
      dir_ = ".";
    started_ = std::chrono::steady_clock::now();
  }

  const FlatConfig& config() const { return config_; }
  json& extra() { return extra_; }

  std::string input(const std::string& role, const fs::path& p) {
    std::string text = read_file(p);
    inputs_.push_back({{"role", role}, {"path", fs::absolute(p).lexically_normal().string()}, {"sha256", sha256_hex(text)}});
    return text;
  }

  void output(const std::string& role, const fs::path& p, const std::string& content) {
    write_atomic(p, content);
    outputs_.push_back({{"role", role}, {"path", fs::relative(fs::absolute(p), fs::absolute(dir_)).string()},
                        {"sha256", sha256_hex(content)}});
  }

  template <class F>
  auto stage(const std::string& name, F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    auto record = [&] {
      stages_.push_back({{"name", name}, {"seconds", seconds_since(t0)}});
    };
    try {
      if constexpr (std::is_void_v<decltype(f())>) {
        f();
        record();
      } else {
        auto r = f();
        record();
        return r;
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw StageFailure(name, e.category(), e.what());
    }
  }

  void finish() {
    json seeds = json::object();
    seeds["seed"] = config_.get_uint("seed");
    json cfg = json::object();
    for (const auto& [k, v] : config_.values())
      if (k != "version") cfg[k] = v;
    json m = {{"tool", "amdn"},
              {"version", kVersion},
              {"defaults_version", defaults().get("version")},
              {"command", command_},
              {"config", cfg},
              {"seeds", seeds},
              {"inputs", inputs_},
              {"outputs", outputs_},
              {"stages", stages_},
              {"wall_seconds", seconds_since(started_)}};
    if (!extra_.empty()) m["extra"] = extra_;
    write_atomic(dir_ / "manifest.json", dump(m));
  }

 private:
  static double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  std::string command_;
  FlatConfig config_;
  fs::path dir_;
  std::chrono::steady_clock::time_point started_;
  json inputs_ = json::array();
  json outputs_ = json::array();
  json stages_ = json::array();
  json extra_ = json::object();
};

fs::path beside(const std::string& primary, const std::string& name) {
  fs::path p(primary);
  return p.has_parent_path() ? p.parent_path() / name : fs::path(name);
}

// ---------------------------------------------------------------------------
// JSON views.

json family_json(const LearnReport& rep) {
  json f = json::object();
  for (const auto& [fam, r] : rep.families)
    f[family_name(fam)] = {{"generated", r.generated},
                           {"formulas", r.formulas},
                           {"satisfied_weight", r.satisfied_weight},
                           {"violated_weight", r.violated_weight},
                           {"violated", r.violated}};
  return f;
}

json report_json(const LearnReport& rep, const LearnConfig& cfg) {
  return {{"catalog_vars", rep.catalog_vars},
          {"total_vars", rep.total_vars},
          {"hard_clauses", rep.hard_clauses},
          {"soft_clauses", rep.soft_clauses},
          {"top", rep.top},
          {"cost", rep.cost},
          {"optimal", rep.optimal},
          {"skipped_dc", rep.skipped_dc},
          {"skipped_nc2", rep.skipped_nc2},
          {"solver", cfg.solver == SolverKind::exact ? "exact" : "sls"},
          {"seed", cfg.seed},
          {"families", family_json(rep)}};
}

json metrics_json(const ModelDiff& md) {
  json schemas = json::array();
  for (const auto& s : md.schemas) {
    json slots = json::object();
    for (Slot sl : kSlots) {
      const int k = static_cast<int>(sl);
      slots[slot_name(sl)] = {{"missing", s.missing[k]}, {"extra", s.extra[k]}, {"err", s.err[k]}};
    }
    schemas.push_back({{"schema", s.schema}, {"candidates", s.candidates}, {"slots", slots}});
  }
  return {{"acc", md.acc}, {"err", md.err}, {"schemas", schemas}, {"empty_candidate_sets", md.empty_candidate_sets}};
}

json varmap_json(const Domain& sk, const VariableCatalog& cat, const LoweredTheory& low) {
  json vars = json::array();
  for (const auto& v : cat.variables())
    vars.push_back({{"id", v.id},
                    {"schema", v.schema},
                    {"slot", slot_name(v.slot)},
                    {"literal", to_string(v.literal, sk.action(v.schema).params)}});
  json aux = json::array();
  for (int id = cat.size() + 1; id <= low.wcnf.num_vars; ++id) aux.push_back(id);
  return {{"catalog_vars", cat.size()}, {"total_vars", low.wcnf.num_vars}, {"variables", vars}, {"auxiliary", aux}};
}

std::string swap_string(const GroundAction& g) { return to_string(g); }

// ---------------------------------------------------------------------------
// Subcommands.

struct GenArgs {
  std::string domain, problems_dir, templ, out, log;
};

Corpus generate(const Domain& truth, const Problem& templ, const std::vector<Problem>& problems,
                const FlatConfig& cfg) {
  CorpusConfig cc = corpus_config(cfg);
  std::vector<Problem> pool = problems;
  const std::size_t n = cfg.get_uint("num_problems");
  if (pool.empty() && n > 0) {
    CorpusConfig pc = cc;
    pc.traces = n;
    pc.corruption.disorder = 0;
    pc.corruption.noise = 0;
    pc.corruption.observation_rate = 1;
    pool = forge_corpus(truth, templ, {}, pc).problems;
  }
  return forge_corpus(truth, templ, pool, cc);
}

std::vector<Problem> load_problems(Run& run, const Domain& truth, const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".pddl") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw UsageError("no .pddl problems in " + dir);
  std::vector<Problem> out;
  for (const auto& f : files) out.push_back(parse_problem(run.input("problem", f), truth));
  return out;
}

int cmd_gen(const GenArgs& a, const Common& c) {
  if (a.problems_dir.empty() && a.templ.empty()) throw UsageError("gen needs --problems DIR or --template F");
  Run run("gen", merged_config(c), c.run_dir, a.out);
  const FlatConfig& cfg = run.config();
  CorpusConfig check = corpus_config(cfg);
  (void)check;
  Domain truth = run.stage("parse", [&] { return parse_domain(run.input("domain", a.domain)); });
  std::vector<Problem> problems;
  Problem templ;
  run.stage("problems", [&] {
    if (!a.problems_dir.empty())
      problems = load_problems(run, truth, a.problems_dir);
    else
      templ = parse_problem(run.input("template", a.templ), truth);
  });
  Corpus corpus = run.stage("forge", [&] { return generate(truth, templ, problems, cfg); });
  json log = json::array();
  json lengths = json::array();
  CorruptionStats totals;
  for (const auto& t : corpus.traces) {
    lengths.push_back(t.plan.size());
    totals += t.corruption;
    for (const auto& s : t.swaps)
      log.push_back({{"trace", s.trace}, {"i", s.i}, {"j", s.j}, {"a", swap_string(s.a)}, {"b", swap_string(s.b)}});
  }
  run.output("traces", a.out, write_traces(corpus.plan_traces()));
  run.output("swaps", a.log.empty() ? beside(a.out, "swaps.json") : fs::path(a.log), dump(log));
  run.extra() = {{"plan_lengths", lengths},
                 {"mean_plan_length", corpus.mean_plan_length()},
                 {"swaps", log.size()},
                 {"observed_propositions", totals.seen},
                 {"kept", totals.kept},
                 {"removed", totals.removed},
                 {"replaced", totals.replaced}};
  run.finish();
  std::cout << corpus.traces.size() << " traces, mean plan length " << corpus.mean_plan_length() << ", "
            << log.size() << " swaps\n";
  return 0;
}

struct CompileArgs {
  std::string domain, traces, out, map;
};

struct Compiled {
  Domain skeleton;
  std::vector<PlanTrace> traces;
  std::unique_ptr<LiftingIndex> index;
  VariableCatalog catalog;
  Theory theory;
  LoweredTheory lowered;
};

std::unique_ptr<Compiled> compile_inputs(Run& run, const std::string& domain, const std::string& traces,
                                         const CompileConfig& cc) {
  auto out = std::make_unique<Compiled>();
  run.stage("parse", [&] {
    out->skeleton = parse_domain(run.input("domain", domain)).skeleton();
    out->traces = read_traces(run.input("traces", traces), &out->skeleton);
  });
  run.stage("compile", [&] {
    out->index = std::make_unique<LiftingIndex>(out->skeleton);
    out->catalog = build_variables(*out->index);
    out->theory = compile_theory(out->traces, *out->index, out->catalog, cc);
  });
  run.stage("lower", [&] { out->lowered = lower_to_wcnf(out->theory.formulas, out->catalog.size()); });
  return out;
}

int cmd_compile(const std::string& name, const CompileArgs& a, const Common& c) {
  Run run(name, merged_config(c), c.run_dir, a.out);
  CompileConfig cc = compile_config(run.config());
  auto comp = compile_inputs(run, a.domain, a.traces, cc);
  run.output("wcnf", a.out, write_wcnf(comp->lowered.wcnf));
  run.output("varmap", a.map.empty() ? beside(a.out, "varmap.json") : fs::path(a.map),
             dump(varmap_json(comp->skeleton, comp->catalog, comp->lowered)));
  run.finish();
  std::cout << comp->lowered.wcnf.num_vars << " variables, " << comp->lowered.wcnf.clauses.size() << " clauses\n";
  return 0;
}

struct SolveArgs {
  std::string wcnf, out, solution;
};

int cmd_solve(const SolveArgs& a, const Common& c) {
  Run run("solve", merged_config(c), c.run_dir, a.out);
  LearnConfig lc = learn_config(run.config());
  WcnfInstance inst = run.stage("parse", [&] { return read_wcnf(run.input("wcnf", a.wcnf)); });
  Solution sol = run.stage("solve", [&] { return solve(inst, lc); });
  run.output("model", a.out, write_model(sol.values));
  json s = {{"cost", sol.cost},
            {"optimal", sol.optimal},
            {"hard_ok", sol.hard_ok},
            {"solver", lc.solver == SolverKind::exact ? "exact" : "sls"},
            {"seed", lc.seed}};
  run.output("solution", a.solution.empty() ? beside(a.out, "solution.json") : fs::path(a.solution), dump(s));
  run.finish();
  std::cout << "cost " << sol.cost << (sol.optimal ? " (optimal)" : "") << "\n";
  return 0;
}

struct LearnArgs {
  std::string skeleton, traces, out, report, truth, wcnf, map, import_model;
  bool export_only = false;
};

int cmd_learn(const LearnArgs& a, const Common& c) {
  if (a.export_only && !a.import_model.empty()) throw UsageError("--export-only and --import-model exclude each other");
  Run run("learn", merged_config(c), c.run_dir, a.out);
  LearnConfig lc = learn_config(run.config());
  auto comp = compile_inputs(run, a.skeleton, a.traces, lc.compile);
  if (a.export_only) {
    run.output("wcnf", a.wcnf.empty() ? beside(a.out, "theory.wcnf") : fs::path(a.wcnf), write_wcnf(comp->lowered.wcnf));
    run.output("varmap", a.map.empty() ? beside(a.out, "varmap.json") : fs::path(a.map),
               dump(varmap_json(comp->skeleton, comp->catalog, comp->lowered)));
    run.finish();
    std::cout << "exported " << comp->lowered.wcnf.num_vars << " variables, " << comp->lowered.wcnf.clauses.size()
              << " clauses\n";
    return 0;
  }
  Solution sol;
  if (!a.import_model.empty()) {
    sol = run.stage("import", [&] {
      Solution s;
      s.values = read_model(run.input("model", a.import_model), comp->lowered.wcnf.num_vars);
      s.seed = lc.seed;
      return s;
    });
  } else {
    sol = run.stage("solve", [&] { return solve(comp->lowered.wcnf, lc); });
  }
  LearnResult r = run.stage("decode", [&] {
    return finish_learning(comp->skeleton, comp->catalog, std::move(comp->theory), std::move(comp->lowered),
                           std::move(sol));
  });
  json rep = report_json(r.report, lc);
  rep["imported"] = !a.import_model.empty();
  if (!a.truth.empty()) {
    ModelDiff md = run.stage("eval", [&] { return err_rates(r.learned, parse_domain(run.input("truth", a.truth))); });
    rep["metrics"] = metrics_json(md);
    std::cout << "acc " << md.acc << "\n";
  }
  run.output("learned", a.out, emit_domain(r.learned));
  run.output("report", a.report.empty() ? beside(a.out, "report.json") : fs::path(a.report), dump(rep));
  run.finish();
  std::cout << "cost " << r.report.cost << "\n";
  return 0;
}

struct EvalArgs {
  std::string learned, truth, out;
};

int cmd_eval(const EvalArgs& a, const Common& c) {
  Run run("eval", merged_config(c), c.run_dir, a.out);
  ModelDiff md = run.stage("eval", [&] {
    Domain learned = parse_domain(run.input("learned", a.learned));
    Domain truth = parse_domain(run.input("truth", a.truth));
    return err_rates(learned, truth);
  });
  for (const auto& s : md.empty_candidate_sets) std::cerr << "warning: schema " << s << " has no candidate literals\n";
  run.output("metrics", a.out, dump(metrics_json(md)));
  run.finish();
  std::cout << "acc " << md.acc << "\n";
  return 0;
}

struct ExperimentArgs {
  std::string domain, problems_dir, templ, out_dir, csv;
  std::vector<std::string> sweeps;  // key=v1,v2,...
};

struct Cell {
  std::string value;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  std::optional<double> acc;
  double mean_plan_length = 0;
  std::string failure;
};

int cmd_experiment(const ExperimentArgs& a, const Common& c) {
  if (a.problems_dir.empty() && a.templ.empty()) throw UsageError("experiment needs --problems DIR or --template F");
  const fs::path out_dir = a.out_dir;
  Run run("experiment", merged_config(c), out_dir.string(), (out_dir / "runs.json").string());
  FlatConfig cfg = run.config();

  std::string key;
  std::vector<std::string> values;
  if (a.sweeps.size() > 1) {
    std::string names;
    for (const auto& s : a.sweeps) names += (names.empty() ? "" : ", ") + s.substr(0, s.find('='));
    throw MixedVariation("more than one parameter varies: " + names);
  }
  if (!a.sweeps.empty()) {
    auto eq = a.sweeps[0].find('=');
    if (eq == std::string::npos) throw UsageError("--sweep expects KEY=V1,V2,...");
    key = a.sweeps[0].substr(0, eq);
    values = FlatConfig::split_list(a.sweeps[0].substr(eq + 1));
  } else {
    key = cfg.get("vary");
    if (!cfg.has("sweep_" + key)) throw ConfigError("no sweep_" + key + " list for vary = " + key);
    values = cfg.get_list("sweep_" + key);
  }
  const KeySpec* spec = find_key(key);
  if (!spec || !(spec->groups & (kForge | kCompile | kSolve)) || key == "seed")
    throw ConfigError("cannot sweep '" + key + "'");
  if (values.empty()) throw ConfigError("sweep over '" + key + "' has no values");
  const std::int64_t reps = cfg.get_int("repetitions");
  if (reps <= 0) throw ConfigError("repetitions must be positive");
  const std::int64_t jobs = cfg.get_int("jobs");
  if (jobs <= 0) throw ConfigError("jobs must be positive");
  cfg.set("vary", key);
  for (const auto& v : values) {
    FlatConfig probe = cfg;
    probe.set(key, v);
    corpus_config(probe);
    learn_config(probe);
  }

  Domain truth = run.stage("parse", [&] { return parse_domain(run.input("domain", a.domain)); });
  std::vector<Problem> problems;
  Problem templ;
  run.stage("problems", [&] {
    if (!a.problems_dir.empty())
      problems = load_problems(run, truth, a.problems_dir);
    else
      templ = parse_problem(run.input("template", a.templ), truth);
  });

  std::vector<Cell> cells;
  const std::uint64_t base = cfg.get_uint("seed");
  for (const auto& v : values)
    for (std::int64_t r = 0; r < reps; ++r)
      cells.push_back({v, static_cast<std::size_t>(r), derive_seed(base, static_cast<std::uint64_t>(r)), {}, 0, {}});

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      Cell& cell = cells[i];
      try {
        FlatConfig cc = cfg;
        cc.set(key, cell.value);
        cc.set("seed", std::to_string(cell.seed));
        Corpus corpus = generate(truth, templ, problems, cc);
        LearnResult r = learn_pipeline(truth.skeleton(), corpus.plan_traces(), learn_config(cc));
        cell.acc = err_rates(r.learned, truth).acc;
        cell.mean_plan_length = corpus.mean_plan_length();
      } catch (const Error& e) {
        cell.failure = std::string(e.category()) + ": " + e.what();
      }
    }
  };
  run.stage("runs", [&] {
    std::vector<std::thread> pool;
    for (std::int64_t j = 1; j < jobs; ++j) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
  });

  json runs = json::array();
  std::vector<RunRecord> records;
  std::size_t failed = 0;
  for (const auto& cell : cells) {
    json r = {{"parameter", key}, {"value", cell.value}, {"repetition", cell.rep}, {"seed", cell.seed}};
    if (cell.acc) {
      r["status"] = "ok";
      r["acc"] = *cell.acc;
      r["mean_plan_length"] = cell.mean_plan_length;
      records.push_back({{{key, cell.value}}, *cell.acc});
    } else {
      r["status"] = "failed";
      r["failure"] = cell.failure;
      ++failed;
    }
    runs.push_back(r);
  }
  run.output("runs", out_dir / "runs.json", dump(runs));
  if (failed) std::cerr << failed << " of " << cells.size() << " runs failed; see runs.json\n";

  TrendTable table = run.stage("trend", [&] { return trend_report(records); });
  if (table.parameter.empty()) table.parameter = key;
  json rows = json::array();
  std::ostringstream csv;
  csv << "parameter,value,runs,mean_acc,stddev_acc\n";
  std::cout << std::left << std::setw(12) << key << std::setw(6) << "runs" << std::setw(12) << "mean_acc"
            << "stddev\n";
  for (const auto& row : table.rows) {
    rows.push_back({{"value", row.value}, {"runs", row.runs}, {"mean", row.mean}, {"stddev", row.stddev}});
    csv << table.parameter << "," << row.value << "," << row.runs << "," << row.mean << "," << row.stddev << "\n";
    std::cout << std::setw(12) << row.value << std::setw(6) << row.runs << std::setw(12) << row.mean << row.stddev
              << "\n";
  }
  run.output("trend", out_dir / "trend.json", dump({{"parameter", table.parameter}, {"rows", rows}}));
  if (!a.csv.empty()) run.output("csv", a.csv, csv.str());
  run.extra() = {{"runs", cells.size()}, {"failed", failed}};
  run.finish();
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"amdn: learn STRIPS action models from disordered, parallel, noisy plan traces"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough(false);

  Common c_gen, c_compile, c_export, c_solve, c_learn, c_eval, c_experiment;

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "synthesize and corrupt plan traces");
  g->add_option("--domain", gen.domain, "ground-truth domain")->required()->check(CLI::ExistingFile);
  auto* pd = g->add_option("--problems", gen.problems_dir, "directory of problem files")->check(CLI::ExistingDirectory);
  g->add_option("--template", gen.templ, "problem whose objects and init seed random problems")
      ->check(CLI::ExistingFile)
      ->excludes(pd);
  g->add_option("--out", gen.out, "traces output")->required();
  g->add_option("--log", gen.log, "swap log output (default swaps.json beside --out)");
  add_common(g, c_gen, kForge);

  CompileArgs comp;
  auto* cp = app.add_subcommand("compile", "compile traces into a weighted CNF");
  auto* ex = app.add_subcommand("export-wcnf", "same as compile; for external MaxSAT solvers");
  for (auto [s, cc] : {std::pair{cp, &c_compile}, std::pair{ex, &c_export}}) {
    s->add_option("--domain,--domain-skeleton", comp.domain, "domain skeleton (bodies ignored)")
        ->required()
        ->check(CLI::ExistingFile);
    s->add_option("--traces", comp.traces, "trace file")->required()->check(CLI::ExistingFile);
    s->add_option("--out", comp.out, "WCNF output")->required();
    s->add_option("--map", comp.map, "variable map output (default varmap.json beside --out)");
    add_common(s, *cc, kCompile);
  }

  SolveArgs sv;
  auto* so = app.add_subcommand("solve", "solve a WCNF file");
  so->add_option("--wcnf", sv.wcnf, "instance")->required()->check(CLI::ExistingFile);
  so->add_option("--out", sv.out, "model output (signed literals)")->required();
  so->add_option("--solution", sv.solution, "solution summary (default solution.json beside --out)");
  add_common(so, c_solve, kSolve);

  LearnArgs ln;
  auto* le = app.add_subcommand("learn", "learn action models end to end");
  le->add_option("--domain-skeleton,--domain", ln.skeleton, "domain skeleton (bodies ignored)")
      ->required()
      ->check(CLI::ExistingFile);
  le->add_option("--traces", ln.traces, "trace file")->required()->check(CLI::ExistingFile);
  le->add_option("--out", ln.out, "learned domain output")->required();
  le->add_option("--report", ln.report, "report output (default report.json beside --out)");
  le->add_option("--truth", ln.truth, "ground-truth domain; adds metrics to the report")->check(CLI::ExistingFile);
  le->add_flag("--export-only", ln.export_only, "write the WCNF and variable map, then stop");
  le->add_option("--wcnf", ln.wcnf, "WCNF output for --export-only (default theory.wcnf beside --out)");
  le->add_option("--map", ln.map, "variable map output for --export-only");
  le->add_option("--import-model", ln.import_model, "decode this model instead of solving")->check(CLI::ExistingFile);
  add_common(le, c_learn, kCompile | kSolve);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "score a learned domain against the truth");
  e->add_option("--learned", ev.learned, "learned domain")->required()->check(CLI::ExistingFile);
  e->add_option("--truth", ev.truth, "ground-truth domain")->required()->check(CLI::ExistingFile);
  e->add_option("--out", ev.out, "metrics output")->required();
  add_common(e, c_eval, 0);

  ExperimentArgs xa;
  auto* xp = app.add_subcommand("experiment", "repeat gen, learn, eval over one swept parameter");
  xp->add_option("--domain", xa.domain, "ground-truth domain")->required()->check(CLI::ExistingFile);
  auto* xpd =
      xp->add_option("--problems", xa.problems_dir, "directory of problem files")->check(CLI::ExistingDirectory);
  xp->add_option("--template", xa.templ, "problem template for random problems")
      ->check(CLI::ExistingFile)
      ->excludes(xpd);
  xp->add_option("--out-dir", xa.out_dir, "output directory")->required();
  xp->add_option("--csv", xa.csv, "plot-ready accuracy table");
  xp->add_option("--sweep", xa.sweeps, "KEY=V1,V2,... (default: vary and its sweep_ list)");
  add_common(xp, c_experiment, kForge | kCompile | kSolve | kExperiment);

  auto usage = [&](const std::string& msg) {
    std::cerr << "amdn: " << msg << "\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    if (err.get_exit_code() == 0) return app.exit(err);
    return usage(err.what());
  }

  try {
    defaults();
    if (*g) return cmd_gen(gen, c_gen);
    if (*cp) return cmd_compile("compile", comp, c_compile);
    if (*ex) return cmd_compile("export-wcnf", comp, c_export);
    if (*so) return cmd_solve(sv, c_solve);
    if (*le) return cmd_learn(ln, c_learn);
    if (*e) return cmd_eval(ev, c_eval);
    if (*xp) return cmd_experiment(xa, c_experiment);
  } catch (const UsageError& err) {
    return usage(err.what());
  } catch (const ConfigError& err) {
    return usage(std::string("config: ") + err.what());
  } catch (const StageFailure& err) {
    std::cerr << "amdn: " << err.what() << "\n";
    return 1;
  } catch (const Error& err) {
    std::cerr << "amdn: " << err.category() << ": " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "amdn: " << err.what() << "\n";
    return 1;
  }
  return 2;
}
