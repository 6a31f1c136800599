#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "hbdpt/fixtures.hpp"
#include "hbdpt/metrics.hpp"
#include "hbdpt/semantics.hpp"
#include "hbdpt/simplify.hpp"

using namespace hbdpt;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInvalid = 2, kIncompatible = 3, kBudget = 4, kMismatch = 5 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Settings {
  std::string format = "text";
  std::string config;
  std::string domain;
  std::string strategy = "it";
  std::string strategies = "fp,it,nfbt";
  bool flat = false;
  bool io = false;
  bool no_id_elim = false;
  std::uint64_t budget_nodes = 0;
  double budget_secs = 0;
  std::size_t steps = 10;
  std::vector<std::string> inputs;
  std::string via = "diagram";
  bool all_strategies = false;
  std::string file;

  // Resolved from the config file and the flags.
  DomainConfig dom = DomainConfig::standard();
  ExpandOptions expand;
  ParseOptions parse;
  std::uint64_t cap = 1'000'000;
};

DomainConfig parse_domain(const std::string &text) {
  auto dots = text.find("..");
  if (dots == std::string::npos) throw UsageError("domain must look like lo..hi: " + text);
  try {
    long lo = std::stol(text.substr(0, dots)), hi = std::stol(text.substr(dots + 2));
    if (lo > hi) throw UsageError("empty domain " + text);
    return DomainConfig::range(lo, hi);
  } catch (const std::logic_error &) {
    throw UsageError("domain must look like lo..hi: " + text);
  }
}

// Config file: {"domain": "-2..2" | {"ints": [...], "reals": [...]},
// "budget_nodes": N, "budget_secs": S, "cap": N, "dt": "1/100", "init": 0}.
void load_config(Settings &s, const CLI::App &app) {
  if (!s.config.empty()) {
    std::ifstream in(s.config);
    if (!in) throw UsageError("cannot read config " + s.config);
    json c;
    try {
      c = json::parse(in);
    } catch (const json::exception &e) {
      throw UsageError("config " + s.config + ": " + e.what());
    }
    auto rat = [](const json &v) { return v.is_string() ? parse_rational(v.get<std::string>()) : parse_rational(v.dump()); };
    if (c.contains("domain")) {
      const auto &d = c["domain"];
      if (d.is_string()) {
        s.dom = parse_domain(d.get<std::string>());
      } else {
        s.dom = DomainConfig{};
        for (const auto &v : d.value("ints", json::array())) s.dom.ints.push_back(rat(v));
        for (const auto &v : d.value("reals", json::array())) s.dom.reals.push_back(rat(v));
      }
    }
    if (c.contains("budget_nodes")) s.expand.node_budget = c["budget_nodes"].get<std::uint64_t>();
    if (c.contains("budget_secs")) s.expand.seconds = c["budget_secs"].get<double>();
    if (c.contains("cap")) s.cap = c["cap"].get<std::uint64_t>();
    if (c.contains("dt")) s.parse.defaults.dt = rat(c["dt"]);
    if (c.contains("init")) s.parse.defaults.init = rat(c["init"]);
  }
  auto given = [&](const std::string &opt) {
    for (const auto *sub : app.get_subcommands())
      if (const auto *o = sub->get_option_no_throw(opt); o && o->count()) return true;
    return false;
  };
  if (given("--domain")) s.dom = parse_domain(s.domain);
  if (given("--budget-nodes")) s.expand.node_budget = s.budget_nodes;
  if (given("--budget-secs")) s.expand.seconds = s.budget_secs;
}

Strategy strategy_of(const std::string &name) {
  auto s = parse_strategy(name);
  if (!s) throw UsageError("unknown strategy " + name + " (fp, it or nfbt)");
  return *s;
}

TranslationOptions translation_options(const Settings &s) {
  TranslationOptions o;
  o.strategy = strategy_of(s.strategy);
  o.flat = s.flat;
  o.io = s.io;
  o.id_elim = !s.no_id_elim;
  if (o.io && o.strategy != Strategy::IT) throw UsageError("--io applies to the it strategy only");
  return o;
}

// Loads and validates; prints diagnostics. Returns nothing when there are
// errors.
std::optional<Diagram> load(const Settings &s, std::vector<Diagnostic> *out = nullptr) {
  Diagram d = load_diagram(s.file, s.parse);
  auto ds = validate(d);
  for (const auto &x : ds) std::cerr << to_string(x) << "\n";
  if (out) *out = ds;
  if (has_errors(ds)) return std::nullopt;
  return d;
}

void print(const Settings &s, const std::string &text, const json &j) {
  if (s.format == "json") std::cout << j.dump(2) << "\n";
  else std::cout << text;
}

int cmd_translate(const Settings &s) {
  auto d = load(s);
  if (!d) return kInvalid;
  auto u = translate_model(*d, translation_options(s));
  print(s, to_text(u), to_json(u));
  return kOk;
}

int cmd_simplify(const Settings &s) {
  auto d = load(s);
  if (!d) return kInvalid;
  auto r = simplify_unit(translate_model(*d, translation_options(s)), s.expand, s.dom);
  print(s, to_text(r), to_json(r));
  if (r.budget_exhausted) {
    std::cerr << "budget exhausted\n";
    return kBudget;
  }
  return r.top_def()->compat.verdict == Verdict::Incompatible ? kIncompatible : kOk;
}

int cmd_check(const Settings &s) {
  std::vector<Diagnostic> ds;
  auto d = load(s, &ds);
  json j{{"diagnostics", json::array()}};
  for (const auto &x : ds) j["diagnostics"].push_back(to_string(x));
  if (!d) {
    j["verdict"] = "Invalid";
    print(s, "Invalid: " + std::to_string(ds.size()) + " diagnostic(s)\n", j);
    return kInvalid;
  }
  auto r = simplify_unit(translate_model(*d, translation_options(s)), s.expand, s.dom);
  const auto *top = r.top_def();
  if (!top) {
    j["verdict"] = "BudgetExhausted";
    print(s, "Unknown: budget exhausted\n", j);
    return kBudget;
  }
  AtomicPT shown = display_form(top->atom);
  std::string verdict = top->compat.text(top->atom.inputs, &shown.inputs);
  j["verdict"] = verdict.substr(0, verdict.find_first_of(" :"));
  j["text"] = verdict;
  j["definition"] = r.top + " = " + pretty(shown);
  print(s, r.top + " = " + pretty(shown) + "\n" + verdict + "\n", j);
  return top->compat.verdict == Verdict::Incompatible ? kIncompatible : kOk;
}

Value parse_value(const std::string &text, Sort sort) {
  if (sort == Sort::Bool) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw UsageError("not a boolean: " + text);
  }
  try {
    return parse_rational(text);
  } catch (const Error &) {
    throw UsageError("not a number: " + text);
  }
}

// `port=v1,v2,...`; the last value holds for the remaining steps, and
// ports not mentioned read 0.
std::vector<Env> input_rows(const Settings &s, const VarList &ports) {
  std::map<std::string, std::vector<std::string>> given;
  for (const auto &spec : s.inputs) {
    auto eq = spec.find('=');
    if (eq == std::string::npos) throw UsageError("--input expects port=v1,v2,...: " + spec);
    std::vector<std::string> vals;
    std::stringstream ss(spec.substr(eq + 1));
    for (std::string v; std::getline(ss, v, ',');) vals.push_back(v);
    if (vals.empty()) throw UsageError("no values for " + spec.substr(0, eq));
    given[spec.substr(0, eq)] = vals;
  }
  for (const auto &[name, _] : given)
    if (std::none_of(ports.begin(), ports.end(), [&](const Var &v) { return v.name == name; }))
      throw UsageError("no input port " + name);
  std::vector<Env> rows(s.steps);
  for (const auto &p : ports) {
    auto it = given.find(p.name);
    for (std::size_t k = 0; k < s.steps; ++k) {
      if (it == given.end()) rows[k][p.name] = p.sort == Sort::Bool ? Value{false} : Value{Rational(0)};
      else rows[k][p.name] = parse_value(it->second[std::min(k, it->second.size() - 1)], p.sort);
    }
  }
  return rows;
}

json trace_json(const Trace &t, const VarList &ports) {
  json rows = json::array();
  for (const auto &env : t) {
    json r = json::object();
    for (const auto &p : ports)
      if (auto it = env.find(p.name); it != env.end()) r[p.name] = value_to_string(it->second);
    rows.push_back(r);
  }
  return rows;
}

int cmd_simulate(const Settings &s) {
  auto d = load(s);
  if (!d) return kInvalid;
  Diagram f = flatten(*d);
  auto rows = input_rows(s, f.inputs);
  Trace t;
  if (s.via == "diagram") {
    t = simulate(f, rows, s.steps);
  } else if (s.via == "cpt") {
    auto r = simplify_unit(translate_model(*d, translation_options(s)), s.expand, s.dom);
    if (!r.top_def()) {
      std::cerr << "budget exhausted\n";
      return kBudget;
    }
    t = iterate(r.top_def()->atom, initial_states(f), rows);
  } else {
    throw UsageError("--via expects diagram or cpt");
  }
  print(s, trace_csv(t, f.outputs), trace_json(t, f.outputs));
  return kOk;
}

int cmd_equiv(const Settings &s) {
  auto d = load(s);
  if (!d) return kInvalid;
  std::vector<Strategy> strategies;
  std::stringstream ss(s.strategies);
  for (std::string name; std::getline(ss, name, ',');) strategies.push_back(strategy_of(name));
  if (strategies.size() < 2) throw UsageError("--strategies needs at least two");
  SemOptions so;
  so.domain = s.dom;
  so.cap = s.cap;
  std::vector<RelSem> sems;
  for (auto st : strategies) {
    Settings one = s;
    one.strategy = std::string(strategy_name(st));
    auto r = simplify_unit(translate_model(*d, translation_options(one)), s.expand, s.dom);
    if (!r.top_def()) {
      std::cerr << "budget exhausted for " << strategy_name(st) << "\n";
      return kBudget;
    }
    sems.push_back(rel_sem(r.top_def()->atom, so));
  }
  std::string text;
  json pairs = json::array();
  bool all = true;
  for (std::size_t i = 0; i < strategies.size(); ++i)
    for (std::size_t j = i + 1; j < strategies.size(); ++j) {
      bool eq = equiv(sems[i], sems[j]);
      all = all && eq;
      std::string a(strategy_name(strategies[i])), b(strategy_name(strategies[j]));
      text += a + " vs " + b + ": " + (eq ? "equivalent" : "NOT equivalent") + "\n";
      pairs.push_back({{"a", a}, {"b", b}, {"equivalent", eq}});
    }
  text += all ? "all equivalent\n" : "mismatch\n";
  print(s, text, {{"pairs", pairs}, {"all_equivalent", all}});
  return all ? kOk : kMismatch;
}

int cmd_metrics(const Settings &s) {
  auto d = load(s);
  if (!d) return kInvalid;
  MetricsOptions mo;
  mo.simp = s.expand;
  mo.raw.node_budget = s.expand.node_budget;
  mo.raw.seconds = s.expand.seconds;
  std::vector<MetricsRow> rows;
  if (s.all_strategies) {
    rows = measure_all(*d, mo);
  } else {
    auto o = translation_options(s);
    rows.push_back(measure(translate_model(*d, o), configuration_label(o), mo));
  }
  if (s.format == "csv") {
    std::cout << metrics_csv(rows);
  } else {
    json j = json::array();
    for (const auto &r : rows) j.push_back(to_json(r));
    print(s, metrics_table(rows), j);
  }
  return kOk;
}

int exit_for(const Error &e) {
  switch (e.code()) {
  case ErrorCode::SyntaxError:
  case ErrorCode::SchemaError:
  case ErrorCode::CycleError:
  case ErrorCode::AlgebraicLoop:
  case ErrorCode::UnsupportedBlock:
  case ErrorCode::MissingParam:
  case ErrorCode::ValidationFailed:
  case ErrorCode::NoFeedbackVars: return kInvalid;
  case ErrorCode::PreconditionViolated:
  case ErrorCode::DivisionByZero: return kIncompatible;
  case ErrorCode::BudgetExhausted:
  case ErrorCode::SpaceTooLarge: return kBudget;
  default: return kUsage;
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Translate hierarchical block diagrams to predicate transformers"};
  app.require_subcommand(1);
  app.fallthrough();
  Settings s;
  app.add_option("--format", s.format, "Output format")
      ->check(CLI::IsMember({"text", "json", "csv"}))
      ->capture_default_str();
  app.add_option("--config", s.config, "JSON file with domain, budgets and block defaults")
      ->check(CLI::ExistingFile);

  auto file_opt = [&](CLI::App *c) { c->add_option("file", s.file, "Diagram file")->required(); };
  auto strategy_opts = [&](CLI::App *c) {
    c->add_option("--strategy", s.strategy, "fp, it or nfbt")->capture_default_str();
    c->add_flag("--flat", s.flat, "Flatten subsystems first");
    c->add_flag("--io", s.io, "Name every intermediate composition (it)");
    c->add_flag("--no-id-elim", s.no_id_elim, "Keep Id components (nfbt)");
  };
  auto budget_opts = [&](CLI::App *c) {
    c->add_option("--budget-nodes", s.budget_nodes, "Largest formula, in tree nodes");
    c->add_option("--budget-secs", s.budget_secs, "Time per definition, in seconds");
    c->add_option("--domain", s.domain, "Carrier lo..hi for compatibility checks");
  };

  auto *tr = app.add_subcommand("translate", "Print the predicate transformer terms");
  file_opt(tr);
  strategy_opts(tr);

  auto *si = app.add_subcommand("simplify", "Expand and simplify every definition");
  file_opt(si);
  strategy_opts(si);
  budget_opts(si);

  auto *ch = app.add_subcommand("check", "Validate and decide compatibility of the top level");
  file_opt(ch);
  strategy_opts(ch);
  budget_opts(ch);

  auto *sm = app.add_subcommand("simulate", "Run the diagram or its simplified transformer");
  file_opt(sm);
  strategy_opts(sm);
  budget_opts(sm);
  sm->add_option("--steps", s.steps, "Number of steps")->capture_default_str();
  sm->add_option("--input", s.inputs, "port=v1,v2,... (last value holds)");
  sm->add_option("--via", s.via, "diagram or cpt")->check(CLI::IsMember({"diagram", "cpt"}))->capture_default_str();

  auto *eq = app.add_subcommand("equiv", "Compare strategies over a finite domain");
  file_opt(eq);
  eq->add_option("--strategies", s.strategies, "Comma-separated")->capture_default_str();
  eq->add_flag("--flat", s.flat, "Flatten subsystems first");
  eq->add_option("--budget-nodes", s.budget_nodes, "Largest formula, in tree nodes");
  eq->add_option("--budget-secs", s.budget_secs, "Time per definition, in seconds");
  eq->add_option("--domain", s.domain, "Carrier lo..hi");

  auto *me = app.add_subcommand("metrics", "Evaluation table");
  file_opt(me);
  strategy_opts(me);
  me->add_option("--budget-nodes", s.budget_nodes, "Largest formula, in tree nodes");
  me->add_option("--budget-secs", s.budget_secs, "Time per definition, in seconds");
  me->add_flag("--all-strategies", s.all_strategies, "Every strategy and option");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    load_config(s, app);
    if (tr->parsed()) return cmd_translate(s);
    if (si->parsed()) return cmd_simplify(s);
    if (ch->parsed()) return cmd_check(s);
    if (sm->parsed()) return cmd_simulate(s);
    if (eq->parsed()) return cmd_equiv(s);
    if (me->parsed()) return cmd_metrics(s);
  } catch (const UsageError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_for(e);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
