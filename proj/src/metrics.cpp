#include "hbdpt/metrics.hpp"

#include <chrono>
#include <cstdio>

namespace hbdpt {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt_time(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", s);
  return buf;
}

const char *kInfinity = "\xE2\x88\x9E";

struct Cell {
  std::string name;
  std::function<std::string(const MetricsRow &)> get;
};

template <class T> std::string opt(const std::optional<T> &v, bool timeout, bool is_time) {
  if (v) {
    if constexpr (std::is_same_v<T, double>) return fmt_time(*v);
    else return std::to_string(*v);
  }
  return timeout && is_time ? kInfinity : "-";
}

std::vector<Cell> cells() {
  return {
      {"L_cpt", [](const MetricsRow &r) { return std::to_string(r.L_cpt); }},
      {"N_cpt", [](const MetricsRow &r) { return std::to_string(r.N_cpt); }},
      {"T_exp", [](const MetricsRow &r) { return opt(r.T_exp, r.exp_timeout, true); }},
      {"P_exp", [](const MetricsRow &r) { return opt(r.P_exp, false, false); }},
      {"L_exp", [](const MetricsRow &r) { return opt(r.L_exp, false, false); }},
      {"N_quant", [](const MetricsRow &r) { return opt(r.N_quant, false, false); }},
      {"T_tot", [](const MetricsRow &r) { return opt(r.T_tot, r.simp_timeout, true); }},
      {"P_simp", [](const MetricsRow &r) { return opt(r.P_simp, false, false); }},
      {"L_simp", [](const MetricsRow &r) { return opt(r.L_simp, false, false); }},
  };
}

// Display width: the infinity sign is three bytes.
std::size_t width(const std::string &s) {
  std::size_t w = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++w;
  return w;
}

} // namespace

MetricsRow measure(const TranslationUnit &u, const std::string &label, const MetricsOptions &opts) {
  MetricsRow row;
  row.label = label;
  row.N_cpt = u.defs.size();
  for (const auto &d : u.defs) row.L_cpt += pretty(d.term).size();

  {
    AtomDefs atoms;
    double total = 0;
    bool done = true;
    for (const auto &d : u.defs) {
      auto t0 = Clock::now();
      Expansion e = expand(d.term, atoms, {}, opts.raw);
      total += since(t0);
      if (e.trace.budget_exhausted) {
        done = false;
        break;
      }
      atoms[d.name] = std::move(e.result);
    }
    if (done) {
      const AtomicPT &top = atoms.at(u.top);
      row.T_exp = total;
      auto t0 = Clock::now();
      std::string text = pretty(top);
      row.P_exp = since(t0);
      row.L_exp = text.size();
      row.N_quant = top.quantifier_count();
    } else {
      row.exp_timeout = true;
    }
  }

  auto t0 = Clock::now();
  SimplifyReport r = simplify_unit(u, opts.simp);
  double tot = since(t0);
  if (const auto *top = r.top_def()) {
    row.T_tot = tot;
    auto t1 = Clock::now();
    std::string text = pretty(display_form(top->atom));
    row.P_simp = since(t1);
    row.L_simp = text.size();
  } else {
    row.simp_timeout = true;
  }
  return row;
}

std::vector<TranslationOptions> table_configurations() {
  std::vector<TranslationOptions> out;
  auto add = [&](Strategy s, bool flat, bool io) {
    TranslationOptions o;
    o.strategy = s;
    o.flat = flat;
    o.io = io;
    out.push_back(o);
  };
  add(Strategy::FP, false, false);
  add(Strategy::FP, true, false);
  add(Strategy::IT, false, false);
  add(Strategy::IT, true, false);
  add(Strategy::IT, false, true);
  add(Strategy::IT, true, true);
  add(Strategy::NFBT, false, false);
  return out;
}

std::string configuration_label(const TranslationOptions &o) {
  std::string s(strategy_name(o.strategy));
  if (o.strategy == Strategy::NFBT) return s;
  return s + " " + (o.io ? "IO-" : "") + (o.flat ? "FHBD" : "PHBD");
}

std::vector<MetricsRow> measure_all(const Diagram &d, const MetricsOptions &opts) {
  std::vector<MetricsRow> rows;
  for (const auto &o : table_configurations()) rows.push_back(measure(translate_model(d, o), configuration_label(o), opts));
  return rows;
}

std::string metrics_table(const std::vector<MetricsRow> &rows) {
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> head{""};
  for (const auto &r : rows) head.push_back(r.label);
  grid.push_back(head);
  for (const auto &c : cells()) {
    std::vector<std::string> line{c.name};
    for (const auto &r : rows) line.push_back(c.get(r));
    grid.push_back(line);
  }
  std::vector<std::size_t> w(head.size(), 0);
  for (const auto &line : grid)
    for (std::size_t i = 0; i < line.size(); ++i) w[i] = std::max(w[i], width(line[i]));
  std::string out;
  for (const auto &line : grid) {
    std::string l;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i) l += "  ";
      std::string pad(w[i] - width(line[i]), ' ');
      l += i ? pad + line[i] : line[i] + pad;
    }
    while (!l.empty() && l.back() == ' ') l.pop_back();
    out += l + "\n";
  }
  return out;
}

std::string metrics_csv(const std::vector<MetricsRow> &rows) {
  std::string out = "metric";
  for (const auto &r : rows) out += "," + r.label;
  out += "\n";
  for (const auto &c : cells()) {
    out += c.name;
    for (const auto &r : rows) out += "," + c.get(r);
    out += "\n";
  }
  return out;
}

nlohmann::json to_json(const MetricsRow &r) {
  nlohmann::json j{{"label", r.label}, {"L_cpt", r.L_cpt}, {"N_cpt", r.N_cpt},
                   {"exp_timeout", r.exp_timeout}, {"simp_timeout", r.simp_timeout}};
  auto put = [&](const char *k, const auto &v) {
    if (v) j[k] = *v;
    else j[k] = nullptr;
  };
  put("T_exp", r.T_exp);
  put("P_exp", r.P_exp);
  put("L_exp", r.L_exp);
  put("N_quant", r.N_quant);
  put("T_tot", r.T_tot);
  put("P_simp", r.P_simp);
  put("L_simp", r.L_simp);
  return j;
}

} // namespace hbdpt
