#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hbdpt/simplify.hpp"

namespace hbdpt {

/// One column of the evaluation table. Empty optionals print as `-`, a set
/// timeout flag as the infinity sign.
struct MetricsRow {
  std::string label;
  /// Characters of all definition terms, and how many there are.
  std::uint64_t L_cpt = 0;
  std::uint64_t N_cpt = 0;
  /// Plain expansion: every feedback through the general rule, no
  /// simplification between steps.
  std::optional<double> T_exp;
  std::optional<double> P_exp;
  std::optional<std::uint64_t> L_exp;
  std::optional<std::uint64_t> N_quant;
  bool exp_timeout = false;
  /// Expansion with simplification, as `simplify` runs it.
  std::optional<double> T_tot;
  std::optional<double> P_simp;
  std::optional<std::uint64_t> L_simp;
  bool simp_timeout = false;
};

struct MetricsOptions {
  /// Budget for the plain expansion; the simplifying run uses `simp`.
  ExpandOptions raw = [] {
    ExpandOptions o;
    o.simplify = false;
    o.special_feedback = false;
    o.seconds = 10;
    return o;
  }();
  ExpandOptions simp;
};

MetricsRow measure(const TranslationUnit &u, const std::string &label, const MetricsOptions &opts = {});

/// The seven configurations in table order: FP PHBD, FP FHBD, IT PHBD,
/// IT FHBD, IT IO-PHBD, IT IO-FHBD, NFBT.
std::vector<TranslationOptions> table_configurations();
std::string configuration_label(const TranslationOptions &o);

std::vector<MetricsRow> measure_all(const Diagram &d, const MetricsOptions &opts = {});

/// Metrics down, configurations across, as in the paper's tables.
std::string metrics_table(const std::vector<MetricsRow> &rows);
std::string metrics_csv(const std::vector<MetricsRow> &rows);
nlohmann::json to_json(const MetricsRow &r);

} // namespace hbdpt
