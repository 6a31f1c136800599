#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hbdpt/hbd.hpp"

namespace hbdpt {

enum class Strategy { FP, IT, NFBT };

std::string_view strategy_name(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view text);

struct TranslationOptions {
  Strategy strategy = Strategy::IT;
  bool flat = false;
  /// Name every intermediate composition (ICC1, ICC2, ...). IT only.
  bool io = false;
  /// NFBT post-pass applying the Id laws.
  bool id_elim = true;
};

/// A partially assembled diagram: named ports and the term wiring them.
struct Component {
  VarList in;
  VarList out;
  CptTerm cpt;
};

/// Ports of a (sub)diagram as a transformer: inputs then current states,
/// outputs then next states.
struct Interface {
  VarList in;
  VarList out;
};

Interface interface_of(const Diagram &d);

Component parallel_comp(const Component &a, const Component &b);
/// Connects every port in both `in` and `out`. Optional orders fix the
/// remaining external ports (unlisted outputs are dropped).
Component feedback_comp(const Component &a, const VarList *in_order = nullptr, const VarList *out_order = nullptr);
Component serial_comp(const Component &a, const Component &b);
/// Chooses parallel, serial or serial-plus-feedback by counting wires.
Component compose(const Component &a, const Component &b);

/// Component of a basic block; its state is `<id>.s`.
Component block_component(const BlockInstance &b);

/// Strategies over a flat diagram. With an interface the result takes the
/// interface's port order; without one, the natural order of the algorithm.
CptTerm translate_fp(const Diagram &flat, const std::optional<Interface> &iface = std::nullopt);
CptTerm translate_it(const Diagram &flat, const std::optional<Interface> &iface = std::nullopt);
CptTerm translate_nfbt(const Diagram &flat, const std::optional<Interface> &iface = std::nullopt,
                       bool id_elim = true);

/// Id ; A = A, A ; Id = A, Id || Id = Id. `Id_*` parts and Scope count as Id
/// and are printed as `Id`.
CptTerm eliminate_ids(const CptTerm &t);

struct Definition {
  std::string name;
  CptTerm term;
  VarList inputs;
  VarList outputs;
};

struct TranslationUnit {
  std::vector<Definition> defs;
  std::string top;

  const Definition *find(const std::string &name) const;
  const Definition &top_def() const;
  /// Definitions first, then block atoms.
  Resolver resolver() const;
};

/// Bottom-up translation. Throws ValidationFailed when validate reports errors.
TranslationUnit translate_model(const Diagram &d, const TranslationOptions &opts);

std::string to_text(const TranslationUnit &u);
nlohmann::json to_json(const TranslationUnit &u);

} // namespace hbdpt
