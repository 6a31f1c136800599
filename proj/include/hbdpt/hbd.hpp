#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hbdpt/blocklib.hpp"

namespace hbdpt {

struct Diagram;

struct BlockInstance {
  std::string id;
  /// Kind name as written; empty for subsystems.
  std::string kind;
  std::map<std::string, std::string> params;
  /// Resolved kind; absent when the kind or its parameters are invalid
  /// (validate reports why).
  std::optional<BlockType> type;
  std::string type_error;
  std::shared_ptr<const Diagram> subsystem;
  VarList in;
  VarList out;

  bool is_subsystem() const { return subsystem != nullptr; }
};

struct Diagram {
  std::string name;
  VarList inputs;
  VarList outputs;
  std::vector<BlockInstance> blocks;

  const BlockInstance *find(std::string_view id) const;
};

enum class Severity { Error, Warning };
enum class DiagCode { AlgebraicLoop, UnsupportedBlock, MalformedBlock, DanglingPort, DuplicateWire };

std::string_view diag_code_name(DiagCode c);

struct Diagnostic {
  Severity severity = Severity::Error;
  DiagCode code = DiagCode::MalformedBlock;
  /// Slash-separated block path from the top diagram, e.g. `Counter/DelaySum/add`.
  std::string location;
  std::string message;
  /// Members of an algebraic loop.
  std::vector<std::string> blocks;
};

std::string to_string(const Diagnostic &d);
bool has_errors(const std::vector<Diagnostic> &ds);

struct ParseOptions {
  BlockDefaults defaults;
};

/// Reads the JSON diagram format, expands `name[n]` vector ports and inserts
/// one k-ary Split per fan-out point. Throws SyntaxError or SchemaError.
Diagram parse_diagram(std::string_view text, const ParseOptions &opts = {});
Diagram load_diagram(const std::filesystem::path &file, const ParseOptions &opts = {});
nlohmann::json diagram_to_json(const Diagram &d);

std::vector<Diagnostic> validate(const Diagram &d);

/// Inlines subsystems; inner names get the `<subsystem id>.` prefix and
/// subsystem ports alias the parent's wires.
Diagram flatten(const Diagram &d);
bool is_flat(const Diagram &d);

/// Connected components of the wire graph, ordered by smallest block id.
std::vector<Diagram> islands(const Diagram &flat);

/// Block order used for incremental composition: Kahn's algorithm over all
/// data wires; when stuck, the block with most resolved inputs goes next.
/// Ties are broken by block id. Throws CycleError on an algebraic loop.
std::vector<BlockInstance> toposort(const Diagram &flat);

/// Evaluation order respecting every direct-feedthrough edge (ties by id).
std::vector<BlockInstance> schedule(const Diagram &flat);

/// Per-output instantaneous input dependence of a block (subsystems are
/// computed transitively). Indices are into `in`.
std::vector<std::vector<std::size_t>> block_feedthrough(const BlockInstance &b);

/// Number of state variables, including those of nested subsystems.
std::size_t state_count(const Diagram &d);

/// State variable names in depth-first block order, `<blockpath>.s`.
VarList state_vars(const Diagram &d, const std::string &prefix = "");

} // namespace hbdpt
