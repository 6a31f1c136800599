#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hbdpt/transformer.hpp"

namespace hbdpt {

struct BlockDefaults {
  Rational dt{1, 100};
  Rational init{0};
};

/// A block kind with its parameters resolved (defaults filled in).
struct BlockType {
  std::string kind;
  std::map<std::string, std::string> params;

  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::size_t states = 0;

  Rational param(const std::string &name) const;
  const std::string &text_param(const std::string &name) const;
  bool stateful() const { return states > 0; }

  friend bool operator==(const BlockType &, const BlockType &) = default;
};

struct BlockKindInfo {
  std::string name;
  std::string summary;
  std::vector<std::string> params;
  std::vector<std::string> required;
};

const std::vector<BlockKindInfo> &block_kinds();
const BlockKindInfo *find_block_kind(std::string_view name);

/// Validates the kind and parameters. `given_outputs` sizes Split when no
/// fanout is set. Throws UnsupportedBlock, MissingParam or SchemaError.
BlockType make_block_type(const std::string &kind, const std::map<std::string, std::string> &params,
                          std::optional<std::size_t> given_outputs = std::nullopt,
                          const BlockDefaults &defaults = {});

/// Name used for the block inside CPT terms, e.g. `Const(1)`, `Split(3)`.
std::string atom_name(const BlockType &b);

/// Transformer over generic port names: data inputs then current states;
/// data outputs then next states.
AtomicPT block_atom(const BlockType &b);

/// The same transformer over the given wire and state names. Next states are
/// named `<state>'`.
AtomicPT instantiate(const BlockType &b, const VarList &in, const VarList &out, const VarList &states);

/// For each data output, the data inputs it depends on within the same step.
std::vector<std::vector<std::size_t>> feedthrough(const BlockType &b);

/// Single-output pieces used by the feedbackless strategy. `output` indexes
/// data outputs then next states; `deps` index data inputs then states.
struct BlockPart {
  std::string name;
  std::size_t output;
  std::vector<std::size_t> deps;
};

std::vector<BlockPart> block_parts(const BlockType &b);

/// Resolves block atom names, `Id_*` aliases and part names to terms.
std::optional<CptTerm> resolve_block_ref(const std::string &name);

/// Machine-readable catalogue: kinds, arities, parameters, feedthrough.
nlohmann::json block_manifest();

} // namespace hbdpt
