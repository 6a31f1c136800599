#pragma once

#include <cstdint>
#include <string>

#include "hbdpt/hbd.hpp"

namespace hbdpt {

struct GenParams {
  /// Blocks written by the generator; Splits added by fan-out
  /// normalization are not counted.
  std::size_t max_blocks = 6;
  /// Exact block count instead of a random one in 1..max_blocks.
  bool exact = false;
  std::size_t max_inputs = 2;
  /// Chance that a free input slot reads a constant or a delayed back-edge.
  double const_prob = 0.15;
  double delay_prob = 0.25;
  bool allow_div = true;
};

/// A connected, algebraic-loop-free flat diagram in the file format.
/// Identical for identical seeds.
std::string gen_random_diagram_text(std::uint64_t seed, const GenParams &p = {});
Diagram gen_random_diagram(std::uint64_t seed, const GenParams &p = {});

/// Wires of a diagram: distinct port names of the top level and its blocks.
std::size_t wire_count(const Diagram &d);

/// Searches seeds from `seed` for a generated diagram with exactly `blocks`
/// blocks (after normalization) and `wires` wires, without Div.
Diagram gen_sized_diagram(std::uint64_t seed, std::size_t blocks, std::size_t wires);

/// Names of the bundled models, e.g. `counter`.
std::vector<std::string> corpus_models();
/// Path of a bundled model.
std::string corpus_path(const std::string &model);

} // namespace hbdpt
