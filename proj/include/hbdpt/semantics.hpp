#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hbdpt/hbd.hpp"

namespace hbdpt {

/// All tuples over the carriers of the given sorts, numbered in mixed radix
/// with the first component most significant.
struct TupleSpace {
  std::vector<Sort> sorts;
  std::vector<std::vector<Value>> carriers;

  std::uint64_t size() const;
  std::vector<Value> decode(std::uint64_t code) const;
  /// Nothing when a component lies outside its carrier.
  std::optional<std::uint64_t> encode(const std::vector<Value> &tuple) const;
};

struct SemOptions {
  DomainConfig domain = DomainConfig::standard();
  /// Largest tuple space enumerated; beyond it SpaceTooLarge.
  std::uint64_t cap = 1'000'000;
};

/// Finite denotation of {legal} ; [rel].
struct RelSem {
  TupleSpace in_space;
  TupleSpace out_space;
  /// Indexed by input code.
  std::vector<char> legal;
  /// Sorted output codes per input code.
  std::vector<std::vector<std::uint64_t>> rel;

  std::uint64_t legal_count() const;
};

/// Computed by enumeration: atoms by evaluation (x/0 = 0), serial,
/// parallel and feedback as set operations. Named references go through
/// `resolve`, then the block library.
RelSem rel_sem(const CptTerm &t, const Resolver &resolve = {}, const SemOptions &opts = {});
RelSem rel_sem(const AtomicPT &a, const SemOptions &opts = {});

/// Same legal inputs and, on them, the same outputs. Throws SpaceMismatch.
bool equiv(const RelSem &a, const RelSem &b);

/// One environment per step.
using Trace = std::vector<Env>;

/// `<blockpath>.s` to the block's initial value.
std::map<std::string, Rational> initial_states(const Diagram &flat);

/// Runs a flat loop-free diagram; returns the external outputs per step.
/// Throws DivisionByZero naming the step and the block.
Trace simulate(const Diagram &flat, const std::vector<Env> &inputs, std::size_t steps);

/// Steps a functional atom whose state inputs `X` pair with outputs `X'`.
/// Returns the other outputs per step. Missing initial states are 0.
/// Throws PreconditionViolated naming the step.
Trace iterate(const AtomicPT &a, const std::map<std::string, Rational> &init, const std::vector<Env> &inputs);

/// `step,port,value,decimal` rows.
std::string trace_csv(const Trace &t, const VarList &ports);

} // namespace hbdpt
