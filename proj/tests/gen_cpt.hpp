#pragma once

#include <random>

#include "hbdpt/blocklib.hpp"

namespace hbdpt {
inline void PrintTo(const CptTerm &t, std::ostream *os) { *os << pretty(t); }
} // namespace hbdpt

namespace hbdpt::testing {

// Random well-typed CPT terms over Real ports.
class CptGen {
public:
  explicit CptGen(std::uint64_t seed) : rng_(seed) {}

  CptTerm term(int depth) {
    if (depth <= 0) return leaf();
    switch (pick(5)) {
    case 0: return CptTerm::parallel(term(depth - 1), term(depth - 1));
    case 1: {
      CptTerm a = term(depth - 1);
      return CptTerm::serial(a, update(a.out_sorts().size()));
    }
    case 2: {
      CptTerm a = term(depth - 1);
      if (a.in_sorts().empty() || a.out_sorts().empty()) return a;
      return CptTerm::feedback(a);
    }
    case 3: {
      CptTerm a = term(depth - 1);
      return CptTerm::serial(guard(a.in_sorts().size()), a);
    }
    default: return leaf();
    }
  }

  CptTerm leaf() {
    static const char *names[] = {"Add", "UnitDelay", "Split", "Div", "Const(1)", "Scope", "Gain(1/2)", "Min"};
    switch (pick(4)) {
    case 0: return CptTerm::id(std::vector<Sort>(1 + pick(2), Sort::Real));
    case 1: return update(1 + pick(2));
    default: {
      std::string n = names[pick(std::size(names))];
      return CptTerm::named(n, resolve_block_ref(n)->signature());
    }
    }
  }

  // [x1..xn -> bodies] with 1..2 outputs.
  CptTerm update(std::size_t n) {
    VarList in;
    for (std::size_t i = 0; i < n; ++i) in.push_back(Var{"x" + std::to_string(i + 1), Sort::Real});
    std::vector<Expr> bodies;
    std::size_t k = 1 + pick(2);
    for (std::size_t i = 0; i < k; ++i) bodies.push_back(body(in));
    return CptTerm::update_func(in, bodies);
  }

  CptTerm guard(std::size_t n) {
    VarList in;
    for (std::size_t i = 0; i < n; ++i) in.push_back(Var{"x" + std::to_string(i + 1), Sort::Real});
    if (in.empty()) return CptTerm::id({});
    return CptTerm::assert_(in, ex::neq(body(in), ex::num(0)));
  }

  Expr body(const VarList &in) {
    auto leafx = [&]() -> Expr {
      if (in.empty() || pick(3) == 0) return ex::num(static_cast<long>(pick(5)) - 2);
      return ex::var(in[pick(in.size())]);
    };
    switch (pick(4)) {
    case 0: return ex::add(leafx(), leafx());
    case 1: return ex::mul(leafx(), leafx());
    case 2: return ex::sub(leafx(), leafx());
    default: return leafx();
    }
  }

  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }

private:
  std::mt19937_64 rng_;
};

} // namespace hbdpt::testing
