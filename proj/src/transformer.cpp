#include "hbdpt/transformer.hpp"

#include <unordered_set>

#include "lexer.hpp"

namespace hbdpt {

std::uint64_t AtomicPT::quantifier_count() const { return pre.quantifier_count() + rel.quantifier_count(); }

Expr functional_rel(const VarList &outputs, const std::vector<Expr> &bodies) {
  std::vector<Expr> parts;
  for (std::size_t i = 0; i < outputs.size(); ++i) parts.push_back(ex::eq(ex::var(outputs[i]), bodies[i]));
  return ex::conj(parts);
}

AtomicPT AtomicPT::functional(VarList inputs, VarList outputs, std::vector<Expr> bodies, Expr pre) {
  if (bodies.size() != outputs.size())
    throw Error(ErrorCode::ArityMismatch, std::to_string(bodies.size()) + " bodies for " +
                                              std::to_string(outputs.size()) + " outputs");
  AtomicPT a;
  a.rel = functional_rel(outputs, bodies);
  a.inputs = std::move(inputs);
  a.outputs = std::move(outputs);
  a.pre = std::move(pre);
  a.bodies = std::move(bodies);
  return a;
}

AtomicPT AtomicPT::relational(VarList inputs, VarList outputs, Expr rel, Expr pre) {
  AtomicPT a;
  a.inputs = std::move(inputs);
  a.outputs = std::move(outputs);
  a.pre = std::move(pre);
  a.rel = std::move(rel);
  return a;
}

std::string signature_to_string(const Signature &s) {
  auto list = [](const std::vector<Sort> &v) {
    std::string out = "(";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::string(sort_name(v[i]));
    return out + ")";
  };
  return list(s.in) + " -> " + list(s.out);
}

struct CptTerm::Node {
  CptKind kind;
  Signature sig;
  VarList inputs, outputs;
  Expr formula;
  std::vector<Expr> bodies;
  std::vector<CptTerm> kids;
  std::string name;
  std::size_t hash = 0;
  std::uint64_t size = 1;
};

namespace {

std::size_t mix(std::size_t h, std::size_t v) { return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)); }

std::size_t hash_vars(std::size_t h, const VarList &vs) {
  for (const auto &v : vs) h = mix(mix(h, std::hash<std::string>{}(v.name)), static_cast<std::size_t>(v.sort));
  return h;
}

void check_free(const Expr &e, const VarList &allowed, std::string_view what) {
  for (const auto &v : e.free_vars())
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
      throw Error(ErrorCode::UnknownVariable, "'" + v.name + "' is not a port of " + std::string(what));
}

void check_distinct(const VarList &vs) {
  std::unordered_set<std::string> seen;
  for (const auto &v : vs)
    if (!seen.insert(v.name).second) throw Error(ErrorCode::SchemaError, "duplicate port name '" + v.name + "'");
}

} // namespace

CptKind CptTerm::kind() const { return node_->kind; }
const Signature &CptTerm::signature() const { return node_->sig; }
const VarList &CptTerm::inputs() const { return node_->inputs; }
const VarList &CptTerm::outputs() const { return node_->outputs; }
const Expr &CptTerm::formula() const { return node_->formula; }
const std::vector<Expr> &CptTerm::bodies() const { return node_->bodies; }
const CptTerm &CptTerm::left() const { return node_->kids.at(0); }
const CptTerm &CptTerm::right() const { return node_->kids.at(1); }
const CptTerm &CptTerm::body() const { return node_->kids.at(0); }
const std::string &CptTerm::name() const { return node_->name; }
std::uint64_t CptTerm::size() const { return node_->size; }
std::size_t CptTerm::hash() const { return node_->hash; }

bool operator==(const CptTerm &a, const CptTerm &b) {
  if (a.node_ == b.node_) return true;
  const auto &x = *a.node_, &y = *b.node_;
  if (x.hash != y.hash || x.kind != y.kind || !(x.sig == y.sig) || x.name != y.name || x.inputs != y.inputs ||
      x.outputs != y.outputs || x.formula != y.formula || x.bodies != y.bodies || x.kids.size() != y.kids.size())
    return false;
  for (std::size_t i = 0; i < x.kids.size(); ++i)
    if (x.kids[i] != y.kids[i]) return false;
  return true;
}

namespace {

CptTerm::Node base(CptKind k) {
  CptTerm::Node n;
  n.kind = k;
  n.hash = static_cast<std::size_t>(k) * 0x51ed27;
  return n;
}

} // namespace

CptTerm CptTerm::assert_(VarList inputs, Expr pred) {
  check_distinct(inputs);
  if (pred.sort() != Sort::Bool) throw Error(ErrorCode::SortMismatch, "assert predicate must be Bool");
  check_free(pred, inputs, "the assertion");
  Node n = base(CptKind::Assert);
  n.sig = {sorts_of(inputs), sorts_of(inputs)};
  n.hash = mix(hash_vars(n.hash, inputs), pred.hash());
  n.inputs = std::move(inputs);
  n.formula = std::move(pred);
  return CptTerm(std::make_shared<const Node>(std::move(n)));
}

CptTerm CptTerm::update_rel(VarList inputs, VarList outputs, Expr rel) {
  check_distinct(inputs);
  check_distinct(outputs);
  if (rel.sort() != Sort::Bool) throw Error(ErrorCode::SortMismatch, "update relation must be Bool");
  VarList all = inputs;
  all.insert(all.end(), outputs.begin(), outputs.end());
  // A shared name would make the relation ambiguous.
  check_distinct(all);
  check_free(rel, all, "the update");
  Node n = base(CptKind::UpdateRel);
  n.sig = {sorts_of(inputs), sorts_of(outputs)};
  n.hash = mix(hash_vars(hash_vars(n.hash, inputs), outputs), rel.hash());
  n.inputs = std::move(inputs);
  n.outputs = std::move(outputs);
  n.formula = std::move(rel);
  return CptTerm(std::make_shared<const Node>(std::move(n)));
}

CptTerm CptTerm::update_func(VarList inputs, VarList outputs, std::vector<Expr> bodies) {
  check_distinct(inputs);
  if (bodies.size() != outputs.size())
    throw Error(ErrorCode::ArityMismatch, "update has " + std::to_string(bodies.size()) + " bodies for " +
                                              std::to_string(outputs.size()) + " outputs");
  Node n = base(CptKind::UpdateFunc);
  n.hash = hash_vars(n.hash, inputs);
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    check_free(bodies[i], inputs, "the update");
    if (bodies[i].sort() != outputs[i].sort) {
      if (is_numeric(outputs[i].sort) && bodies[i].is_num())
        bodies[i] = ex::num(bodies[i].value(), outputs[i].sort);
      else
        throw Error(ErrorCode::SortMismatch, "body '" + to_string(bodies[i]) + "' does not have sort " +
                                                 std::string(sort_name(outputs[i].sort)));
    }
    n.hash = mix(n.hash, bodies[i].hash());
  }
  n.sig = {sorts_of(inputs), sorts_of(outputs)};
  n.inputs = std::move(inputs);
  n.outputs = std::move(outputs);
  n.bodies = std::move(bodies);
  return CptTerm(std::make_shared<const Node>(std::move(n)));
}

CptTerm CptTerm::update_func(VarList inputs, std::vector<Expr> bodies) {
  VarList outs;
  NameSupply names;
  names.reserve_all(inputs);
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    std::string nm = "y" + std::to_string(i + 1);
    while (names.is_used(nm)) nm += "'";
    names.reserve(nm);
    outs.push_back(Var{nm, bodies[i].sort()});
  }
  return update_func(std::move(inputs), std::move(outs), std::move(bodies));
}

CptTerm CptTerm::id(std::vector<Sort> sorts) {
  Node n = base(CptKind::Id);
  for (auto s : sorts) n.hash = mix(n.hash, static_cast<std::size_t>(s) + 1);
  n.sig = {sorts, sorts};
  return CptTerm(std::make_shared<const Node>(std::move(n)));
}

namespace {

CptTerm::Node binary(CptKind k, const CptTerm &a, const CptTerm &b) {
  CptTerm::Node n = base(k);
  n.hash = mix(mix(n.hash, a.hash()), b.hash());
  n.size = a.size() + b.size() + 1;
  n.kids = {a, b};
  return n;
}

} // namespace

CptTerm CptTerm::serial(const CptTerm &a, const CptTerm &b) {
  if (a.out_sorts() != b.in_sorts()) {
    ErrorCode code = a.out_sorts().size() == b.in_sorts().size() ? ErrorCode::SortMismatch : ErrorCode::ArityMismatch;
    throw Error(code, "serial composition of " + signature_to_string(a.signature()) + " with " +
                          signature_to_string(b.signature()) + " in " + pretty(a) + " ; " + pretty(b));
  }
  Node n = binary(CptKind::Serial, a, b);
  n.sig = {a.in_sorts(), b.out_sorts()};
  return CptTerm(std::make_shared<const Node>(std::move(n)));
}

CptTerm CptTerm::parallel(const CptTerm &a, const CptTerm &b) {
  Node n = binary(CptKind::Parallel, a, b);
  n.sig = a.signature();
  n.sig.in.insert(n.sig.in.end(), b.in_sorts().begin(), b.in_sorts().end());
  n.sig.out.insert(n.sig.out.end(), b.out_sorts().begin(), b.out_sorts().end());
  return CptTerm(std::make_shared<const Node>(std::move(n)));
}

CptTerm CptTerm::feedback(const CptTerm &a) {
  if (a.in_sorts().empty() || a.out_sorts().empty())
    throw Error(ErrorCode::ArityMismatch, "feedback needs at least one input and one output: " + pretty(a));
  if (a.in_sorts().front() != a.out_sorts().front())
    throw Error(ErrorCode::SortMismatch, "feedback connects ports of different sorts: " + pretty(a));
  Node n = base(CptKind::Feedback);
  n.hash = mix(n.hash, a.hash());
  n.size = a.size() + 1;
  n.sig = {std::vector<Sort>(a.in_sorts().begin() + 1, a.in_sorts().end()),
           std::vector<Sort>(a.out_sorts().begin() + 1, a.out_sorts().end())};
  n.kids = {a};
  return CptTerm(std::make_shared<const Node>(std::move(n)));
}

CptTerm CptTerm::named(std::string name, Signature sig) {
  if (name.empty()) throw Error(ErrorCode::SyntaxError, "empty reference name");
  Node n = base(CptKind::NamedRef);
  n.hash = mix(n.hash, std::hash<std::string>{}(name));
  n.sig = std::move(sig);
  n.name = std::move(name);
  return CptTerm(std::make_shared<const Node>(std::move(n)));
}

Signature signature(const CptTerm &t) { return t.signature(); }

CptTerm reroute(const VarList &from, const VarList &to) {
  check_distinct(from);
  std::vector<Expr> bodies;
  for (const auto &v : to) {
    auto it = std::find_if(from.begin(), from.end(), [&](const Var &f) { return f.name == v.name; });
    if (it == from.end()) throw Error(ErrorCode::UnknownVariable, "reroute target '" + v.name + "' not among sources");
    bodies.push_back(ex::var(*it));
  }
  return CptTerm::update_func(from, std::move(bodies));
}

bool is_identity_reroute(const VarList &from, const VarList &to) {
  if (from.size() != to.size()) return false;
  for (std::size_t i = 0; i < from.size(); ++i)
    if (from[i].name != to[i].name) return false;
  return true;
}

CptTerm serial_all(const std::vector<CptTerm> &parts) {
  if (parts.empty()) throw Error(ErrorCode::ArityMismatch, "empty serial chain");
  CptTerm acc = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) acc = CptTerm::serial(acc, parts[i]);
  return acc;
}

CptTerm parallel_all(const std::vector<CptTerm> &parts) {
  if (parts.empty()) throw Error(ErrorCode::ArityMismatch, "empty parallel group");
  CptTerm acc = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) acc = CptTerm::parallel(acc, parts[i]);
  return acc;
}

CptTerm as_term(const AtomicPT &a) {
  CptTerm upd = a.bodies ? CptTerm::update_func(a.inputs, a.outputs, *a.bodies)
                         : CptTerm::update_rel(a.inputs, a.outputs, a.rel);
  if (a.pre.is_true()) return upd;
  return CptTerm::serial(CptTerm::assert_(a.inputs, a.pre), upd);
}

// ---------------------------------------------------------------------------
// Printing

std::string var_decl_list(const VarList &vars) {
  if (vars.empty()) return "()";
  std::string out;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (i) out += ", ";
    out += vars[i].name;
    if (vars[i].sort != Sort::Real) out += ":" + std::string(sort_name(vars[i].sort));
  }
  return out;
}

namespace {

std::string expr_list(const std::vector<Expr> &es) {
  if (es.empty()) return "()";
  std::string out;
  for (std::size_t i = 0; i < es.size(); ++i) out += (i ? ", " : "") + to_string(es[i]);
  return out;
}

void print(const CptTerm &t, std::string &out, bool bare) {
  switch (t.kind()) {
  case CptKind::Assert:
    out += "{" + var_decl_list(t.inputs()) + " : " + to_string(t.formula()) + "}";
    return;
  case CptKind::UpdateRel:
    out += "[" + var_decl_list(t.inputs()) + " -> " + var_decl_list(t.outputs()) + " : " + to_string(t.formula()) +
           "]";
    return;
  case CptKind::UpdateFunc:
    out += "[" + var_decl_list(t.inputs()) + " -> " + expr_list(t.bodies()) + "]";
    return;
  case CptKind::Id: {
    const auto &s = t.in_sorts();
    if (s.size() == 1 && s[0] == Sort::Real) {
      out += "Id";
      return;
    }
    out += "Id(";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ", " : "") + std::string(sort_name(s[i]));
    out += ")";
    return;
  }
  case CptKind::Serial:
  case CptKind::Parallel:
    if (!bare) out += "(";
    print(t.left(), out, false);
    out += t.kind() == CptKind::Serial ? " ; " : " || ";
    print(t.right(), out, false);
    if (!bare) out += ")";
    return;
  case CptKind::Feedback:
    out += "feedback(";
    print(t.body(), out, true);
    out += ")";
    return;
  case CptKind::NamedRef: out += t.name(); return;
  }
}

} // namespace

std::string pretty(const CptTerm &t) {
  std::string out;
  print(t, out, false);
  return out;
}

std::string pretty(const AtomicPT &a) {
  std::string upd = a.bodies ? "[" + var_decl_list(a.inputs) + " -> " + expr_list(*a.bodies) + "]"
                             : "[" + var_decl_list(a.inputs) + " -> " + var_decl_list(a.outputs) + " : " +
                                   to_string(a.rel) + "]";
  if (a.pre.is_true()) return upd;
  return "({" + var_decl_list(a.inputs) + " : " + to_string(a.pre) + "} ; " + upd + ")";
}

std::uint64_t printed_length(const AtomicPT &a) {
  std::uint64_t ins = var_decl_list(a.inputs).size();
  std::uint64_t upd = 6 + ins;
  if (a.bodies) {
    if (a.bodies->empty()) upd += 2;
    for (std::size_t i = 0; i < a.bodies->size(); ++i) upd += (i ? 2 : 0) + printed_length((*a.bodies)[i]);
  } else {
    upd += var_decl_list(a.outputs).size() + 3 + printed_length(a.rel);
  }
  if (a.pre.is_true()) return upd;
  return upd + ins + printed_length(a.pre) + 10;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

using detail::Tok;

class CptParser {
public:
  CptParser(std::string_view text, const Resolver &resolve) : p_(text), resolve_(resolve) {}

  CptTerm run() {
    CptTerm t = seq();
    if (!p_.at_end()) p_.fail(p_.peek(), "unexpected trailing input");
    return t;
  }

private:
  CptTerm seq() {
    CptTerm t = par();
    while (p_.accept(Tok::Semi)) t = CptTerm::serial(t, par());
    return t;
  }

  CptTerm par() {
    CptTerm t = unary();
    while (p_.accept(Tok::ParBar)) t = CptTerm::parallel(t, unary());
    return t;
  }

  bool sort_ahead() const {
    const auto &t = p_.peek(1);
    if (p_.peek().kind != Tok::Colon || t.kind != Tok::Ident || !parse_sort(t.text)) return false;
    switch (p_.peek(2).kind) {
    case Tok::Comma:
    case Tok::Colon:
    case Tok::RBracket:
    case Tok::RBrace:
    case Tok::Arrow: return true;
    default: return false;
    }
  }

  VarList var_list() {
    VarList out;
    if (p_.peek().kind == Tok::LParen && p_.peek(1).kind == Tok::RParen) {
      p_.next();
      p_.next();
      return out;
    }
    do {
      auto id = p_.expect(Tok::Ident, "a port name");
      Var v{id.text, Sort::Real};
      if (sort_ahead()) {
        p_.next();
        v.sort = p_.parse_sort_name();
      }
      out.push_back(v);
    } while (p_.accept(Tok::Comma));
    return out;
  }

  static std::map<std::string, Sort> scope_of(const VarList &a, const VarList &b = {}) {
    std::map<std::string, Sort> s;
    for (const auto &v : a) s[v.name] = v.sort;
    for (const auto &v : b) s[v.name] = v.sort;
    return s;
  }

  bool var_list_then_colon() {
    // Lookahead: `ident (:Sort)? (, ident (:Sort)?)* :` or `() :`.
    std::size_t k = 0;
    if (p_.peek(0).kind == Tok::LParen && p_.peek(1).kind == Tok::RParen) return p_.peek(2).kind == Tok::Colon;
    for (;;) {
      if (p_.peek(k).kind != Tok::Ident) return false;
      ++k;
      if (p_.peek(k).kind == Tok::Colon && p_.peek(k + 1).kind == Tok::Ident && parse_sort(p_.peek(k + 1).text) &&
          p_.peek(k + 2).kind != Tok::RBracket)
        k += 2;
      if (p_.peek(k).kind == Tok::Comma) {
        ++k;
        continue;
      }
      return p_.peek(k).kind == Tok::Colon;
    }
  }

  std::string raw_args() {
    auto open = p_.expect(Tok::LParen, "'('");
    int depth = 1;
    std::size_t end = open.end;
    while (depth > 0) {
      auto t = p_.next();
      if (t.kind == Tok::End) p_.fail(t, "unbalanced parentheses");
      if (t.kind == Tok::LParen) ++depth;
      if (t.kind == Tok::RParen) --depth;
      end = t.pos;
    }
    std::string raw(p_.source().substr(open.end, end - open.end));
    std::string compact;
    for (char c : raw)
      if (!std::isspace(static_cast<unsigned char>(c))) compact += c;
    return compact;
  }

  CptTerm unary() {
    const auto &t = p_.peek();
    switch (t.kind) {
    case Tok::LParen: {
      p_.next();
      CptTerm inner = seq();
      p_.expect(Tok::RParen, "')'");
      return inner;
    }
    case Tok::LBrace: {
      p_.next();
      VarList ins = var_list();
      p_.expect(Tok::Colon, "':' in assertion");
      Expr pred = p_.parse_expr(scope_of(ins));
      p_.expect(Tok::RBrace, "'}'");
      return CptTerm::assert_(ins, pred);
    }
    case Tok::LBracket: {
      p_.next();
      VarList ins = var_list();
      p_.expect(Tok::Arrow, "'->'");
      if (var_list_then_colon()) {
        VarList outs = var_list();
        p_.expect(Tok::Colon, "':'");
        Expr rel = p_.parse_expr(scope_of(ins, outs));
        p_.expect(Tok::RBracket, "']'");
        return CptTerm::update_rel(ins, outs, rel);
      }
      std::vector<Expr> bodies;
      if (p_.peek().kind == Tok::LParen && p_.peek(1).kind == Tok::RParen && p_.peek(2).kind == Tok::RBracket) {
        p_.next();
        p_.next();
      } else {
        do bodies.push_back(p_.parse_expr(scope_of(ins)));
        while (p_.accept(Tok::Comma));
      }
      p_.expect(Tok::RBracket, "']'");
      return CptTerm::update_func(ins, std::move(bodies));
    }
    case Tok::Ident: {
      if (t.text == "feedback" && p_.peek(1).kind == Tok::LParen) {
        p_.next();
        p_.next();
        CptTerm inner = seq();
        p_.expect(Tok::RParen, "')'");
        return CptTerm::feedback(inner);
      }
      if (t.text == "Id") {
        bool args = p_.glued_paren();
        p_.next();
        if (!args) return CptTerm::id({Sort::Real});
        p_.next();
        std::vector<Sort> sorts;
        if (!p_.accept(Tok::RParen)) {
          do sorts.push_back(p_.parse_sort_name());
          while (p_.accept(Tok::Comma));
          p_.expect(Tok::RParen, "')'");
        }
        return CptTerm::id(std::move(sorts));
      }
      bool args = p_.glued_paren();
      auto id = p_.next();
      std::string name = id.text;
      if (args) name += "(" + raw_args() + ")";
      std::optional<CptTerm> target = resolve_ ? resolve_(name) : std::nullopt;
      if (!target) throw Error(ErrorCode::UnresolvedRef, "'" + name + "'");
      return CptTerm::named(name, target->signature());
    }
    default: p_.fail(t, "expected a transformer term");
    }
  }

  detail::Parser p_;
  const Resolver &resolve_;
};

} // namespace

CptTerm parse_cpt(std::string_view text, const Resolver &resolve) {
  CptParser p(text, resolve);
  return p.run();
}

// ---------------------------------------------------------------------------
// JSON and queries

namespace {

nlohmann::json vars_json(const VarList &vs) {
  auto arr = nlohmann::json::array();
  for (const auto &v : vs) arr.push_back({{"name", v.name}, {"sort", std::string(sort_name(v.sort))}});
  return arr;
}

} // namespace

nlohmann::json to_json(const CptTerm &t) {
  using nlohmann::json;
  switch (t.kind()) {
  case CptKind::Assert: return {{"kind", "Assert"}, {"inputs", vars_json(t.inputs())}, {"pred", to_string(t.formula())}};
  case CptKind::UpdateRel:
    return {{"kind", "UpdateRel"},
            {"inputs", vars_json(t.inputs())},
            {"outputs", vars_json(t.outputs())},
            {"rel", to_string(t.formula())}};
  case CptKind::UpdateFunc: {
    auto bodies = json::array();
    for (const auto &b : t.bodies()) bodies.push_back(to_string(b));
    return {{"kind", "UpdateFunc"}, {"inputs", vars_json(t.inputs())}, {"bodies", bodies}};
  }
  case CptKind::Id: {
    auto sorts = json::array();
    for (auto s : t.in_sorts()) sorts.push_back(std::string(sort_name(s)));
    return {{"kind", "Id"}, {"sorts", sorts}};
  }
  case CptKind::Serial: return {{"kind", "Serial"}, {"left", to_json(t.left())}, {"right", to_json(t.right())}};
  case CptKind::Parallel: return {{"kind", "Parallel"}, {"left", to_json(t.left())}, {"right", to_json(t.right())}};
  case CptKind::Feedback: return {{"kind", "Feedback"}, {"body", to_json(t.body())}};
  case CptKind::NamedRef: return {{"kind", "NamedRef"}, {"name", t.name()}};
  }
  return {};
}

nlohmann::json to_json(const AtomicPT &a) {
  nlohmann::json j{{"inputs", vars_json(a.inputs)},
                   {"outputs", vars_json(a.outputs)},
                   {"pre", to_string(a.pre)},
                   {"rel", to_string(a.rel)},
                   {"text", pretty(a)}};
  if (a.bodies) {
    auto bodies = nlohmann::json::array();
    for (const auto &b : *a.bodies) bodies.push_back(to_string(b));
    j["bodies"] = bodies;
  }
  return j;
}

std::uint64_t count_feedbacks(const CptTerm &t) {
  switch (t.kind()) {
  case CptKind::Serial:
  case CptKind::Parallel: return count_feedbacks(t.left()) + count_feedbacks(t.right());
  case CptKind::Feedback: return 1 + count_feedbacks(t.body());
  default: return 0;
  }
}

namespace {

void collect_refs(const CptTerm &t, std::vector<std::string> &out) {
  switch (t.kind()) {
  case CptKind::Serial:
  case CptKind::Parallel:
    collect_refs(t.left(), out);
    collect_refs(t.right(), out);
    return;
  case CptKind::Feedback: collect_refs(t.body(), out); return;
  case CptKind::NamedRef:
    if (std::find(out.begin(), out.end(), t.name()) == out.end()) out.push_back(t.name());
    return;
  default: return;
  }
}

} // namespace

std::vector<std::string> named_refs(const CptTerm &t) {
  std::vector<std::string> out;
  collect_refs(t, out);
  return out;
}

std::map<std::string, std::string> short_names(const std::set<std::string> &names) {
  std::map<std::string, std::string> out;
  for (const auto &n : names) {
    std::string pick = n;
    // Try suffixes from the last dotted component outwards.
    for (auto pos = n.rfind('.'); pos != std::string::npos; pos = pos == 0 ? std::string::npos : n.rfind('.', pos - 1)) {
      std::string c = n.substr(pos + 1);
      bool clash = false;
      for (const auto &m : names)
        if (m != n && (m == c || (m.size() > c.size() && m.compare(m.size() - c.size(), c.size(), c) == 0 &&
                                  m[m.size() - c.size() - 1] == '.'))) {
          clash = true;
          break;
        }
      if (!clash) {
        pick = c;
        break;
      }
    }
    out.emplace(n, pick);
  }
  return out;
}

namespace {

VarList rename_list(const VarList &vs, const std::map<std::string, std::string> &names) {
  VarList out;
  for (const auto &v : vs) {
    auto it = names.find(v.name);
    out.push_back(it == names.end() ? v : Var{it->second, v.sort});
  }
  return out;
}

std::map<Var, Var> var_map(const VarList &a, const VarList &b) {
  std::map<Var, Var> m;
  for (std::size_t i = 0; i < a.size(); ++i) m.emplace(a[i], b[i]);
  return m;
}

void collect_ports(const CptTerm &t, std::set<std::string> &out) {
  switch (t.kind()) {
  case CptKind::Serial:
  case CptKind::Parallel:
    collect_ports(t.left(), out);
    collect_ports(t.right(), out);
    return;
  case CptKind::Feedback: collect_ports(t.body(), out); return;
  case CptKind::Assert:
  case CptKind::UpdateRel:
  case CptKind::UpdateFunc:
    for (const auto &v : t.inputs()) out.insert(v.name);
    for (const auto &v : t.outputs()) out.insert(v.name);
    return;
  default: return;
  }
}

} // namespace

std::set<std::string> port_names(const CptTerm &t) {
  std::set<std::string> out;
  collect_ports(t, out);
  return out;
}

CptTerm rename_ports(const CptTerm &t, const std::map<std::string, std::string> &names) {
  switch (t.kind()) {
  case CptKind::Serial: return CptTerm::serial(rename_ports(t.left(), names), rename_ports(t.right(), names));
  case CptKind::Parallel: return CptTerm::parallel(rename_ports(t.left(), names), rename_ports(t.right(), names));
  case CptKind::Feedback: return CptTerm::feedback(rename_ports(t.body(), names));
  case CptKind::Assert: {
    VarList in = rename_list(t.inputs(), names);
    return CptTerm::assert_(in, rename(t.formula(), var_map(t.inputs(), in)));
  }
  case CptKind::UpdateRel: {
    VarList in = rename_list(t.inputs(), names), out = rename_list(t.outputs(), names);
    auto m = var_map(t.inputs(), in);
    for (auto &[k, v] : var_map(t.outputs(), out)) m.emplace(k, v);
    return CptTerm::update_rel(in, out, rename(t.formula(), m));
  }
  case CptKind::UpdateFunc: {
    VarList in = rename_list(t.inputs(), names), out = rename_list(t.outputs(), names);
    auto m = var_map(t.inputs(), in);
    std::vector<Expr> bodies;
    for (const auto &b : t.bodies()) bodies.push_back(rename(b, m));
    return CptTerm::update_func(in, out, bodies);
  }
  default: return t;
  }
}

AtomicPT rename_ports(const AtomicPT &a, const std::map<std::string, std::string> &names) {
  VarList in = rename_list(a.inputs, names), out = rename_list(a.outputs, names);
  auto m = var_map(a.inputs, in);
  for (auto &[k, v] : var_map(a.outputs, out)) m.emplace(k, v);
  AtomicPT r = a;
  r.inputs = in;
  r.outputs = out;
  r.pre = rename(a.pre, m);
  r.rel = rename(a.rel, m);
  if (a.bodies) {
    r.bodies->clear();
    for (const auto &b : *a.bodies) r.bodies->push_back(rename(b, m));
  }
  return r;
}

} // namespace hbdpt
