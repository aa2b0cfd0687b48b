#pragma once

#include <compare>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "codp/errors.hpp"

namespace codp::dsl {

/// Raised for malformed text; carries a 1-based source location.
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& msg, int line, int column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": syntax error: " + msg),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Raised for well-formed text that does not describe a valid diagram
/// (unknown names, duplicates, unit or poset mismatches, unannotated cycles).
class TypeCheckError : public Error {
 public:
  TypeCheckError(const std::string& msg, int line = 0)
      : Error(line > 0 ? std::to_string(line) + ": type error: " + msg : "type error: " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Literal: number, `top`, bare identifier, or quoted string.
struct Value {
  enum class Kind { number, top, ident, string };
  Kind kind = Kind::number;
  double number = 0;
  std::string text;

  static Value num(double v) { return {Kind::number, v, {}}; }
  static Value top() { return {Kind::top, 0, {}}; }
  static Value ident(std::string s) { return {Kind::ident, 0, std::move(s)}; }
  static Value str(std::string s) { return {Kind::string, 0, std::move(s)}; }

  friend bool operator==(const Value&, const Value&) = default;
  friend auto operator<=>(const Value&, const Value&) = default;
};

/// Port or poset type: inline `real "unit"` or a reference to a declared poset.
struct TypeExpr {
  enum class Kind { real, named };
  Kind kind = Kind::real;
  std::string text;  // unit for real, poset name for named

  friend bool operator==(const TypeExpr&, const TypeExpr&) = default;
};

struct PosetDecl {
  std::string name;
  enum class Kind { real, discrete };
  Kind kind = Kind::real;
  std::string unit;
  std::vector<std::string> labels;
  std::vector<std::pair<std::string, std::string>> order;  // a < b
  int line = 0;

  bool operator==(const PosetDecl& o) const {
    return name == o.name && kind == o.kind && unit == o.unit && labels == o.labels && order == o.order;
  }
};

struct Port {
  std::string name;
  TypeExpr type;
  friend bool operator==(const Port&, const Port&) = default;
};

struct Call {
  std::string component;
  std::vector<std::pair<std::string, Value>> args;
  friend bool operator==(const Call&, const Call&) = default;

  const Value* arg(const std::string& key) const {
    for (const auto& [k, v] : args)
      if (k == key) return &v;
    return nullptr;
  }
};

struct Binding {
  enum class Kind { mdpi, call, union_, intersection };
  Kind kind = Kind::mdpi;
  Call call;                                         // Kind::call
  std::vector<std::pair<std::string, Call>> branches;  // union / intersection, labelled
  friend bool operator==(const Binding&, const Binding&) = default;
};

struct NodeDecl {
  std::string name;
  std::vector<Port> fun;
  std::vector<Port> res;
  Binding binding;
  int line = 0;

  bool operator==(const NodeDecl& o) const {
    return name == o.name && fun == o.fun && res == o.res && binding == o.binding;
  }
};

struct PortRef {
  std::string node;
  std::string port;
  friend bool operator==(const PortRef&, const PortRef&) = default;
  friend auto operator<=>(const PortRef&, const PortRef&) = default;
  std::string to_string() const { return node + "." + port; }
};

struct ImplDecl {
  std::string node;
  std::string id;
  std::vector<Value> prov;
  std::vector<Value> reqs;
  int line = 0;

  bool operator==(const ImplDecl& o) const {
    return node == o.node && id == o.id && prov == o.prov && reqs == o.reqs;
  }
};

/// Resource port `from` feeds functionality port `to`.
struct EdgeDecl {
  PortRef from;
  PortRef to;
  int line = 0;

  bool operator==(const EdgeDecl& o) const { return from == o.from && to == o.to; }
  bool operator<(const EdgeDecl& o) const { return std::tie(from, to) < std::tie(o.from, o.to); }
};

/// Edges closed by feedback.
struct LoopDecl {
  std::vector<EdgeDecl> edges;
  int line = 0;
  bool operator==(const LoopDecl& o) const { return edges == o.edges; }
};

struct ParamDecl {
  std::string name;
  enum class Kind { kernel, function };
  Kind kind = Kind::kernel;
  Call call;
  std::vector<std::string> targets;
  int line = 0;

  bool operator==(const ParamDecl& o) const {
    return name == o.name && kind == o.kind && call == o.call && targets == o.targets;
  }
};

struct QueryDecl {
  PortRef port;
  Value value;
  int line = 0;
  bool operator==(const QueryDecl& o) const { return port == o.port && value == o.value; }
};

/// A parsed diagram. Statements are kept in canonical order (see canonicalize),
/// so two texts describing the same diagram produce equal ASTs.
struct DiagramAST {
  std::vector<PosetDecl> posets;
  std::vector<NodeDecl> nodes;
  std::vector<ImplDecl> impls;
  std::vector<EdgeDecl> edges;
  std::vector<LoopDecl> loops;
  std::vector<ParamDecl> params;
  std::vector<QueryDecl> queries;

  bool operator==(const DiagramAST& o) const {
    return posets == o.posets && nodes == o.nodes && impls == o.impls && edges == o.edges && loops == o.loops &&
           params == o.params && queries == o.queries;
  }

  const NodeDecl* find_node(const std::string& name) const;
};

/// Sorts every statement list by name/key; node ports keep declaration order.
void canonicalize(DiagramAST& ast);

/// Parses .codp text. Throws SyntaxError.
DiagramAST parse(const std::string& text);
/// Canonical text; parse(format(ast)) == ast.
std::string format(const DiagramAST& ast);
std::string format_value(const Value& v);

}  // namespace codp::dsl
