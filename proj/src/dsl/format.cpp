#include <charconv>
#include <sstream>

#include "codp/dsl/ast.hpp"

namespace codp::dsl {

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string type_text(const TypeExpr& t) { return t.kind == TypeExpr::Kind::real ? "real " + quote(t.text) : t.text; }

std::string ports_text(const std::vector<Port>& ps) {
  std::string out = "(";
  for (std::size_t i = 0; i < ps.size(); ++i) out += (i ? ", " : "") + ps[i].name + ": " + type_text(ps[i].type);
  return out + ")";
}

std::string call_text(const Call& c) {
  std::string out = c.component + "(";
  for (std::size_t i = 0; i < c.args.size(); ++i)
    out += (i ? ", " : "") + c.args[i].first + "=" + format_value(c.args[i].second);
  return out + ")";
}

std::string tuple_text(const std::vector<Value>& vs) {
  std::string out = "(";
  for (std::size_t i = 0; i < vs.size(); ++i) out += (i ? ", " : "") + format_value(vs[i]);
  return out + ")";
}

std::string edge_text(const EdgeDecl& e) { return e.from.to_string() + " -> " + e.to.to_string(); }

}  // namespace

std::string format_value(const Value& v) {
  switch (v.kind) {
    case Value::Kind::number: {
      char buf[64];
      auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v.number);
      return std::string(buf, p);
    }
    case Value::Kind::top:
      return "top";
    case Value::Kind::ident:
      return v.text;
    case Value::Kind::string:
      return quote(v.text);
  }
  return {};
}

std::string format(const DiagramAST& ast_in) {
  DiagramAST ast = ast_in;
  canonicalize(ast);
  std::ostringstream os;
  bool first_section = true;
  auto section = [&](bool nonempty) {
    if (!nonempty) return false;
    if (!first_section) os << '\n';
    first_section = false;
    return true;
  };

  if (section(!ast.posets.empty()))
    for (const auto& p : ast.posets) {
      os << "poset " << p.name << " = ";
      if (p.kind == PosetDecl::Kind::real) {
        os << "real " << quote(p.unit) << '\n';
        continue;
      }
      os << "discrete {";
      for (std::size_t i = 0; i < p.labels.size(); ++i) os << (i ? ", " : "") << p.labels[i];
      os << '}';
      if (!p.order.empty()) {
        os << " order {";
        for (std::size_t i = 0; i < p.order.size(); ++i)
          os << (i ? ", " : "") << p.order[i].first << " < " << p.order[i].second;
        os << '}';
      }
      os << '\n';
    }

  if (section(!ast.nodes.empty()))
    for (const auto& n : ast.nodes) {
      os << "node " << n.name << ports_text(n.fun) << " -> " << ports_text(n.res) << " = ";
      switch (n.binding.kind) {
        case Binding::Kind::mdpi:
          os << "mdpi";
          break;
        case Binding::Kind::call:
          os << call_text(n.binding.call);
          break;
        case Binding::Kind::union_:
        case Binding::Kind::intersection:
          os << (n.binding.kind == Binding::Kind::union_ ? "union" : "intersection");
          for (std::size_t i = 0; i < n.binding.branches.size(); ++i)
            os << (i ? ",\n    " : " ") << n.binding.branches[i].first << ": " << call_text(n.binding.branches[i].second);
          break;
      }
      os << '\n';
    }

  if (section(!ast.impls.empty()))
    for (const auto& d : ast.impls)
      os << "impl " << d.node << '.' << d.id << ": " << tuple_text(d.prov) << " -> " << tuple_text(d.reqs) << '\n';

  if (section(!ast.edges.empty()))
    for (const auto& e : ast.edges) os << "edge " << edge_text(e) << '\n';

  if (section(!ast.loops.empty()))
    for (const auto& l : ast.loops) {
      os << "loop ";
      for (std::size_t i = 0; i < l.edges.size(); ++i) os << (i ? ", " : "") << edge_text(l.edges[i]);
      os << '\n';
    }

  if (section(!ast.params.empty()))
    for (const auto& p : ast.params) {
      os << "param " << p.name << " = " << (p.kind == ParamDecl::Kind::kernel ? "kernel " : "function ")
         << call_text(p.call) << " -> ";
      for (std::size_t i = 0; i < p.targets.size(); ++i) os << (i ? ", " : "") << p.targets[i];
      os << '\n';
    }

  if (section(!ast.queries.empty()))
    for (const auto& q : ast.queries) os << "query " << q.port.to_string() << " = " << format_value(q.value) << '\n';

  return os.str();
}

}  // namespace codp::dsl
