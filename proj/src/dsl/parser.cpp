#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

#include "codp/dsl/ast.hpp"

namespace codp::dsl {

namespace {

enum class Tok { ident, number, string, punct, newline, end };

struct Token {
  Tok kind;
  std::string text;
  double number = 0;
  int line = 1;
  int column = 1;
};

const std::set<std::string> kKeywords = {"poset", "node", "impl", "edge", "loop", "param", "query"};

/// Newlines end statements, except inside brackets or after a comma.
std::vector<Token> lex(const std::string& src) {
  std::vector<Token> out;
  int line = 1, col = 1, depth = 0;
  std::size_t i = 0;
  auto advance = [&](std::size_t n = 1) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto push = [&](Tok kind, std::string text, int l, int c, double num = 0) {
    out.push_back({kind, std::move(text), num, l, c});
  };
  while (i < src.size()) {
    const char ch = src[i];
    const int l = line, c = col;
    if (ch == '#') {
      while (i < src.size() && src[i] != '\n') advance();
      continue;
    }
    if (ch == '\n') {
      bool continued = depth > 0 || (!out.empty() && out.back().kind == Tok::punct && out.back().text == ",");
      if (!continued && !out.empty() && out.back().kind != Tok::newline) push(Tok::newline, "\\n", l, c);
      advance();
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      advance();
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      push(Tok::ident, src.substr(i, j - i), l, c);
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(ch)) ||
        ((ch == '-' || ch == '.') && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i + (ch == '-' ? 1 : 0);
      while (j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.')) ++j;
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          j = k;
          while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
        }
      }
      double v = 0;
      auto [p, ec] = std::from_chars(src.data() + i, src.data() + j, v);
      if (ec != std::errc() || p != src.data() + j)
        throw SyntaxError("malformed number '" + src.substr(i, j - i) + "'", l, c);
      push(Tok::number, src.substr(i, j - i), l, c, v);
      advance(j - i);
      continue;
    }
    if (ch == '"') {
      std::string s;
      advance();
      while (true) {
        if (i >= src.size() || src[i] == '\n') throw SyntaxError("unterminated string", l, c);
        if (src[i] == '"') break;
        if (src[i] == '\\' && i + 1 < src.size()) advance();
        s += src[i];
        advance();
      }
      advance();
      push(Tok::string, std::move(s), l, c);
      continue;
    }
    if (ch == '-' && i + 1 < src.size() && src[i + 1] == '>') {
      push(Tok::punct, "->", l, c);
      advance(2);
      continue;
    }
    if (std::string("(){}<,:=.").find(ch) != std::string::npos) {
      if (ch == '(' || ch == '{') ++depth;
      if ((ch == ')' || ch == '}') && depth > 0) --depth;
      push(Tok::punct, std::string(1, ch), l, c);
      advance();
      continue;
    }
    throw SyntaxError(std::string("unexpected character '") + ch + "'", l, c);
  }
  push(Tok::end, "end of input", line, col);
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  DiagramAST run() {
    DiagramAST ast;
    while (peek().kind != Tok::end) {
      if (peek().kind == Tok::newline) {
        next();
        continue;
      }
      const Token& kw = peek();
      if (kw.kind != Tok::ident || !kKeywords.count(kw.text))
        fail("expected a statement keyword (poset, node, impl, edge, loop, param, query)");
      const std::string k = next().text;
      const int line = kw.line;
      if (k == "poset") {
        ast.posets.push_back(poset(line));
      } else if (k == "node") {
        ast.nodes.push_back(node(line));
      } else if (k == "impl") {
        ast.impls.push_back(impl(line));
      } else if (k == "edge") {
        ast.edges.push_back(edge(line));
      } else if (k == "loop") {
        LoopDecl l{{}, line};
        do l.edges.push_back(edge(line));
        while (accept(","));
        ast.loops.push_back(std::move(l));
      } else if (k == "param") {
        ast.params.push_back(param(line));
      } else {
        QueryDecl q;
        q.line = line;
        q.port = port_ref();
        expect("=");
        q.value = value(false);
        ast.queries.push_back(std::move(q));
      }
      end_statement();
    }
    canonicalize(ast);
    return ast;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = peek();
    std::string got = t.kind == Tok::newline ? "end of line" : t.kind == Tok::string ? "\"" + t.text + "\"" : t.text;
    throw SyntaxError(msg + ", got '" + got + "'", t.line, t.column);
  }

  bool accept(const char* p) {
    if (peek().kind == Tok::punct && peek().text == p) {
      next();
      return true;
    }
    return false;
  }

  void expect(const char* p) {
    if (!accept(p)) fail(std::string("expected '") + p + "'");
  }

  bool accept_word(const char* w) {
    if (peek().kind == Tok::ident && peek().text == w) {
      next();
      return true;
    }
    return false;
  }

  std::string ident(const char* what) {
    if (peek().kind != Tok::ident || kKeywords.count(peek().text)) fail(std::string("expected ") + what);
    return next().text;
  }

  std::string qualified(const char* what) {
    std::string s = ident(what);
    while (accept(".")) s += "." + ident(what);
    return s;
  }

  void end_statement() {
    if (peek().kind == Tok::end) return;
    if (peek().kind != Tok::newline) fail("expected end of statement");
    next();
  }

  PortRef port_ref() {
    PortRef r;
    r.node = ident("node name");
    expect(".");
    r.port = ident("port name");
    return r;
  }

  EdgeDecl edge(int line) {
    EdgeDecl e;
    e.line = line;
    e.from = port_ref();
    expect("->");
    e.to = port_ref();
    return e;
  }

  Value value(bool allow_string) {
    const Token& t = peek();
    if (t.kind == Tok::number) return Value::num(next().number);
    if (t.kind == Tok::string && allow_string) return Value::str(next().text);
    if (t.kind == Tok::ident && !kKeywords.count(t.text)) {
      std::string s = next().text;
      return s == "top" ? Value::top() : Value::ident(std::move(s));
    }
    fail(allow_string ? "expected a value" : "expected a number, 'top' or a label");
  }

  std::vector<Value> value_tuple() {
    std::vector<Value> out;
    expect("(");
    if (!accept(")")) {
      do out.push_back(value(false));
      while (accept(","));
      expect(")");
    }
    return out;
  }

  TypeExpr type() {
    if (accept_word("real")) {
      if (peek().kind != Tok::string) fail("expected a quoted unit after 'real'");
      return {TypeExpr::Kind::real, next().text};
    }
    return {TypeExpr::Kind::named, ident("a type ('real \"unit\"' or a poset name)")};
  }

  std::vector<Port> ports() {
    std::vector<Port> out;
    expect("(");
    if (accept(")")) return out;
    do {
      Port p;
      p.name = ident("port name");
      expect(":");
      p.type = type();
      out.push_back(std::move(p));
    } while (accept(","));
    expect(")");
    return out;
  }

  Call call() {
    Call c;
    c.component = qualified("component name");
    expect("(");
    if (!accept(")")) {
      do {
        std::string key = ident("argument name");
        expect("=");
        c.args.emplace_back(std::move(key), value(true));
      } while (accept(","));
      expect(")");
    }
    return c;
  }

  PosetDecl poset(int line) {
    PosetDecl p;
    p.line = line;
    p.name = ident("poset name");
    expect("=");
    if (accept_word("real")) {
      p.kind = PosetDecl::Kind::real;
      if (peek().kind != Tok::string) fail("expected a quoted unit after 'real'");
      p.unit = next().text;
      return p;
    }
    if (!accept_word("discrete")) fail("expected 'real' or 'discrete'");
    p.kind = PosetDecl::Kind::discrete;
    expect("{");
    do p.labels.push_back(ident("label"));
    while (accept(","));
    expect("}");
    if (accept_word("order")) {
      expect("{");
      if (!accept("}")) {
        do {
          std::string a = ident("label");
          expect("<");
          p.order.emplace_back(std::move(a), ident("label"));
        } while (accept(","));
        expect("}");
      }
    }
    return p;
  }

  NodeDecl node(int line) {
    NodeDecl n;
    n.line = line;
    n.name = ident("node name");
    n.fun = ports();
    expect("->");
    n.res = ports();
    expect("=");
    if (accept_word("mdpi")) {
      n.binding.kind = Binding::Kind::mdpi;
    } else if (peek().kind == Tok::ident && (peek().text == "union" || peek().text == "intersection")) {
      n.binding.kind = next().text == "union" ? Binding::Kind::union_ : Binding::Kind::intersection;
      do {
        std::string label = ident("branch label");
        expect(":");
        n.binding.branches.emplace_back(std::move(label), call());
      } while (accept(","));
    } else {
      n.binding.kind = Binding::Kind::call;
      n.binding.call = call();
    }
    return n;
  }

  ImplDecl impl(int line) {
    ImplDecl d;
    d.line = line;
    d.node = ident("node name");
    expect(".");
    d.id = ident("implementation id");
    expect(":");
    d.prov = value_tuple();
    expect("->");
    d.reqs = value_tuple();
    return d;
  }

  ParamDecl param(int line) {
    ParamDecl p;
    p.line = line;
    p.name = ident("parameter name");
    expect("=");
    if (accept_word("kernel"))
      p.kind = ParamDecl::Kind::kernel;
    else if (accept_word("function"))
      p.kind = ParamDecl::Kind::function;
    else
      fail("expected 'kernel' or 'function'");
    p.call = call();
    expect("->");
    do p.targets.push_back(ident("node name"));
    while (accept(","));
    return p;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

const NodeDecl* DiagramAST::find_node(const std::string& name) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), name,
                             [](const NodeDecl& n, const std::string& k) { return n.name < k; });
  if (it != nodes.end() && it->name == name) return &*it;
  for (const auto& n : nodes)
    if (n.name == name) return &n;
  return nullptr;
}

void canonicalize(DiagramAST& ast) {
  auto by_name = [](const auto& a, const auto& b) { return a.name < b.name; };
  std::stable_sort(ast.posets.begin(), ast.posets.end(), by_name);
  std::stable_sort(ast.nodes.begin(), ast.nodes.end(), by_name);
  for (auto& n : ast.nodes) {
    std::stable_sort(n.binding.call.args.begin(), n.binding.call.args.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [label, c] : n.binding.branches)
      std::stable_sort(c.args.begin(), c.args.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  std::stable_sort(ast.impls.begin(), ast.impls.end(), [](const ImplDecl& a, const ImplDecl& b) {
    return std::tie(a.node, a.id) < std::tie(b.node, b.id);
  });
  std::stable_sort(ast.edges.begin(), ast.edges.end());
  for (auto& l : ast.loops) std::stable_sort(l.edges.begin(), l.edges.end());
  std::stable_sort(ast.loops.begin(), ast.loops.end(), [](const LoopDecl& a, const LoopDecl& b) {
    return std::lexicographical_compare(a.edges.begin(), a.edges.end(), b.edges.begin(), b.edges.end());
  });
  for (auto& p : ast.params) {
    std::sort(p.targets.begin(), p.targets.end());
    std::stable_sort(p.call.args.begin(), p.call.args.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  std::stable_sort(ast.params.begin(), ast.params.end(), by_name);
  std::stable_sort(ast.queries.begin(), ast.queries.end(),
                   [](const QueryDecl& a, const QueryDecl& b) { return a.port < b.port; });
}

DiagramAST parse(const std::string& text) { return Parser(lex(text)).run(); }

}  // namespace codp::dsl
