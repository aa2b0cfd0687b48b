#include "codp/io/json.hpp"

#include <charconv>
#include <cmath>

namespace codp::io {

using namespace codp::dsl;

std::string number(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

Json to_json(const Element& e) {
  if (e.is_top()) return "top";
  if (e.is_scalar()) return e.as_scalar();
  if (e.is_label()) return e.as_label();
  Json arr = Json::array();
  for (const auto& x : e.items()) arr.push_back(to_json(x));
  return arr;
}

Element element_from_json(const Poset& p, const Json& j) {
  switch (p.kind()) {
    case Poset::Kind::nonneg_real:
      if (j == "top") return Element::top();
      if (!j.is_number()) throw DomainError("expected a number or \"top\" for " + p.to_string());
      return scalar(j.get<double>());
    case Poset::Kind::discrete:
      if (!j.is_string()) throw DomainError("expected a label of " + p.to_string());
      return label(j.get<std::string>());
    case Poset::Kind::opposite:
      return element_from_json(p.inner(), j);
    case Poset::Kind::product: {
      const auto& cs = p.components();
      if (!j.is_array() || j.size() != cs.size())
        throw DomainError("expected an array of " + std::to_string(cs.size()) + " for " + p.to_string());
      Element::Tuple items;
      for (std::size_t i = 0; i < cs.size(); ++i) items.push_back(element_from_json(cs[i], j[i]));
      return Element::tuple(std::move(items));
    }
  }
  throw DomainError("unsupported poset");
}

Json to_json(const Poset& p) {
  switch (p.kind()) {
    case Poset::Kind::nonneg_real:
      return {{"kind", "real"}, {"units", p.units()}};
    case Poset::Kind::discrete: {
      const auto& ls = p.labels();
      Json order = Json::array();
      for (int i = 0; i < static_cast<int>(ls.size()); ++i)
        for (int j = 0; j < static_cast<int>(ls.size()); ++j)
          if (i != j && p.discrete_leq(i, j)) order.push_back({ls[i], ls[j]});
      return {{"kind", "discrete"}, {"labels", ls}, {"order", order}};
    }
    case Poset::Kind::product: {
      Json cs = Json::array();
      for (const auto& c : p.components()) cs.push_back(to_json(c));
      return {{"kind", "product"}, {"components", cs}};
    }
    case Poset::Kind::opposite:
      return {{"kind", "opposite"}, {"inner", to_json(p.inner())}};
  }
  throw std::logic_error("poset kind");
}

Poset poset_from_json(const Json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "real") return Poset::nonneg_real(j.value("units", std::string{}));
    if (kind == "discrete") {
      std::vector<std::pair<std::string, std::string>> order;
      for (const auto& pr : j.value("order", Json::array()))
        order.emplace_back(pr.at(0).get<std::string>(), pr.at(1).get<std::string>());
      return Poset::discrete(j.at("labels").get<std::vector<std::string>>(), order);
    }
    if (kind == "product") {
      std::vector<Poset> cs;
      for (const auto& c : j.at("components")) cs.push_back(poset_from_json(c));
      return Poset::product(std::move(cs));
    }
    if (kind == "opposite") return Poset::opposite(poset_from_json(j.at("inner")));
    throw DomainError("unknown poset kind \"" + kind + "\"");
  } catch (const Json::exception& e) {
    throw DomainError(std::string("malformed poset JSON: ") + e.what());
  }
}

Antichain antichain_from_json(const Poset& p, const Json& j) {
  if (!j.is_array()) throw DomainError("expected an array of elements");
  std::vector<Element> xs;
  for (const auto& e : j) xs.push_back(element_from_json(p, e));
  return minimals(p, xs);
}

Json to_json(const Antichain& a) {
  Json arr = Json::array();
  for (const auto& e : a) arr.push_back(to_json(e));
  return arr;
}

Json to_json(const Estimate& e) {
  return {{"p_hat", e.p_hat}, {"ci_lo", e.ci_lo}, {"ci_hi", e.ci_hi}, {"n", e.n}, {"root_seed", e.root_seed}};
}

// -- AST ------------------------------------------------------------------------

namespace {

Json value_json(const Value& v) {
  switch (v.kind) {
    case Value::Kind::number: return v.number;
    case Value::Kind::top: return Json{{"top", true}};
    case Value::Kind::ident: return Json{{"ident", v.text}};
    case Value::Kind::string: return Json{{"string", v.text}};
  }
  return nullptr;
}

Value value_from(const Json& j) {
  if (j.is_number()) return Value::num(j.get<double>());
  if (j.is_object()) {
    if (j.contains("top")) return Value::top();
    if (j.contains("ident")) return Value::ident(j.at("ident").get<std::string>());
    if (j.contains("string")) return Value::str(j.at("string").get<std::string>());
  }
  throw DomainError("bad value " + j.dump());
}

Json call_json(const Call& c) {
  Json args = Json::array();
  for (const auto& [k, v] : c.args) args.push_back({{"name", k}, {"value", value_json(v)}});
  return {{"component", c.component}, {"args", args}};
}

Call call_from(const Json& j) {
  Call c;
  c.component = j.at("component").get<std::string>();
  for (const auto& a : j.at("args")) c.args.emplace_back(a.at("name").get<std::string>(), value_from(a.at("value")));
  return c;
}

Json ports_json(const std::vector<Port>& ps) {
  Json arr = Json::array();
  for (const auto& p : ps) {
    Json t = p.type.kind == TypeExpr::Kind::real ? Json{{"kind", "real"}, {"unit", p.type.text}}
                                                 : Json{{"kind", "named"}, {"poset", p.type.text}};
    arr.push_back({{"name", p.name}, {"type", t}});
  }
  return arr;
}

std::vector<Port> ports_from(const Json& j) {
  std::vector<Port> out;
  for (const auto& p : j) {
    const Json& t = p.at("type");
    const bool real = t.at("kind") == "real";
    out.push_back({p.at("name").get<std::string>(),
                   {real ? TypeExpr::Kind::real : TypeExpr::Kind::named,
                    t.at(real ? "unit" : "poset").get<std::string>()}});
  }
  return out;
}

PortRef ref_from(const Json& j) {
  const auto s = j.get<std::string>();
  const auto dot = s.find('.');
  if (dot == std::string::npos) throw DomainError("bad port reference '" + s + "'");
  return {s.substr(0, dot), s.substr(dot + 1)};
}

Json edge_json(const EdgeDecl& e) { return {{"from", e.from.to_string()}, {"to", e.to.to_string()}, {"line", e.line}}; }

EdgeDecl edge_from(const Json& j) { return {ref_from(j.at("from")), ref_from(j.at("to")), j.value("line", 0)}; }

const char* binding_kind(Binding::Kind k) {
  switch (k) {
    case Binding::Kind::mdpi: return "mdpi";
    case Binding::Kind::call: return "call";
    case Binding::Kind::union_: return "union";
    case Binding::Kind::intersection: return "intersection";
  }
  return "";
}

}  // namespace

Json ast_to_json(const DiagramAST& ast) {
  Json out;
  out["format"] = "codp-ast";
  out["version"] = 1;

  Json posets = Json::array();
  for (const auto& p : ast.posets) {
    Json j = {{"name", p.name}, {"kind", p.kind == PosetDecl::Kind::real ? "real" : "discrete"}};
    if (p.kind == PosetDecl::Kind::real) {
      j["unit"] = p.unit;
    } else {
      j["labels"] = p.labels;
      Json order = Json::array();
      for (const auto& [a, b] : p.order) order.push_back({a, b});
      j["order"] = order;
    }
    j["line"] = p.line;
    posets.push_back(j);
  }
  out["posets"] = posets;

  Json nodes = Json::array();
  for (const auto& n : ast.nodes) {
    Json b = {{"kind", binding_kind(n.binding.kind)}};
    if (n.binding.kind == Binding::Kind::call) b["call"] = call_json(n.binding.call);
    if (!n.binding.branches.empty()) {
      Json br = Json::array();
      for (const auto& [lab, c] : n.binding.branches) br.push_back({{"label", lab}, {"call", call_json(c)}});
      b["branches"] = br;
    }
    nodes.push_back({{"name", n.name}, {"fun", ports_json(n.fun)}, {"res", ports_json(n.res)}, {"binding", b},
                     {"line", n.line}});
  }
  out["nodes"] = nodes;

  Json impls = Json::array();
  for (const auto& im : ast.impls) {
    Json prov = Json::array(), reqs = Json::array();
    for (const auto& v : im.prov) prov.push_back(value_json(v));
    for (const auto& v : im.reqs) reqs.push_back(value_json(v));
    impls.push_back({{"node", im.node}, {"id", im.id}, {"provides", prov}, {"requires", reqs}, {"line", im.line}});
  }
  out["impls"] = impls;

  Json edges = Json::array();
  for (const auto& e : ast.edges) edges.push_back(edge_json(e));
  out["edges"] = edges;

  Json loops = Json::array();
  for (const auto& l : ast.loops) {
    Json es = Json::array();
    for (const auto& e : l.edges) es.push_back(edge_json(e));
    loops.push_back({{"edges", es}, {"line", l.line}});
  }
  out["loops"] = loops;

  Json params = Json::array();
  for (const auto& p : ast.params)
    params.push_back({{"name", p.name},
                      {"kind", p.kind == ParamDecl::Kind::kernel ? "kernel" : "function"},
                      {"call", call_json(p.call)},
                      {"targets", p.targets},
                      {"line", p.line}});
  out["params"] = params;

  Json queries = Json::array();
  for (const auto& q : ast.queries)
    queries.push_back({{"port", q.port.to_string()}, {"value", value_json(q.value)}, {"line", q.line}});
  out["queries"] = queries;
  return out;
}

DiagramAST ast_from_json(const Json& j) {
  try {
    if (j.value("format", "") != "codp-ast") throw DomainError("not a codp-ast document");
    DiagramAST ast;
    for (const auto& p : j.at("posets")) {
      PosetDecl d;
      d.name = p.at("name").get<std::string>();
      d.kind = p.at("kind") == "real" ? PosetDecl::Kind::real : PosetDecl::Kind::discrete;
      if (d.kind == PosetDecl::Kind::real) {
        d.unit = p.at("unit").get<std::string>();
      } else {
        d.labels = p.at("labels").get<std::vector<std::string>>();
        for (const auto& o : p.at("order")) d.order.emplace_back(o.at(0).get<std::string>(), o.at(1).get<std::string>());
      }
      d.line = p.value("line", 0);
      ast.posets.push_back(std::move(d));
    }
    for (const auto& n : j.at("nodes")) {
      NodeDecl d;
      d.name = n.at("name").get<std::string>();
      d.fun = ports_from(n.at("fun"));
      d.res = ports_from(n.at("res"));
      const Json& b = n.at("binding");
      const std::string kind = b.at("kind").get<std::string>();
      if (kind == "mdpi") d.binding.kind = Binding::Kind::mdpi;
      else if (kind == "call") d.binding.kind = Binding::Kind::call;
      else if (kind == "union") d.binding.kind = Binding::Kind::union_;
      else if (kind == "intersection") d.binding.kind = Binding::Kind::intersection;
      else throw DomainError("bad binding kind '" + kind + "'");
      if (b.contains("call")) d.binding.call = call_from(b.at("call"));
      if (b.contains("branches"))
        for (const auto& br : b.at("branches"))
          d.binding.branches.emplace_back(br.at("label").get<std::string>(), call_from(br.at("call")));
      d.line = n.value("line", 0);
      ast.nodes.push_back(std::move(d));
    }
    for (const auto& im : j.at("impls")) {
      ImplDecl d;
      d.node = im.at("node").get<std::string>();
      d.id = im.at("id").get<std::string>();
      for (const auto& v : im.at("provides")) d.prov.push_back(value_from(v));
      for (const auto& v : im.at("requires")) d.reqs.push_back(value_from(v));
      d.line = im.value("line", 0);
      ast.impls.push_back(std::move(d));
    }
    for (const auto& e : j.at("edges")) ast.edges.push_back(edge_from(e));
    for (const auto& l : j.at("loops")) {
      LoopDecl d;
      for (const auto& e : l.at("edges")) d.edges.push_back(edge_from(e));
      d.line = l.value("line", 0);
      ast.loops.push_back(std::move(d));
    }
    for (const auto& p : j.at("params")) {
      ParamDecl d;
      d.name = p.at("name").get<std::string>();
      d.kind = p.at("kind") == "kernel" ? ParamDecl::Kind::kernel : ParamDecl::Kind::function;
      d.call = call_from(p.at("call"));
      d.targets = p.at("targets").get<std::vector<std::string>>();
      d.line = p.value("line", 0);
      ast.params.push_back(std::move(d));
    }
    for (const auto& q : j.at("queries"))
      ast.queries.push_back({ref_from(q.at("port")), value_from(q.at("value")), q.value("line", 0)});
    canonicalize(ast);
    return ast;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed AST document: ") + e.what());
  }
}

// -- solve results ----------------------------------------------------------------

Json port_values(const std::vector<PortRef>& ports, const Element& e) {
  Json out = Json::object();
  for (std::size_t i = 0; i < ports.size(); ++i) out[ports[i].to_string()] = to_json(ports.size() == 1 ? e : e[i]);
  return out;
}

namespace {

std::string csv_cell(const Element& e) {
  if (e.is_scalar()) return number(e.as_scalar());
  if (e.is_label()) return e.as_label();
  return e.to_string();
}

}  // namespace

Json solve_to_json(const Diagram& d, const Element& f, const QueryResult& q) {
  Json rs = Json::array();
  for (const auto& r : q.minimal_resources) {
    Json ws = Json::array();
    if (auto it = q.witnesses.find(r); it != q.witnesses.end())
      for (const auto& w : it->second) ws.push_back(w);
    rs.push_back({{"values", port_values(d.external_resources(), r)}, {"witnesses", ws}});
  }
  auto posets = [&d](const std::vector<dsl::PortRef>& ports) {
    Json out = Json::object();
    for (const auto& p : ports) out[p.to_string()] = to_json(d.port_poset(p));
    return out;
  };
  return {{"query", port_values(d.external_functionalities(), f)},
          {"feasible", q.feasible()},
          {"resources", rs},
          {"posets", {{"functionality", posets(d.external_functionalities())},
                      {"resources", posets(d.external_resources())}}}};
}

std::string solve_to_csv(const Diagram& d, const QueryResult& q) {
  const auto& ports = d.external_resources();
  std::string out;
  for (const auto& p : ports) out += p.to_string() + ",";
  out += "witness\n";
  for (const auto& r : q.minimal_resources) {
    for (std::size_t i = 0; i < ports.size(); ++i) out += csv_cell(ports.size() == 1 ? r : r[i]) + ",";
    if (auto it = q.witnesses.find(r); it != q.witnesses.end() && !it->second.empty()) {
      const auto& w = it->second.front();
      for (std::size_t i = 0; i < w.size(); ++i) out += (i ? "/" : "") + w[i];
    }
    out += "\n";
  }
  return out;
}

// -- UAV ----------------------------------------------------------------------------

namespace {

Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

}  // namespace

Json to_json(const uav::CostSummary& s) {
  return {{"tech", s.tech},
          {"payload_g", s.payload},
          {"n", s.n},
          {"feasible", s.feasible},
          {"infeasible_fraction", s.infeasible_fraction},
          {"mean_cost_usd", finite_or_null(s.mean)},
          {"q05_cost_usd", finite_or_null(s.q05)},
          {"q50_cost_usd", finite_or_null(s.q50)},
          {"q95_cost_usd", finite_or_null(s.q95)},
          {"root_seed", s.root_seed}};
}

Json to_json(const uav::FrontPoint& p) {
  Json j = {{"payload_g", p.payload}, {"feasible", p.feasible}};
  if (p.feasible) {
    j["min_cost_usd"] = p.min_cost;
    j["self_weight_g"] = p.self_weight;
    j["tech"] = p.tech;
    j["actuator"] = p.actuator;
  }
  return j;
}

std::string front_csv(const std::vector<uav::FrontPoint>& front) {
  std::string out = "payload_g,feasible,min_cost_usd,self_weight_g,tech,actuator\n";
  for (const auto& p : front) {
    out += number(p.payload) + "," + (p.feasible ? "true" : "false") + ",";
    if (p.feasible) out += number(p.min_cost) + "," + number(p.self_weight) + "," + p.tech + "," + p.actuator;
    else out += ",,,";
    out += "\n";
  }
  return out;
}

}  // namespace codp::io
