#include "codp/dsl/diagram.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <sstream>

namespace codp::dsl {

// ---------------------------------------------------------------------------
// Parameters and values

double ParamValue::field(const std::string& name) const {
  if (space.kind() == ParamSpace::Kind::box) {
    const auto& names = space.names();
    auto it = std::find(names.begin(), names.end(), name);
    if (it != names.end()) return value[static_cast<std::size_t>(it - names.begin())].as_scalar();
  }
  throw DomainError("parameter value has no field '" + name + "' (space " + space.to_string() + ")");
}

bool ParamValue::has_field(const std::string& name) const {
  if (space.kind() != ParamSpace::Kind::box) return false;
  const auto& names = space.names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

double ComponentContext::number(const std::string& key) const {
  const Value* v = call.arg(key);
  if (!v) throw DomainError(call.component + ": missing argument '" + key + "'");
  if (v->kind != Value::Kind::number) throw DomainError(call.component + ": argument '" + key + "' must be a number");
  return v->number;
}

double ComponentContext::number_or(const std::string& key, double fallback) const {
  return call.arg(key) ? number(key) : fallback;
}

std::string ComponentContext::text(const std::string& key) const {
  const Value* v = call.arg(key);
  if (!v) throw DomainError(call.component + ": missing argument '" + key + "'");
  if (v->kind != Value::Kind::string && v->kind != Value::Kind::ident)
    throw DomainError(call.component + ": argument '" + key + "' must be a name");
  return v->text;
}

const ComponentFactory* Registry::component(const std::string& name) const {
  auto it = components_.find(name);
  return it == components_.end() ? nullptr : &it->second;
}

const KernelFactory* Registry::kernel(const std::string& name) const {
  auto it = kernels_.find(name);
  return it == kernels_.end() ? nullptr : &it->second;
}

std::vector<std::string> Registry::component_names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : components_) out.push_back(k);
  return out;
}

Element to_element(const Poset& p, const Value& v, int line) {
  switch (p.kind()) {
    case Poset::Kind::nonneg_real:
      if (v.kind == Value::Kind::top) return Element::top();
      if (v.kind == Value::Kind::number && v.number >= 0) return scalar(v.number);
      break;
    case Poset::Kind::discrete:
      if (v.kind == Value::Kind::ident && p.index_of(v.text) >= 0) return label(v.text);
      break;
    case Poset::Kind::opposite:
      return to_element(p.inner(), v, line);
    case Poset::Kind::product:
      break;
  }
  throw TypeCheckError("value " + format_value(v) + " is not an element of " + p.to_string(), line);
}

Value to_value(const Element& e) {
  if (e.is_top()) return Value::top();
  if (e.is_scalar()) return Value::num(e.as_scalar());
  if (e.is_label()) return Value::ident(e.as_label());
  throw DomainError("no literal form for " + e.to_string());
}

// ---------------------------------------------------------------------------
// Composition expressions

std::string CompositionExpr::to_string() const {
  auto join = [&](const char* head) {
    std::string s = std::string(head) + "(";
    for (std::size_t i = 0; i < children.size(); ++i) s += (i ? ", " : "") + children[i].to_string();
    return s + ")";
  };
  switch (kind) {
    case Kind::leaf:
      return label;
    case Kind::wire:
      return "wire";
    case Kind::series:
      return join("series");
    case Kind::parallel:
      return join("parallel");
    case Kind::trace:
      return join("trace");
    case Kind::union_:
      return join("union");
    case Kind::intersection:
      return join("intersection");
    case Kind::reparam:
      return "reparam[" + label + "]" + join("");
  }
  return "?";
}

namespace {

CompositionExpr binary(CompositionExpr::Kind k, CompositionExpr a, CompositionExpr b) {
  CompositionExpr e;
  e.kind = k;
  e.children = {std::move(a), std::move(b)};
  return e;
}

// ---------------------------------------------------------------------------
// Elaboration: port signals grouped into shapes that mirror element nesting

const Poset kUnit = Poset::product({});

struct Shape {
  bool leaf = false;
  std::string sig;
  Poset poset = kUnit;
  std::vector<Shape> items;

  static Shape signal(std::string s, Poset p) {
    Shape x;
    x.leaf = true;
    x.sig = std::move(s);
    x.poset = std::move(p);
    return x;
  }
  static Shape tuple_of(std::vector<Shape> items) {
    Shape x;
    std::vector<Poset> ps;
    for (const auto& i : items) ps.push_back(i.poset);
    x.poset = Poset::product(std::move(ps));
    x.items = std::move(items);
    return x;
  }
  /// One signal stands alone; zero or several form a tuple.
  static Shape group(std::vector<Shape> items) {
    if (items.size() == 1) return std::move(items[0]);
    return tuple_of(std::move(items));
  }

  void signals(std::vector<std::string>& out) const {
    if (leaf) {
      out.push_back(sig);
      return;
    }
    for (const auto& i : items) i.signals(out);
  }
  void paths(std::map<std::string, std::vector<std::size_t>>& out, std::vector<std::size_t>& prefix) const {
    if (leaf) {
      out[sig] = prefix;
      return;
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
      prefix.push_back(i);
      items[i].paths(out, prefix);
      prefix.pop_back();
    }
  }
  friend bool operator==(const Shape& a, const Shape& b) {
    return a.leaf == b.leaf && a.sig == b.sig && a.items == b.items;
  }
};

std::string in_sig(const PortRef& p) { return "in:" + p.to_string(); }
std::string out_sig(const PortRef& p) { return "out:" + p.to_string(); }

/// Compiled routing: the output is rebuilt from the target shape, each leaf
/// copied from its path in the input.
struct Route {
  bool leaf = false;
  std::vector<std::size_t> from;
  std::vector<Route> items;

  Element apply(const Element& x) const {
    if (leaf) {
      const Element* e = &x;
      for (std::size_t i : from) e = &(*e)[i];
      return *e;
    }
    Element::Tuple out;
    out.reserve(items.size());
    for (const auto& r : items) out.push_back(r.apply(x));
    return Element::tuple(std::move(out));
  }
};

Route compile_route(const Shape& target, const std::map<std::string, std::vector<std::size_t>>& src) {
  Route r;
  if (target.leaf) {
    r.leaf = true;
    r.from = src.at(target.sig);
    return r;
  }
  for (const auto& i : target.items) r.items.push_back(compile_route(i, src));
  return r;
}

std::string describe(const Shape& s) {
  if (s.leaf) return s.sig.substr(s.sig.find(':') + 1);
  std::string out = "(";
  for (std::size_t i = 0; i < s.items.size(); ++i) out += (i ? ", " : "") + describe(s.items[i]);
  return out + ")";
}

Wire make_wire(const Shape& from, const Shape& to) {
  std::map<std::string, std::vector<std::size_t>> paths;
  std::vector<std::size_t> prefix;
  from.paths(paths, prefix);
  Route route = compile_route(to, paths);
  return {from.poset, to.poset, [route](const Element& x) { return route.apply(x); },
          describe(from) + " => " + describe(to)};
}

ParamValues restrict(const ParamValues& all, const std::vector<std::string>& names) {
  ParamValues out;
  for (const auto& n : names)
    if (auto it = all.find(n); it != all.end()) out.emplace(n, it->second);
  return out;
}

/// A representative point used for check-time builds.
Element representative(const ParamSpace& s) {
  switch (s.kind()) {
    case ParamSpace::Kind::finite:
      return label(s.labels().front());
    case ParamSpace::Kind::box: {
      Element::Tuple t;
      for (const auto& [lo, hi] : s.bounds()) t.push_back(scalar(std::isfinite(lo) ? lo : std::isfinite(hi) ? hi : 0.0));
      return Element::tuple(std::move(t));
    }
    case ParamSpace::Kind::product:
      return tuple({representative(s.left()), representative(s.right())});
  }
  return Element::unit();
}

bool singleton(const ParamSpace& s) { return s.is_finite() && s.points().size() == 1; }

std::string point_name(const Element& e) { return e.is_label() ? e.as_label() : e.to_string(); }

}  // namespace

// ---------------------------------------------------------------------------
// Diagram

const Poset& Diagram::port_poset(const PortRef& p) const {
  auto it = nodes_.find(p.node);
  if (it != nodes_.end()) {
    const auto& d = *it->second.decl;
    for (std::size_t i = 0; i < d.fun.size(); ++i)
      if (d.fun[i].name == p.port) return it->second.fun_ports[i];
    for (std::size_t i = 0; i < d.res.size(); ++i)
      if (d.res[i].name == p.port) return it->second.res_ports[i];
  }
  throw DomainError("no port " + p.to_string());
}

Element Diagram::domain_point(const std::map<std::string, Element>& at) const {
  if (domain_boxes_.empty()) return label("nominal");
  std::optional<Element> acc;
  for (const auto& name : domain_boxes_) {
    auto it = at.find(name);
    if (it == at.end()) throw DomainError("no value for parameter box '" + name + "'");
    acc = acc ? tuple({*acc, it->second}) : it->second;
  }
  require_param(domain_, *acc);
  return *acc;
}

ParamValues Diagram::nominal_values(const Element& m) const {
  require_param(domain_, m);
  ParamValues out;
  std::map<std::string, Element> points;
  if (domain_boxes_.size() == 1) {
    points[domain_boxes_[0]] = m;
  } else if (domain_boxes_.size() > 1) {
    Element cur = m;
    for (std::size_t i = domain_boxes_.size(); i-- > 1;) {
      points[domain_boxes_[i]] = cur[1];
      cur = cur[0];
    }
    points[domain_boxes_[0]] = cur;
  }
  for (const auto& [name, p] : params_) {
    auto it = points.find(name);
    Element at = it != points.end() ? it->second : representative(p.spec.kernel.domain);
    out.emplace(name, ParamValue{p.spec.kernel.codomain, p.spec.nominal(at)});
  }
  return out;
}

ParamValues Diagram::sample_values(const Element& m, std::uint64_t seed) const {
  ParamValues out = nominal_values(m);
  std::map<std::string, Element> points;
  std::uint64_t index = 0;
  for (const auto& [name, p] : params_) {
    ++index;
    if (p.decl->kind != ParamDecl::Kind::kernel) continue;
    // recover the domain point used for this box
    Element at = representative(p.spec.kernel.domain);
    auto pos = std::find(domain_boxes_.begin(), domain_boxes_.end(), name);
    if (pos != domain_boxes_.end()) {
      if (domain_boxes_.size() == 1) {
        at = m;
      } else {
        Element cur = m;
        std::size_t k = static_cast<std::size_t>(pos - domain_boxes_.begin());
        for (std::size_t i = domain_boxes_.size(); i-- > k + 1;) cur = cur[0];
        at = k == 0 ? cur : cur[1];
      }
    }
    out.at(name).value = p.spec.kernel.draw(at, derive_seed(seed, index));
  }
  return out;
}

DesignProblem Diagram::build_node(const Node& n, const ParamValues& values) const {
  if (n.fixed) return *n.fixed;
  const NodeDecl& d = *n.decl;
  ParamValues mine = restrict(values, n.params);
  auto make = [&](const Call& c) {
    ComponentContext ctx{c, mine, n.fun, n.res, d.name};
    return factories_.at(c.component)(ctx);
  };
  switch (d.binding.kind) {
    case Binding::Kind::mdpi:
      break;  // always fixed
    case Binding::Kind::call:
      return make(d.binding.call);
    case Binding::Kind::union_:
    case Binding::Kind::intersection: {
      const bool u = d.binding.kind == Binding::Kind::union_;
      std::optional<DesignProblem> acc;
      for (const auto& [lbl, c] : d.binding.branches) {
        DesignProblem b = make(c).renamed(lbl);
        acc = acc ? (u ? union_of(*acc, b) : intersection_of(*acc, b)) : b;
      }
      return *acc;
    }
  }
  throw Error("node '" + d.name + "' has no binding");
}

DesignProblem Diagram::build(const CompositionExpr& e, const ParamValues& values,
                             const std::map<std::string, DesignProblem>& overrides) const {
  using K = CompositionExpr::Kind;
  switch (e.kind) {
    case K::leaf: {
      if (auto it = overrides.find(e.label); it != overrides.end()) return it->second;
      return build_node(nodes_.at(e.label), values);
    }
    case K::wire: {
      const Wire& w = wires_.at(static_cast<std::size_t>(e.wire));
      auto route = w.route;
      return from_monotone_map(
          w.fun, w.res, [route](const Element& x) { return std::optional<Element>(route(x)); }, "wire", false);
    }
    case K::series:
      return series(build(e.children[0], values, overrides), build(e.children[1], values, overrides));
    case K::parallel:
      return parallel(build(e.children[0], values, overrides), build(e.children[1], values, overrides));
    case K::trace:
      return divergence_as_infeasible(trace(build(e.children[0], values, overrides)));
    case K::union_:
    case K::intersection: {
      std::optional<DesignProblem> acc;
      for (const auto& c : e.children) {
        DesignProblem b = build(c, values, overrides);
        acc = acc ? (e.kind == K::union_ ? union_of(*acc, b) : intersection_of(*acc, b)) : b;
      }
      return *acc;
    }
    case K::reparam:
      return build(e.children.at(0), values, overrides);
  }
  throw Error("bad composition expression");
}

DesignProblem Diagram::instantiate(const ParamValues& values,
                                   const std::map<std::string, DesignProblem>& overrides) const {
  for (const auto& [name, dp] : overrides) {
    auto it = nodes_.find(name);
    if (it == nodes_.end()) throw DomainError("override for unknown node '" + name + "'");
    require_same_poset(it->second.fun, dp.fun_poset(), "node override (functionalities)");
    require_same_poset(it->second.res, dp.res_poset(), "node override (resources)");
  }
  return build(expr_, values, overrides);
}

ParameterizedDP Diagram::family(const std::map<std::string, DesignProblem>& overrides) const {
  return {domain_, {fun_, res_},
          [d = *this, overrides](const Element& m) { return d.instantiate(d.nominal_values(m), overrides); }};
}

DPKernel Diagram::kernel(const std::map<std::string, DesignProblem>& overrides) const {
  return {domain_,
          {fun_, res_},
          [d = *this, overrides](const Element& m, std::uint64_t seed) {
            return d.instantiate(d.sample_values(m, seed), overrides);
          },
          std::nullopt};
}

DesignProblem Diagram::free_choice() const {
  auto pts = domain_.points();
  if (pts.size() == 1) return instantiate(nominal_values(pts[0]));
  std::optional<DesignProblem> acc;
  for (const auto& p : pts) {
    DesignProblem d = instantiate(nominal_values(p)).renamed(point_name(p));
    acc = acc ? union_of(*acc, d) : d;
  }
  return *acc;
}

Element Diagram::query_point(const std::vector<QueryDecl>& extra) const {
  for (const auto& e : extra)
    if (std::find(ext_fun_.begin(), ext_fun_.end(), e.port) == ext_fun_.end())
      throw DomainError(e.port.to_string() + " is not an external functionality");
  std::vector<Element> parts;
  for (const auto& p : ext_fun_) {
    const QueryDecl* q = nullptr;
    for (const auto& e : extra)
      if (e.port == p) q = &e;
    if (!q)
      for (const auto& e : ast_->queries)
        if (e.port == p) q = &e;
    if (!q) throw DomainError("no query value for external functionality " + p.to_string());
    parts.push_back(to_element(port_poset(p), q->value, q->line));
  }
  if (parts.size() == 1) return parts[0];
  return Element::tuple(std::move(parts));
}

// ---------------------------------------------------------------------------
// Type checking and elaboration

Diagram check(DiagramAST ast_in, const Registry& registry) {
  canonicalize(ast_in);
  Diagram d;
  auto ast = std::make_shared<const DiagramAST>(std::move(ast_in));
  d.ast_ = ast;

  // posets
  for (const auto& p : ast->posets) {
    if (d.posets_.count(p.name)) throw TypeCheckError("duplicate poset '" + p.name + "'", p.line);
    if (p.name == "real") throw TypeCheckError("'real' is reserved", p.line);
    try {
      d.posets_.emplace(p.name, p.kind == PosetDecl::Kind::real ? Poset::nonneg_real(p.unit)
                                                                : Poset::discrete(p.labels, p.order));
    } catch (const DomainError& e) {
      throw TypeCheckError("poset '" + p.name + "': " + e.what(), p.line);
    }
  }
  auto resolve = [&](const TypeExpr& t, int line) {
    if (t.kind == TypeExpr::Kind::real) return Poset::nonneg_real(t.text);
    auto it = d.posets_.find(t.text);
    if (it == d.posets_.end()) throw TypeCheckError("unknown poset '" + t.text + "'", line);
    return it->second;
  };

  // nodes and their ports
  for (const auto& n : ast->nodes) {
    if (d.nodes_.count(n.name)) throw TypeCheckError("duplicate node '" + n.name + "'", n.line);
    Diagram::Node node;
    node.decl = &n;
    for (const auto* side : {&n.fun, &n.res}) {
      std::set<std::string> seen;
      for (const auto& p : *side)
        if (!seen.insert(p.name).second)
          throw TypeCheckError("duplicate port '" + p.name + "' on node '" + n.name + "'", n.line);
    }
    for (const auto& p : n.fun) node.fun_ports.push_back(resolve(p.type, n.line));
    for (const auto& p : n.res) node.res_ports.push_back(resolve(p.type, n.line));
    node.fun = node.fun_ports.size() == 1 ? node.fun_ports[0] : Poset::product(node.fun_ports);
    node.res = node.res_ports.size() == 1 ? node.res_ports[0] : Poset::product(node.res_ports);
    d.nodes_.emplace(n.name, std::move(node));
  }
  if (d.nodes_.empty()) throw TypeCheckError("diagram has no nodes");

  // parameter boxes
  for (const auto& p : ast->params) {
    if (d.params_.count(p.name)) throw TypeCheckError("duplicate parameter box '" + p.name + "'", p.line);
    const KernelFactory* f = registry.kernel(p.call.component);
    if (!f) throw TypeCheckError("unknown kernel '" + p.call.component + "'", p.line);
    Diagram::Param param{&p, {}};
    try {
      param.spec = (*f)(p.call);
    } catch (const Error& e) {
      throw TypeCheckError("parameter box '" + p.name + "': " + e.what(), p.line);
    }
    for (const auto& t : p.targets) {
      auto it = d.nodes_.find(t);
      if (it == d.nodes_.end()) throw TypeCheckError("parameter box '" + p.name + "' targets unknown node '" + t + "'", p.line);
      it->second.params.push_back(p.name);
    }
    d.params_.emplace(p.name, std::move(param));
  }
  {
    std::vector<ParamSpace> doms;
    for (const auto& [name, p] : d.params_)
      if (!singleton(p.spec.kernel.domain)) {
        d.domain_boxes_.push_back(name);
        doms.push_back(p.spec.kernel.domain);
      }
    if (!doms.empty()) {
      ParamSpace acc = doms[0];
      for (std::size_t i = 1; i < doms.size(); ++i) acc = ParamSpace::product(acc, doms[i]);
      d.domain_ = acc;
    }
  }
  const ParamValues check_values = d.nominal_values(representative(d.domain_));

  // implementations
  std::map<std::string, std::vector<Implementation>> impls;
  for (const auto& im : ast->impls) {
    auto it = d.nodes_.find(im.node);
    if (it == d.nodes_.end()) throw TypeCheckError("implementation for unknown node '" + im.node + "'", im.line);
    const auto& node = it->second;
    if (node.decl->binding.kind != Binding::Kind::mdpi)
      throw TypeCheckError("node '" + im.node + "' is not an mdpi node", im.line);
    auto& list = impls[im.node];
    for (const auto& other : list)
      if (other.id == im.id) throw TypeCheckError("duplicate implementation '" + im.node + "." + im.id + "'", im.line);
    if (im.prov.size() != node.fun_ports.size() || im.reqs.size() != node.res_ports.size())
      throw TypeCheckError("implementation '" + im.node + "." + im.id + "' does not match the port counts", im.line);
    auto pack = [&](const std::vector<Value>& vs, const std::vector<Poset>& ps) {
      std::vector<Element> es;
      for (std::size_t i = 0; i < vs.size(); ++i) es.push_back(to_element(ps[i], vs[i], im.line));
      return es.size() == 1 ? es[0] : Element::tuple(std::move(es));
    };
    list.push_back({im.id, pack(im.prov, node.fun_ports), pack(im.reqs, node.res_ports)});
  }

  // bindings
  for (auto& [name, node] : d.nodes_) {
    const NodeDecl& n = *node.decl;
    if (n.binding.kind == Binding::Kind::mdpi) {
      node.fixed = dp_from_mdpi({node.fun, node.res, impls[name], name});
      continue;
    }
    std::vector<const Call*> calls;
    if (n.binding.kind == Binding::Kind::call) {
      calls.push_back(&n.binding.call);
    } else {
      std::set<std::string> labels;
      for (const auto& [lbl, c] : n.binding.branches) {
        if (!labels.insert(lbl).second) throw TypeCheckError("duplicate branch '" + lbl + "'", n.line);
        calls.push_back(&c);
      }
    }
    for (const Call* c : calls) {
      const ComponentFactory* f = registry.component(c->component);
      if (!f) throw TypeCheckError("unknown component '" + c->component + "'", n.line);
      d.factories_.emplace(c->component, *f);
    }
    DesignProblem probe = [&] {
      try {
        return d.build_node(node, check_values);
      } catch (const TypeCheckError&) {
        throw;
      } catch (const Error& e) {
        throw TypeCheckError("node '" + name + "': " + e.what(), n.line);
      }
    }();
    if (probe.fun_poset() != node.fun || probe.res_poset() != node.res)
      throw TypeCheckError("node '" + name + "' is declared " + node.fun.to_string() + " -> " + node.res.to_string() +
                               " but its binding is " + probe.fun_poset().to_string() + " -> " +
                               probe.res_poset().to_string(),
                           n.line);
    if (node.params.empty()) node.fixed = probe;
  }

  // edges
  auto port_index = [&](const PortRef& r, bool resource, int line) -> std::size_t {
    auto it = d.nodes_.find(r.node);
    if (it == d.nodes_.end()) throw TypeCheckError("unknown node '" + r.node + "'", line);
    const auto& ports = resource ? it->second.decl->res : it->second.decl->fun;
    for (std::size_t i = 0; i < ports.size(); ++i)
      if (ports[i].name == r.port) return i;
    throw TypeCheckError(std::string("node '") + r.node + "' has no " + (resource ? "resource" : "functionality") +
                             " port '" + r.port + "'",
                         line);
  };
  std::map<PortRef, PortRef> incoming;  // fun port -> feeding res port
  std::set<PortRef> fed_res;
  std::vector<EdgeDecl> loop_edges;
  auto add_edge = [&](const EdgeDecl& e) {
    std::size_t ri = port_index(e.from, true, e.line);
    std::size_t fi = port_index(e.to, false, e.line);
    const Poset& a = d.nodes_.at(e.from.node).res_ports[ri];
    const Poset& b = d.nodes_.at(e.to.node).fun_ports[fi];
    if (a != b)
      throw TypeCheckError("edge " + e.from.to_string() + " -> " + e.to.to_string() + " connects " + a.to_string() +
                               " to " + b.to_string(),
                           e.line);
    if (incoming.count(e.to)) throw TypeCheckError("functionality port " + e.to.to_string() + " has two incoming edges", e.line);
    incoming.emplace(e.to, e.from);
    fed_res.insert(e.from);
  };
  for (const auto& e : ast->edges) add_edge(e);
  for (const auto& l : ast->loops)
    for (const auto& e : l.edges) {
      add_edge(e);
      loop_edges.push_back(e);
    }
  std::sort(loop_edges.begin(), loop_edges.end());

  // acyclicity of the non-loop graph; longest-path layering
  std::map<std::string, std::set<std::string>> preds, succs;
  for (const auto& e : ast->edges) {
    preds[e.to.node].insert(e.from.node);
    succs[e.from.node].insert(e.to.node);
  }
  std::map<std::string, int> level;
  {
    std::map<std::string, std::size_t> indeg;
    for (const auto& [n, _] : d.nodes_) indeg[n] = preds[n].size();
    std::vector<std::string> ready;
    for (const auto& [n, k] : indeg)
      if (k == 0) ready.push_back(n);
    while (!ready.empty()) {
      std::string n = ready.back();
      ready.pop_back();
      int lv = 0;
      for (const auto& p : preds[n]) lv = std::max(lv, level.at(p) + 1);
      level[n] = lv;
      for (const auto& s : succs[n])
        if (--indeg[s] == 0) ready.push_back(s);
    }
    if (level.size() != d.nodes_.size()) {
      std::string stuck;
      int line = 0;
      for (const auto& [n, _] : d.nodes_)
        if (!level.count(n)) stuck += (stuck.empty() ? "" : ", ") + n;
      for (const auto& e : ast->edges)
        if (!level.count(e.from.node) && !level.count(e.to.node)) {
          line = e.line;
          break;
        }
      throw TypeCheckError("cycle without a loop annotation among nodes {" + stuck + "}", line);
    }
  }

  // queries
  {
    std::set<PortRef> seen;
    for (const auto& q : ast->queries) {
      std::size_t fi = port_index(q.port, false, q.line);
      if (incoming.count(q.port)) throw TypeCheckError("query on connected port " + q.port.to_string(), q.line);
      if (!seen.insert(q.port).second) throw TypeCheckError("duplicate query for " + q.port.to_string(), q.line);
      to_element(d.nodes_.at(q.port.node).fun_ports[fi], q.value, q.line);
    }
  }

  // external ports in (node, declaration) order
  for (const auto& [name, node] : d.nodes_) {
    for (const auto& p : node.decl->fun)
      if (!incoming.count({name, p.name})) d.ext_fun_.push_back({name, p.name});
    for (const auto& p : node.decl->res)
      if (!fed_res.count({name, p.name})) d.ext_res_.push_back({name, p.name});
  }
  auto port_shape = [&](const PortRef& r, bool in) {
    const auto& node = d.nodes_.at(r.node);
    std::size_t i = port_index(r, !in, 0);
    return Shape::signal(in ? in_sig(r) : out_sig(r), in ? node.fun_ports[i] : node.res_ports[i]);
  };
  std::vector<Shape> ext_in, loop_in, ext_out, loop_out;
  for (const auto& p : d.ext_fun_) ext_in.push_back(port_shape(p, true));
  for (const auto& p : d.ext_res_) ext_out.push_back(port_shape(p, false));
  for (const auto& e : loop_edges) {
    loop_in.push_back(port_shape(e.to, true));
    loop_out.push_back(port_shape(e.from, false));
  }
  const bool looped = !loop_edges.empty();
  if (looped && !least_element(Shape::group(loop_in).poset))
    throw TypeCheckError("loop carrier " + Shape::group(loop_in).poset.to_string() + " has no least element",
                         ast->loops.front().line);
  Shape body_in = looped ? Shape::tuple_of({Shape::group(ext_in), Shape::group(loop_in)}) : Shape::group(ext_in);
  Shape body_out = looped ? Shape::tuple_of({Shape::group(ext_out), Shape::group(loop_out)}) : Shape::group(ext_out);
  d.fun_ = Shape::group(ext_in).poset;
  d.res_ = Shape::group(ext_out).poset;

  // node shapes: regular edges feed from upstream outputs, everything else from outside
  auto node_in = [&](const std::string& name) {
    std::vector<Shape> items;
    for (const auto& p : d.nodes_.at(name).decl->fun) {
      PortRef r{name, p.name};
      auto it = incoming.find(r);
      bool loop = std::any_of(loop_edges.begin(), loop_edges.end(), [&](const EdgeDecl& e) { return e.to == r; });
      if (it != incoming.end() && !loop)
        items.push_back(Shape::signal(out_sig(it->second), port_shape(r, true).poset));
      else
        items.push_back(port_shape(r, true));
    }
    return Shape::group(std::move(items));
  };
  auto node_out = [&](const std::string& name) {
    std::vector<Shape> items;
    for (const auto& p : d.nodes_.at(name).decl->res) items.push_back(port_shape({name, p.name}, false));
    return Shape::group(std::move(items));
  };

  int max_level = 0;
  for (const auto& [n, lv] : level) max_level = std::max(max_level, lv);
  std::vector<std::vector<std::string>> layers(static_cast<std::size_t>(max_level) + 1);
  for (const auto& [n, lv] : level) layers[static_cast<std::size_t>(lv)].push_back(n);  // map order = sorted

  std::optional<CompositionExpr> expr;
  auto append = [&](CompositionExpr e) {
    expr = expr ? binary(CompositionExpr::Kind::series, std::move(*expr), std::move(e)) : std::move(e);
  };
  auto add_wire = [&](const Shape& from, const Shape& to) {
    if (from == to) return;
    d.wires_.push_back(make_wire(from, to));
    CompositionExpr w;
    w.kind = CompositionExpr::Kind::wire;
    w.wire = static_cast<int>(d.wires_.size() - 1);
    append(std::move(w));
  };
  auto leaf = [](const std::string& n) {
    CompositionExpr e;
    e.kind = CompositionExpr::Kind::leaf;
    e.label = n;
    return e;
  };

  Shape current = body_in;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    std::set<std::string> later;
    for (std::size_t j = k + 1; j < layers.size(); ++j)
      for (const auto& n : layers[j]) {
        std::vector<std::string> s;
        node_in(n).signals(s);
        later.insert(s.begin(), s.end());
      }
    {
      std::vector<std::string> s;
      body_out.signals(s);
      later.insert(s.begin(), s.end());
    }
    Shape layer_in = node_in(layers[k][0]);
    Shape layer_out = node_out(layers[k][0]);
    CompositionExpr layer = leaf(layers[k][0]);
    for (std::size_t i = 1; i < layers[k].size(); ++i) {
      layer_in = Shape::tuple_of({layer_in, node_in(layers[k][i])});
      layer_out = Shape::tuple_of({layer_out, node_out(layers[k][i])});
      layer = binary(CompositionExpr::Kind::parallel, std::move(layer), leaf(layers[k][i]));
    }
    std::vector<Shape> pass;
    {
      std::vector<std::string> avail;
      current.signals(avail);
      std::map<std::string, std::vector<std::size_t>> paths;
      std::vector<std::size_t> prefix;
      current.paths(paths, prefix);
      std::set<std::string> taken;
      for (const auto& s : avail) {
        if (!later.count(s) || !taken.insert(s).second) continue;
        // locate the poset of the signal in the current shape
        const Shape* node = &current;
        for (std::size_t i : paths.at(s)) node = &node->items[i];
        pass.push_back(*node);
      }
    }
    if (pass.empty()) {
      add_wire(current, layer_in);
      append(std::move(layer));
      current = layer_out;
    } else {
      Shape pass_shape = Shape::group(pass);
      add_wire(current, Shape::tuple_of({layer_in, pass_shape}));
      d.wires_.push_back(make_wire(pass_shape, pass_shape));
      CompositionExpr id;
      id.kind = CompositionExpr::Kind::wire;
      id.wire = static_cast<int>(d.wires_.size() - 1);
      append(binary(CompositionExpr::Kind::parallel, std::move(layer), std::move(id)));
      current = Shape::tuple_of({layer_out, pass_shape});
    }
  }
  {
    // every required signal must be available at the end
    std::vector<std::string> need, have;
    body_out.signals(need);
    current.signals(have);
    for (const auto& s : need)
      if (std::find(have.begin(), have.end(), s) == have.end()) throw Error("elaboration lost signal " + s);
  }
  add_wire(current, body_out);
  if (!expr) {
    CompositionExpr w;
    d.wires_.push_back(make_wire(body_in, body_in));
    w.kind = CompositionExpr::Kind::wire;
    w.wire = static_cast<int>(d.wires_.size() - 1);
    expr = std::move(w);
  }
  if (looped) {
    CompositionExpr t;
    t.kind = CompositionExpr::Kind::trace;
    t.children.push_back(std::move(*expr));
    expr = std::move(t);
  }
  if (!d.params_.empty()) {
    CompositionExpr r;
    r.kind = CompositionExpr::Kind::reparam;
    for (const auto& [name, _] : d.params_) r.label += (r.label.empty() ? "" : ",") + name;
    r.children.push_back(std::move(*expr));
    expr = std::move(r);
  }
  d.expr_ = std::move(*expr);
  return d;
}

CompositionExpr elaborate(const DiagramAST& ast, const Registry& registry) { return check(ast, registry).expr(); }

}  // namespace codp::dsl
