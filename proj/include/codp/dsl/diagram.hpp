#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "codp/design_problem.hpp"
#include "codp/dsl/ast.hpp"
#include "codp/kernel.hpp"

namespace codp::dsl {

/// A sampled (or nominal) parameter-box value together with its space, so
/// components can look fields up by name.
struct ParamValue {
  ParamSpace space;
  Element value;

  /// Coordinate `name` of a box value. Throws DomainError if absent.
  double field(const std::string& name) const;
  bool has_field(const std::string& name) const;
};

using ParamValues = std::map<std::string, ParamValue>;

struct ComponentContext {
  const Call& call;
  const ParamValues& params;  // boxes wired to this node
  const Poset& fun;           // declared functionality poset of the node
  const Poset& res;           // declared resource poset
  std::string node;

  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  std::string text(const std::string& key) const;
};

using ComponentFactory = std::function<DesignProblem(const ComponentContext&)>;

/// A parameter kernel and its deterministic stand-in (used by `function`
/// boxes and by nominal solves).
struct KernelSpec {
  ParamKernel kernel;
  std::function<Element(const Element&)> nominal;
};

using KernelFactory = std::function<KernelSpec(const Call&)>;

class Registry {
 public:
  void add_component(std::string name, ComponentFactory f) { components_[std::move(name)] = std::move(f); }
  void add_kernel(std::string name, KernelFactory f) { kernels_[std::move(name)] = std::move(f); }

  const ComponentFactory* component(const std::string& name) const;
  const KernelFactory* kernel(const std::string& name) const;
  std::vector<std::string> component_names() const;

 private:
  std::map<std::string, ComponentFactory> components_;
  std::map<std::string, KernelFactory> kernels_;
};

/// identity, scale(factor), sum, constant(value), affine(offset, gain).
Registry builtin_registry();

/// Tree form of an elaborated diagram.
struct CompositionExpr {
  enum class Kind { leaf, wire, series, parallel, trace, union_, intersection, reparam };
  Kind kind = Kind::leaf;
  std::string label;  // node name for leaves, branch label for union/intersection members
  std::vector<CompositionExpr> children;
  int wire = -1;  // index into Diagram::wires for Kind::wire

  std::string to_string() const;
};

/// Port routing between pipeline stages: every output leaf copies one input
/// leaf (duplicating fan-out, reordering, regrouping).
struct Wire {
  Poset fun;
  Poset res;
  std::function<Element(const Element&)> route;
  std::string description;
};

/// A type-checked diagram ready to instantiate.
class Diagram {
 public:
  struct Node {
    const NodeDecl* decl = nullptr;
    std::vector<Poset> fun_ports;
    std::vector<Poset> res_ports;
    Poset fun = Poset::product({});
    Poset res = Poset::product({});
    std::vector<std::string> params;  // boxes wired to this node
    std::optional<DesignProblem> fixed;  // prebuilt when independent of parameters
  };
  struct Param {
    const ParamDecl* decl = nullptr;
    KernelSpec spec;
  };

  const DiagramAST& ast() const { return *ast_; }
  const CompositionExpr& expr() const { return expr_; }
  const std::map<std::string, Node>& nodes() const { return nodes_; }
  const std::map<std::string, Param>& params() const { return params_; }
  const std::vector<Wire>& wires() const { return wires_; }

  /// External ports, ordered by (node name, declaration index).
  const std::vector<PortRef>& external_functionalities() const { return ext_fun_; }
  const std::vector<PortRef>& external_resources() const { return ext_res_; }
  const Poset& fun_poset() const { return fun_; }
  const Poset& res_poset() const { return res_; }
  /// Poset of a port; functionality ports shadow same-named resource ports.
  const Poset& port_poset(const PortRef& p) const;

  /// Product of the non-trivial parameter-box domains (boxes in name order);
  /// a single box contributes its own domain; none gives {nominal}.
  const ParamSpace& domain() const { return domain_; }
  /// Names of the boxes making up domain(), in order.
  const std::vector<std::string>& domain_boxes() const { return domain_boxes_; }
  /// Domain point from one value per domain box. Throws DomainError when a box is missing.
  Element domain_point(const std::map<std::string, Element>& at) const;

  /// Parameter values at a domain point: nominal (deterministic) or sampled.
  ParamValues nominal_values(const Element& m) const;
  ParamValues sample_values(const Element& m, std::uint64_t seed) const;

  /// Builds the design problem for fixed parameter values. Nodes listed in
  /// `overrides` use the given DP instead of their binding.
  DesignProblem instantiate(const ParamValues& values,
                            const std::map<std::string, DesignProblem>& overrides = {}) const;

  ParameterizedDP family(const std::map<std::string, DesignProblem>& overrides = {}) const;
  DPKernel kernel(const std::map<std::string, DesignProblem>& overrides = {}) const;

  /// Nominal solve with a free choice over the parameter domain (union over
  /// its points, witnesses prefixed by the point). Requires a finite domain.
  DesignProblem free_choice() const;

  /// External functionality point from the diagram's query statements plus
  /// `extra` (which wins). Every external functionality must be given and
  /// `extra` may only name external functionalities; DomainError otherwise.
  Element query_point(const std::vector<QueryDecl>& extra = {}) const;

 private:
  friend Diagram check(DiagramAST ast, const Registry& registry);
  DesignProblem build_node(const Node& n, const ParamValues& values) const;
  DesignProblem build(const CompositionExpr& e, const ParamValues& values,
                      const std::map<std::string, DesignProblem>& overrides) const;

  std::shared_ptr<const DiagramAST> ast_;
  std::map<std::string, Poset> posets_;
  std::map<std::string, Node> nodes_;
  std::map<std::string, Param> params_;
  std::map<std::string, ComponentFactory> factories_;
  std::vector<PortRef> ext_fun_, ext_res_;
  Poset fun_ = Poset::product({});
  Poset res_ = Poset::product({});
  ParamSpace domain_ = ParamSpace::finite({"nominal"});
  std::vector<std::string> domain_boxes_;
  std::vector<Wire> wires_;
  CompositionExpr expr_;
};

/// Type-checks and elaborates. Throws TypeCheckError.
Diagram check(DiagramAST ast, const Registry& registry);

/// The composition tree of a diagram (see check).
CompositionExpr elaborate(const DiagramAST& ast, const Registry& registry);

/// Converts a DSL literal to an element of p. Throws TypeCheckError.
Element to_element(const Poset& p, const Value& v, int line = 0);
/// Inverse of to_element for scalars, top and labels.
Value to_value(const Element& e);

}  // namespace codp::dsl
