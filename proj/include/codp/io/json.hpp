#pragma once

// JSON views of elements, query results, diagram ASTs and experiment
// summaries. Reals are written as JSON numbers, the top element as the string
// "top", labels as strings and tuples as arrays. Keys keep a fixed order, so
// equal inputs always dump to equal bytes.

#include <json.hpp>

#include "codp/design_problem.hpp"
#include "codp/dsl/diagram.hpp"
#include "codp/sampling.hpp"
#include "codp/uav.hpp"

namespace codp::io {

using Json = nlohmann::ordered_json;

/// Tagged union: {"kind": "real", "units"}, {"kind": "discrete", "labels",
/// "order": [[a, b], ...]} (every strict pair a < b), {"kind": "product",
/// "components"}, {"kind": "opposite", "inner"}.
Json to_json(const Poset& p);
/// Inverse of to_json(Poset). Throws DomainError.
Poset poset_from_json(const Json& j);

Json to_json(const Element& e);
/// Inverse of to_json(Element), guided by the poset. Throws DomainError.
Element element_from_json(const Poset& p, const Json& j);
Json to_json(const Antichain& a);
/// Minimal elements of the listed points. Throws DomainError.
Antichain antichain_from_json(const Poset& p, const Json& j);
Json to_json(const Estimate& e);

/// Full AST, including source lines. ast_from_json(ast_to_json(a)) == a.
Json ast_to_json(const dsl::DiagramAST& ast);
/// Throws DomainError on a malformed document.
dsl::DiagramAST ast_from_json(const Json& j);

/// {"node.port": value, ...} for a point over the given external ports.
Json port_values(const std::vector<dsl::PortRef>& ports, const Element& e);

/// Solve result keyed by external port names:
/// {"query": {...}, "feasible": bool, "resources": [{"values": {...}, "witnesses": [[...]]}],
///  "posets": {"functionality": {port: poset}, "resources": {port: poset}}}.
Json solve_to_json(const dsl::Diagram& d, const Element& f, const QueryResult& q);
/// One row per minimal resource: the external resource ports, then the first witness.
std::string solve_to_csv(const dsl::Diagram& d, const QueryResult& q);

Json to_json(const uav::CostSummary& s);
Json to_json(const uav::FrontPoint& p);
std::string front_csv(const std::vector<uav::FrontPoint>& front);

/// Shortest round-trip decimal form of a double ("inf" for infinity).
std::string number(double x);

}  // namespace codp::io
