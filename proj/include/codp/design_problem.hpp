#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "codp/poset.hpp"

namespace codp {

/// One way of achieving a minimal resource: the sequence of named choices
/// (implementations, union branches) taken through the composite.
using Witness = std::vector<std::string>;

struct QueryResult {
  explicit QueryResult(Poset res) : minimal_resources(std::move(res)) {}
  QueryResult(Antichain ac) : minimal_resources(std::move(ac)) {}

  Antichain minimal_resources;
  /// Keyed by elements of minimal_resources; absent when nothing was recorded.
  std::map<Element, std::vector<Witness>> witnesses;

  bool feasible() const { return !minimal_resources.empty(); }
};

/// Upper bound on witnesses kept per minimal resource; composites multiply them.
inline constexpr std::size_t kMaxWitnesses = 16;

/// A monotone design problem: for each functionality f, the antichain of
/// minimal resources that make (f, r) feasible. Intensional, immutable and
/// shareable across threads; evaluations are memoized per instance on exact
/// functionality values. Series, parallel, union and intersection memoize only
/// when both operands do, so cheap closed-form pipelines stay uncached.
class DesignProblem {
 public:
  using QueryFn = std::function<QueryResult(const Element&)>;

  DesignProblem(Poset fun, Poset res, QueryFn query, std::string name = {}, bool memoize = true);

  const Poset& fun_poset() const;
  const Poset& res_poset() const;
  const std::string& name() const;
  bool memoized() const;

  /// Same query, different name. The memo table is not shared.
  DesignProblem renamed(std::string name) const;

  /// Minimal resources and witnesses for f. Throws DomainError when f is not in F.
  QueryResult evaluate(const Element& f) const;
  Antichain query(const Element& f) const { return evaluate(f).minimal_resources; }

 private:
  struct State;
  std::shared_ptr<const State> state_;
};

/// Leaf from a monotone function returning every candidate minimal resource
/// (the result is passed through `minimals`). An empty vector means infeasible.
DesignProblem from_candidates(Poset fun, Poset res, std::function<std::vector<Element>(const Element&)> fn,
                              std::string name = {}, bool memoize = true);

/// Leaf from a monotone single-valued map; nullopt means infeasible.
DesignProblem from_monotone_map(Poset fun, Poset res, std::function<std::optional<Element>(const Element&)> fn,
                                std::string name = {}, bool memoize = true);

struct Implementation {
  std::string id;
  Element prov;
  Element reqs;
};

/// A design problem with implementations: a finite catalogue of concrete
/// choices, each providing prov(i) at the cost of reqs(i).
struct ImplementationSet {
  Poset fun;
  Poset res;
  std::vector<Implementation> impls;
  std::string name;
};

/// query(f) = minimals{ reqs(i) | f <= prov(i) }, with implementation witnesses.
DesignProblem dp_from_mdpi(const ImplementationSet& m);

bool feasible(const DesignProblem& dp, const Element& f, const Element& r);

/// a's resources feed b's functionalities. Requires a.R == b.F.
DesignProblem series(const DesignProblem& a, const DesignProblem& b);
/// Side by side over F_a x F_b -> R_a x R_b.
DesignProblem parallel(const DesignProblem& a, const DesignProblem& b);
/// Free choice between a and b. Branch names are recorded in witnesses.
DesignProblem union_of(const DesignProblem& a, const DesignProblem& b);
/// Both a and b must be satisfied.
DesignProblem intersection_of(const DesignProblem& a, const DesignProblem& b);

struct TraceOptions {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  int max_iter = 10000;
};

/// Raised when the loop iteration of a trace does not settle within
/// max_iter, or when every loop value escapes to the top of a real coordinate.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::vector<Element> last_iterate, int iterations)
      : Error(what), last_iterate_(std::move(last_iterate)), iterations_(iterations) {}

  /// Loop antichain (elements of Q x L) at the last completed iteration.
  const std::vector<Element>& last_iterate() const { return last_iterate_; }
  int iterations() const { return iterations_; }

 private:
  std::vector<Element> last_iterate_;
  int iterations_;
};

/// Feedback: dp must map P x L to Q x L (both posets binary products sharing L),
/// and L must have a least element. query(p) is the Q-projection of the least
/// fixed point, found by Kleene iteration over antichains of Q x L.
DesignProblem trace(const DesignProblem& dp, TraceOptions opts = {});

/// Wraps dp so that DivergenceError becomes an empty (infeasible) answer.
DesignProblem divergence_as_infeasible(const DesignProblem& dp);

/// Fix functionalities, minimize resources.
QueryResult query_fix_fun_min_res(const DesignProblem& dp, const Element& f);

/// Fix resources, maximize functionalities, restricted to the points of f_grid.
/// Returns the maximal feasible grid points as an antichain of F^op.
Antichain query_fix_res_max_fun(const DesignProblem& dp, const Element& r, const std::vector<Element>& f_grid);

enum class BinaryOp { series, parallel, union_, intersection };

const char* to_string(BinaryOp op);
DesignProblem apply(BinaryOp op, const DesignProblem& a, const DesignProblem& b);

}  // namespace codp
