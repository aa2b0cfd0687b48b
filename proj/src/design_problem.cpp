#include "codp/design_problem.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <unordered_map>

namespace codp {

struct DesignProblem::State {
  State(Poset f, Poset r, QueryFn q, std::string n, bool m)
      : fun(std::move(f)), res(std::move(r)), fn(std::move(q)), name(std::move(n)), memoize(m) {}

  Poset fun;
  Poset res;
  QueryFn fn;
  std::string name;
  bool memoize;
  mutable std::mutex mu;
  mutable std::unordered_map<Element, QueryResult> cache;
};

DesignProblem::DesignProblem(Poset fun, Poset res, QueryFn query, std::string name, bool memoize) {
  state_ = std::make_shared<State>(std::move(fun), std::move(res), std::move(query), std::move(name), memoize);
}

const Poset& DesignProblem::fun_poset() const { return state_->fun; }
const Poset& DesignProblem::res_poset() const { return state_->res; }
const std::string& DesignProblem::name() const { return state_->name; }
bool DesignProblem::memoized() const { return state_->memoize; }

DesignProblem DesignProblem::renamed(std::string name) const {
  return DesignProblem(state_->fun, state_->res, state_->fn, std::move(name), state_->memoize);
}

QueryResult DesignProblem::evaluate(const Element& f) const {
  const State& s = *state_;
  require_member(s.fun, f, "functionality");
  if (s.memoize) {
    std::lock_guard lock(s.mu);
    if (auto it = s.cache.find(f); it != s.cache.end()) return it->second;
  }
  QueryResult r = s.fn(f);
  if (r.minimal_resources.poset() != s.res)
    throw PosetMismatchError("query of '" + s.name + "' returned an antichain over " +
                             r.minimal_resources.poset().to_string() + ", expected " + s.res.to_string());
  if (s.memoize) {
    std::lock_guard lock(s.mu);
    s.cache.emplace(f, r);
  }
  return r;
}

namespace {

using WitnessList = std::vector<Witness>;

void normalize(WitnessList& ws) {
  std::sort(ws.begin(), ws.end());
  ws.erase(std::unique(ws.begin(), ws.end()), ws.end());
  if (ws.size() > kMaxWitnesses) ws.resize(kMaxWitnesses);
}

const WitnessList* find_witnesses(const QueryResult& r, const Element& x) {
  auto it = r.witnesses.find(x);
  return it == r.witnesses.end() ? nullptr : &it->second;
}

/// Pairwise concatenation. A missing side contributes a single empty witness.
WitnessList combine(const WitnessList* a, const WitnessList* b) {
  if (!a && !b) return {};
  static const WitnessList kEmpty{Witness{}};
  const WitnessList& xs = a ? *a : kEmpty;
  const WitnessList& ys = b ? *b : kEmpty;
  WitnessList out;
  for (const auto& x : xs)
    for (const auto& y : ys) {
      Witness w = x;
      w.insert(w.end(), y.begin(), y.end());
      out.push_back(std::move(w));
    }
  normalize(out);
  return out;
}

/// Collects candidate resources together with their witnesses, then keeps
/// witnesses only for the surviving minimal elements.
class Collector {
 public:
  explicit Collector(Poset res) : res_(std::move(res)) {}

  void add(Element x, WitnessList ws) {
    if (!ws.empty()) {
      auto& slot = witnesses_[x];
      slot.insert(slot.end(), ws.begin(), ws.end());
    }
    candidates_.push_back(std::move(x));
  }

  QueryResult finish() {
    QueryResult out(minimals(res_, std::move(candidates_)));
    for (const auto& m : out.minimal_resources) {
      auto it = witnesses_.find(m);
      if (it == witnesses_.end()) continue;
      normalize(it->second);
      out.witnesses.emplace(m, std::move(it->second));
    }
    return out;
  }

 private:
  Poset res_;
  std::vector<Element> candidates_;
  std::map<Element, WitnessList> witnesses_;
};

Poset product2(const Poset& a, const Poset& b) { return Poset::product({a, b}); }

bool close(const Element& a, const Element& b, const TraceOptions& o) {
  if (a.is_scalar() && b.is_scalar()) {
    const double x = a.as_scalar(), y = b.as_scalar();
    if (x == y) return true;
    if (std::isinf(x) || std::isinf(y)) return false;
    return std::abs(x - y) <= o.abs_tol + o.rel_tol * std::max(std::abs(x), std::abs(y));
  }
  if (a.is_tuple() && b.is_tuple()) {
    if (a.items().size() != b.items().size()) return false;
    for (std::size_t i = 0; i < a.items().size(); ++i)
      if (!close(a.items()[i], b.items()[i], o)) return false;
    return true;
  }
  return a == b;
}

/// True when some real coordinate of x (w.r.t. poset p) is the top element.
bool touches_top(const Poset& p, const Element& x) {
  switch (p.kind()) {
    case Poset::Kind::nonneg_real:
      return x.is_top();
    case Poset::Kind::discrete:
      return false;
    case Poset::Kind::product:
      for (std::size_t i = 0; i < p.components().size(); ++i)
        if (touches_top(p.components()[i], x.items()[i])) return true;
      return false;
    case Poset::Kind::opposite:
      return touches_top(p.inner(), x);
  }
  return false;
}

}  // namespace

DesignProblem from_candidates(Poset fun, Poset res, std::function<std::vector<Element>(const Element&)> fn,
                              std::string name, bool memoize) {
  auto q = [res, fn = std::move(fn)](const Element& f) { return QueryResult(minimals(res, fn(f))); };
  return DesignProblem(std::move(fun), res, std::move(q), std::move(name), memoize);
}

DesignProblem from_monotone_map(Poset fun, Poset res, std::function<std::optional<Element>(const Element&)> fn,
                                std::string name, bool memoize) {
  auto q = [res, fn = std::move(fn)](const Element& f) {
    auto r = fn(f);
    return QueryResult(r ? minimals(res, {std::move(*r)}) : Antichain(res));
  };
  return DesignProblem(std::move(fun), res, std::move(q), std::move(name), memoize);
}

DesignProblem dp_from_mdpi(const ImplementationSet& m) {
  for (const auto& i : m.impls) {
    require_member(m.fun, i.prov, "prov");
    require_member(m.res, i.reqs, "reqs");
  }
  auto q = [m](const Element& f) {
    Collector c(m.res);
    for (const auto& i : m.impls) {
      if (!leq(m.fun, f, i.prov)) continue;
      c.add(i.reqs, {Witness{m.name.empty() ? i.id : m.name + ":" + i.id}});
    }
    return c.finish();
  };
  return DesignProblem(m.fun, m.res, std::move(q), m.name);
}

bool feasible(const DesignProblem& dp, const Element& f, const Element& r) {
  require_member(dp.res_poset(), r, "resource");
  return upper_set_contains(dp.query(f), r);
}

DesignProblem series(const DesignProblem& a, const DesignProblem& b) {
  require_same_poset(a.res_poset(), b.fun_poset(), "series: resources of the first vs functionalities of the second");
  auto q = [a, b](const Element& f) {
    QueryResult ra = a.evaluate(f);
    Collector c(b.res_poset());
    for (const auto& mid : ra.minimal_resources) {
      QueryResult rb = b.evaluate(mid);
      for (const auto& r : rb.minimal_resources)
        c.add(r, combine(find_witnesses(ra, mid), find_witnesses(rb, r)));
    }
    return c.finish();
  };
  return DesignProblem(a.fun_poset(), b.res_poset(), std::move(q), {}, a.memoized() && b.memoized());
}

DesignProblem parallel(const DesignProblem& a, const DesignProblem& b) {
  Poset fun = product2(a.fun_poset(), b.fun_poset());
  Poset res = product2(a.res_poset(), b.res_poset());
  auto q = [a, b, res](const Element& f) {
    QueryResult ra = a.evaluate(f[0]);
    Collector c(res);
    if (!ra.feasible()) return c.finish();
    QueryResult rb = b.evaluate(f[1]);
    for (const auto& x : ra.minimal_resources)
      for (const auto& y : rb.minimal_resources)
        c.add(tuple({x, y}), combine(find_witnesses(ra, x), find_witnesses(rb, y)));
    return c.finish();
  };
  return DesignProblem(std::move(fun), std::move(res), std::move(q), {}, a.memoized() && b.memoized());
}

DesignProblem union_of(const DesignProblem& a, const DesignProblem& b) {
  require_same_poset(a.fun_poset(), b.fun_poset(), "union: functionalities");
  require_same_poset(a.res_poset(), b.res_poset(), "union: resources");
  auto q = [a, b](const Element& f) {
    Collector c(a.res_poset());
    for (const DesignProblem* side : {&a, &b}) {
      QueryResult r = side->evaluate(f);
      for (const auto& x : r.minimal_resources) {
        const WitnessList* inner = find_witnesses(r, x);
        if (side->name().empty()) {
          c.add(x, inner ? *inner : WitnessList{});
        } else {
          WitnessList tag{Witness{side->name()}};
          c.add(x, combine(&tag, inner));
        }
      }
    }
    return c.finish();
  };
  return DesignProblem(a.fun_poset(), a.res_poset(), std::move(q), {}, a.memoized() && b.memoized());
}

DesignProblem intersection_of(const DesignProblem& a, const DesignProblem& b) {
  require_same_poset(a.fun_poset(), b.fun_poset(), "intersection: functionalities");
  require_same_poset(a.res_poset(), b.res_poset(), "intersection: resources");
  auto q = [a, b](const Element& f) {
    const Poset& res = a.res_poset();
    QueryResult ra = a.evaluate(f);
    Collector c(res);
    if (!ra.feasible()) return c.finish();
    QueryResult rb = b.evaluate(f);
    for (const auto& x : ra.minimal_resources)
      for (const auto& y : rb.minimal_resources)
        for (auto& z : minimal_upper_bounds(res, x, y))
          c.add(std::move(z), combine(find_witnesses(ra, x), find_witnesses(rb, y)));
    return c.finish();
  };
  return DesignProblem(a.fun_poset(), a.res_poset(), std::move(q), {}, a.memoized() && b.memoized());
}

DesignProblem trace(const DesignProblem& dp, TraceOptions opts) {
  const Poset& F = dp.fun_poset();
  const Poset& R = dp.res_poset();
  if (F.kind() != Poset::Kind::product || F.components().size() != 2 || R.kind() != Poset::Kind::product ||
      R.components().size() != 2)
    throw PosetMismatchError("trace: expected F = P x L and R = Q x L, got " + F.to_string() + " -> " +
                             R.to_string());
  require_same_poset(F.components()[1], R.components()[1], "trace: loop component");
  const Poset P = F.components()[0];
  const Poset Q = R.components()[0];
  const Poset L = F.components()[1];
  auto bottom = least_element(L);
  if (!bottom) throw UnsupportedError("trace: loop poset " + L.to_string() + " has no least element");

  auto q = [dp, R, Q, L, bottom = *bottom, opts](const Element& p) {
    // S: current antichain over Q x L with witnesses per element
    QueryResult state = dp.evaluate(tuple({p, bottom}));
    // true when something was dropped
    auto drop_escaped = [&](QueryResult& s) {
      std::vector<Element> kept;
      for (const auto& x : s.minimal_resources)
        if (!touches_top(L, x[1])) kept.push_back(x);
      if (kept.size() == s.minimal_resources.size()) return false;
      auto old = std::move(s.witnesses);
      s = QueryResult(minimals(R, kept));
      for (const auto& x : s.minimal_resources)
        if (auto it = old.find(x); it != old.end()) s.witnesses.emplace(x, it->second);
      return true;
    };
    auto escaped = [&](const QueryResult& before, int iter) {
      return DivergenceError("trace: every loop value escaped to top at " + p.to_string(),
                             before.minimal_resources.elements(), iter);
    };
    {
      QueryResult before = state;
      if (drop_escaped(state) && state.minimal_resources.empty()) throw escaped(before, 1);
    }
    int iter = 1;
    bool converged = false;
    while (!state.minimal_resources.empty()) {
      if (iter >= opts.max_iter) break;
      ++iter;
      Collector c(R);
      for (const auto& s : state.minimal_resources) {
        QueryResult h = dp.evaluate(tuple({p, s[1]}));
        for (const auto& x : h.minimal_resources)
          for (auto& z : minimal_upper_bounds(R, x, s)) c.add(std::move(z), combine(find_witnesses(h, x), nullptr));
      }
      QueryResult next = c.finish();
      if (drop_escaped(next) && next.minimal_resources.empty()) throw escaped(state, iter);
      const auto& a = state.minimal_resources.elements();
      const auto& b = next.minimal_resources.elements();
      converged = a.size() == b.size() &&
                  std::equal(a.begin(), a.end(), b.begin(), [&](const Element& x, const Element& y) {
                    return close(x, y, opts);
                  });
      state = std::move(next);
      if (converged) break;
    }
    if (!state.minimal_resources.empty() && !converged)
      throw DivergenceError("trace: no fixed point within " + std::to_string(opts.max_iter) + " iterations at " +
                                p.to_string(),
                            state.minimal_resources.elements(), iter);
    Collector out(Q);
    for (const auto& s : state.minimal_resources) {
      const WitnessList* ws = find_witnesses(state, s);
      out.add(s[0], ws ? *ws : WitnessList{});
    }
    return out.finish();
  };
  return DesignProblem(P, Q, std::move(q));
}

DesignProblem divergence_as_infeasible(const DesignProblem& dp) {
  auto q = [dp](const Element& f) -> QueryResult {
    try {
      return dp.evaluate(f);
    } catch (const DivergenceError&) {
      return QueryResult(dp.res_poset());
    }
  };
  return DesignProblem(dp.fun_poset(), dp.res_poset(), std::move(q), dp.name(), false);
}

QueryResult query_fix_fun_min_res(const DesignProblem& dp, const Element& f) { return dp.evaluate(f); }

Antichain query_fix_res_max_fun(const DesignProblem& dp, const Element& r, const std::vector<Element>& f_grid) {
  if (f_grid.empty()) throw DomainError("query_fix_res_max_fun: empty functionality grid");
  require_member(dp.res_poset(), r, "resource");
  std::vector<Element> ok;
  for (const auto& f : f_grid)
    if (upper_set_contains(dp.query(f), r)) ok.push_back(f);
  return minimals(Poset::opposite(dp.fun_poset()), std::move(ok));
}

const char* to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::series:
      return "series";
    case BinaryOp::parallel:
      return "parallel";
    case BinaryOp::union_:
      return "union";
    case BinaryOp::intersection:
      return "intersection";
  }
  return "?";
}

DesignProblem apply(BinaryOp op, const DesignProblem& a, const DesignProblem& b) {
  switch (op) {
    case BinaryOp::series:
      return series(a, b);
    case BinaryOp::parallel:
      return parallel(a, b);
    case BinaryOp::union_:
      return union_of(a, b);
    case BinaryOp::intersection:
      return intersection_of(a, b);
  }
  throw Error("unknown operation");
}

}  // namespace codp
